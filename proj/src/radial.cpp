#include "vvlab/radial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vvlab/bessel.hpp"
#include "vvlab/cutoffs.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/quadrature.hpp"

namespace vvlab {

RadialGrid::RadialGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 3) throw ParameterError("radial grid needs at least 3 nodes");
    if (nodes_.front() != 0.0 || nodes_.back() != 1.0) throw ParameterError("radial grid must start at 0 and end at 1");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (!(nodes_[i] > nodes_[i - 1])) throw ParameterError("radial grid nodes must increase strictly");
}

RadialGrid RadialGrid::uniform(int intervals) {
    if (intervals < 2) throw ParameterError("radial grid needs at least 2 intervals");
    std::vector<double> r(intervals + 1);
    for (int i = 0; i <= intervals; ++i) r[i] = static_cast<double>(i) / intervals;
    return RadialGrid(std::move(r));
}

RadialGrid RadialGrid::clustered(int intervals) {
    if (intervals < 2) throw ParameterError("radial grid needs at least 2 intervals");
    std::vector<double> r(intervals + 1);
    for (int i = 0; i <= intervals; ++i) r[i] = std::sin(0.5 * std::numbers::pi * i / intervals);
    r.front() = 0.0;
    r.back() = 1.0;
    return RadialGrid(std::move(r));
}

double RadialGrid::max_spacing() const {
    double h = 0.0;
    for (std::size_t i = 1; i < nodes_.size(); ++i) h = std::max(h, nodes_[i] - nodes_[i - 1]);
    return h;
}

std::size_t RadialGrid::locate(double r) const {
    if (r <= 0.0) return 0;
    if (r >= 1.0) return nodes_.size() - 2;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

std::size_t RadialGrid::count_within(double center, double half_width) const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(),
                                                  [&](double r) { return std::abs(r - center) < half_width; }));
}

GridPtr make_grid(RadialGrid grid) { return std::make_shared<const RadialGrid>(std::move(grid)); }

double RadialField::at(double r) const {
    if (r < 0.0 || r > 1.0) return 0.0;
    const RadialGrid& g = *grid;
    const std::size_t i = g.locate(r);
    const double t = (r - g[i]) / (g[i + 1] - g[i]);
    return (1.0 - t) * values[i] + t * values[i + 1];
}

RadialProfile RadialField::profile() const {
    RadialProfile p;
    p.eval = [field = *this](double r) { return field.at(r); };
    return p;
}

RadialField sample(const RadialProfile& f, GridPtr grid, FieldKind kind) {
    RadialField out{grid, std::vector<double>(grid->size()), kind};
    for (std::size_t i = 0; i < grid->size(); ++i) out.values[i] = f((*grid)[i]);
    return out;
}

double l1_norm(const RadialField& f, double a) {
    const RadialGrid& g = *f.grid;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < g.size() && g[i] < a; ++i) {
        const double hi = std::min(g[i + 1], a);
        const double fa = std::abs(f.values[i]) * g[i];
        const double fb = std::abs(f.at(hi)) * hi;
        sum += 0.5 * (hi - g[i]) * (fa + fb);
    }
    return 2.0 * std::numbers::pi * sum;
}

double l2_norm(const RadialField& f) {
    const RadialGrid& g = *f.grid;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double fa = f.values[i] * f.values[i] * g[i];
        const double fb = f.values[i + 1] * f.values[i + 1] * g[i + 1];
        sum += 0.5 * (g[i + 1] - g[i]) * (fa + fb);
    }
    return std::sqrt(2.0 * std::numbers::pi * sum);
}

RadialField velocity_from_vorticity_radial(const RadialField& omega) {
    const RadialGrid& g = *omega.grid;
    RadialField u{omega.grid, std::vector<double>(g.size(), 0.0), FieldKind::swirl_velocity};
    double circulation = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) {
        circulation += 0.5 * (g[i] - g[i - 1]) * (omega.values[i - 1] * g[i - 1] + omega.values[i] * g[i]);
        u.values[i] = circulation / g[i];
    }
    return u;
}

RadialField vorticity_from_velocity(const RadialField& u_theta) {
    const RadialGrid& g = *u_theta.grid;
    const auto& u = u_theta.values;
    const std::size_t n = g.size();
    RadialField w{u_theta.grid, std::vector<double>(n, 0.0), FieldKind::vorticity};
    auto ru = [&](std::size_t i) { return g[i] * u[i]; };
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h1 = g[i] - g[i - 1];
        const double h2 = g[i + 1] - g[i];
        const double d = -h2 / (h1 * (h1 + h2)) * ru(i - 1) + (h2 - h1) / (h1 * h2) * ru(i) +
                         h1 / (h2 * (h1 + h2)) * ru(i + 1);
        w.values[i] = d / g[i];
    }
    {
        // At r = 0, omega = 2 u'(0).
        const double h1 = g[1] - g[0];
        const double h2 = g[2] - g[1];
        const double du = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[0] + (h1 + h2) / (h1 * h2) * u[1] -
                          h1 / (h2 * (h1 + h2)) * u[2];
        w.values[0] = 2.0 * du;
    }
    {
        const std::size_t m = n - 1;
        const double h1 = g[m] - g[m - 1];
        const double h2 = g[m - 1] - g[m - 2];
        const double d = (2.0 * h1 + h2) / (h1 * (h1 + h2)) * ru(m) - (h1 + h2) / (h1 * h2) * ru(m - 1) +
                         h1 / (h2 * (h1 + h2)) * ru(m - 2);
        w.values[m] = d / g[m];
    }
    return w;
}

double ModeExpansion::velocity(double r, double nu_t) const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
        if (coefficients[k] != 0.0)
            s += coefficients[k] * std::exp(-zeros[k] * zeros[k] * nu_t) * bessel_j1(zeros[k] * r);
    return s;
}

double ModeExpansion::vorticity(double r, double nu_t) const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
        if (coefficients[k] != 0.0)
            s += coefficients[k] * zeros[k] * std::exp(-zeros[k] * zeros[k] * nu_t) * bessel_j0(zeros[k] * r);
    return s;
}

ModeExpansion ModeExpansion::advanced(double nu, double t) const {
    ModeExpansion out = *this;
    for (std::size_t k = 0; k < size(); ++k) out.coefficients[k] *= std::exp(-nu * zeros[k] * zeros[k] * t);
    return out;
}

double ModeExpansion::energy(double nu_t) const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
        const double c = coefficients[k] * std::exp(-zeros[k] * zeros[k] * nu_t);
        s += c * c * norms[k];
    }
    return std::numbers::pi * s;
}

double ModeExpansion::enstrophy(double nu_t) const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
        const double c = coefficients[k] * std::exp(-zeros[k] * zeros[k] * nu_t);
        s += zeros[k] * zeros[k] * c * c * norms[k];
    }
    return 2.0 * std::numbers::pi * s;
}

ModeExpansion ModeExpansion::zero(int m) {
    ModeExpansion e;
    e.zeros = bessel_j1_zeros(m);
    e.norms.resize(m);
    for (int k = 0; k < m; ++k) {
        const double j0 = bessel_j0(e.zeros[k]);
        e.norms[k] = 0.5 * j0 * j0;
    }
    e.coefficients.assign(m, 0.0);
    return e;
}

ModeExpansion ModeExpansion::single(int index, int m) {
    if (index < 1 || index > m) throw ParameterError("mode index out of range");
    ModeExpansion e = zero(m);
    e.coefficients[index - 1] = 1.0;
    return e;
}

ModeExpansion project_modes(const RadialProfile& u_theta, int m, const ProjectionOptions& opt) {
    ModeExpansion e = ModeExpansion::zero(m);
    const double density = std::max(64.0, e.zeros.back() / 4.0);
    std::vector<double> cuts{0.0};
    for (double b : u_theta.all_breaks())
        if (b > 0.0 && b < 1.0) cuts.push_back(b);
    cuts.push_back(1.0);
    quad::Rule rule;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const int panels = static_cast<int>(std::ceil((cuts[i + 1] - cuts[i]) * density));
        rule.append(quad::composite(cuts[i], cuts[i + 1], panels, opt.order));
    }
    std::vector<double> values(rule.size());
    double norm_sq = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double r = rule.x[q];
        const double u = u_theta(r);
        values[q] = u;
        norm_sq += rule.w[q] * r * u * u;
        if (u == 0.0) continue;
        const double wu = rule.w[q] * r * u;
        for (int k = 0; k < m; ++k) e.coefficients[k] += wu * bessel_j1(e.zeros[k] * r);
    }
    for (int k = 0; k < m; ++k) e.coefficients[k] /= e.norms[k];

    double err_sq = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double r = rule.x[q];
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += e.coefficients[k] * bessel_j1(e.zeros[k] * r);
        const double d = values[q] - s;
        err_sq += rule.w[q] * r * d * d;
    }
    e.reconstruction_error = norm_sq > 0.0 ? std::sqrt(err_sq / norm_sq) : std::sqrt(err_sq);
    e.truncation_warning = e.reconstruction_error > opt.tolerance;
    return e;
}

ModeExpansion project_modes(const RadialField& u_theta, int m, const ProjectionOptions& opt) {
    if (u_theta.kind != FieldKind::swirl_velocity) throw ParameterError("project_modes expects a swirl-velocity field");
    return project_modes(u_theta.profile(), m, opt);
}

int mode_count_for(int n) { return std::max(64, 6 * n); }

Trajectory evolve(const ModeExpansion& initial, double nu, std::span<const double> times, GridPtr grid) {
    if (!(nu > 0.0)) throw ParameterError("viscosity must be positive");
    if (times.empty() || times.front() != 0.0) throw ParameterError("time samples must start at 0");
    for (std::size_t j = 1; j < times.size(); ++j)
        if (!(times[j] > times[j - 1])) throw ParameterError("time samples must increase strictly");

    const RadialGrid& g = *grid;
    const std::size_t n = g.size();
    const std::size_t m = initial.size();
    std::vector<double> basis(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) basis[i * m + k] = bessel_j1(initial.zeros[k] * g[i]);

    Trajectory traj;
    traj.nu = nu;
    traj.times.assign(times.begin(), times.end());
    traj.truncation_warning = initial.truncation_warning;
    traj.modes = initial;
    std::vector<double> c(m);
    for (double t : times) {
        for (std::size_t k = 0; k < m; ++k)
            c[k] = initial.coefficients[k] * std::exp(-nu * initial.zeros[k] * initial.zeros[k] * t);
        RadialField u{grid, std::vector<double>(n), FieldKind::swirl_velocity};
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            const double* row = &basis[i * m];
            for (std::size_t k = 0; k < m; ++k) s += row[k] * c[k];
            u.values[i] = s;
        }
        traj.vorticity.push_back(vorticity_from_velocity(u));
        traj.velocity.push_back(std::move(u));
    }
    return traj;
}

std::vector<double> geometric_times(double final_time, double first_positive, int positive_count) {
    if (!(final_time > 0.0) || !(first_positive > 0.0) || first_positive > final_time || positive_count < 1)
        throw ParameterError("invalid geometric time grid");
    std::vector<double> t{0.0};
    if (positive_count == 1) {
        t.push_back(final_time);
        return t;
    }
    const double ratio = std::log(final_time / first_positive) / (positive_count - 1);
    for (int j = 0; j < positive_count - 1; ++j) t.push_back(first_positive * std::exp(ratio * j));
    t.push_back(final_time);
    return t;
}

namespace {

double bump_integral() {
    static const double value = quad::adaptive([](double z) { return bump(z); }, -1.0, 1.0,
                                               quad::AdaptiveOptions{1e-16, 1e-14, 20});
    return value;
}

}  // namespace

SheetFamily::SheetFamily(int n, double mass) : n_(n), mass_(mass) {
    if (n < 2) throw ParameterError("sheet family index must be at least 2");
    if (!(mass > 0.0)) throw ParameterError("sheet family mass must be positive");
    // 2 pi int bump(2n(r - 1/2)) r dr = pi I / (2n), the odd part of r vanishing.
    amplitude_ = 2.0 * n * mass / (std::numbers::pi * bump_integral());
}

double SheetFamily::vorticity(double r) const { return amplitude_ * bump(2.0 * n_ * (r - 0.5)); }

double SheetFamily::velocity(double r) const {
    const double lo = 0.5 - 0.5 / n_;
    const double hi = 0.5 + 0.5 / n_;
    if (r <= lo) return 0.0;
    if (r >= hi) return mass_ / (2.0 * std::numbers::pi * r);
    const quad::Rule rule = quad::composite(lo, r, 4, 16);
    double circulation = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) circulation += rule.w[q] * vorticity(rule.x[q]) * rule.x[q];
    return circulation / r;
}

RadialProfile SheetFamily::vorticity_profile() const {
    RadialProfile p;
    p.eval = [self = *this](double r) { return self.vorticity(r); };
    p.r_min = 0.5 - 0.5 / n_;
    p.r_max = 0.5 + 0.5 / n_;
    return p;
}

RadialProfile SheetFamily::velocity_profile() const {
    RadialProfile p;
    p.eval = [self = *this](double r) { return self.velocity(r); };
    p.r_min = 0.5 - 0.5 / n_;
    p.r_max = 1.0;
    p.breaks = {0.5 + 0.5 / n_};
    return p;
}

double SheetFamily::limit_velocity(double r) { return (r > 0.5 && r <= 1.0) ? 1.0 / r : 0.0; }

RadialProfile SheetFamily::limit_profile() {
    RadialProfile p;
    p.eval = [](double r) { return limit_velocity(r); };
    p.r_min = 0.5;
    p.r_max = 1.0;
    return p;
}

SheetFamily build_sheet_family(int n, const RadialGrid& grid, double mass) {
    SheetFamily family(n, mass);
    const std::size_t across = grid.count_within(0.5, 0.5 / n);
    if (across < 8) {
        throw ResolutionError("grid resolves the sheet bump of width 1/" + std::to_string(n) + " with only " +
                              std::to_string(across) + " nodes (need 8)");
    }
    return family;
}

}  // namespace vvlab
