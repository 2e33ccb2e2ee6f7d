#include "vvlab/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vvlab/bessel.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/quadrature.hpp"
#include "vvlab/tolerances.hpp"

namespace vvlab {

namespace {

constexpr double kPi = std::numbers::pi;

// Panel endpoints covering [a, b], split at `breaks`, each panel at most `width` wide, or
// `band_width` inside [band_lo, band_hi].
std::vector<double> panel_points(double a, double b, std::span<const double> breaks, double width,
                                 double band_lo = 0.0, double band_hi = 0.0, double band_width = 0.0) {
    std::vector<double> cuts{a, b};
    for (double p : breaks)
        if (p > a && p < b) cuts.push_back(p);
    const bool banded = band_hi > band_lo && band_width > 0.0;
    if (banded) {
        if (band_lo > a && band_lo < b) cuts.push_back(band_lo);
        if (band_hi > a && band_hi < b) cuts.push_back(band_hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> out{cuts.front()};
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k];
        const double hi = cuts[k + 1];
        const double mid = 0.5 * (lo + hi);
        double w = width;
        if (banded && mid > band_lo && mid < band_hi) w = std::min(w, band_width);
        const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / w - 1e-9)));
        for (int i = 1; i <= n; ++i) out.push_back(i == n ? hi : lo + (hi - lo) * i / n);
    }
    return out;
}

quad::Rule rule_on(std::span<const double> pts, int order) {
    const auto& g = quad::gauss_legendre(order);
    quad::Rule r;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double mid = 0.5 * (pts[k] + pts[k + 1]);
        const double half = 0.5 * (pts[k + 1] - pts[k]);
        for (std::size_t q = 0; q < g.size(); ++q) {
            r.x.push_back(mid + half * g.x[q]);
            r.w.push_back(half * g.w[q]);
        }
    }
    return r;
}

double profile_l2(const RadialProfile& f) {
    quad::AdaptiveOptions o;
    o.abs_tol = 1e-14;
    const auto br = f.all_breaks();
    return std::sqrt(2.0 * kPi *
                     quad::adaptive([&](double r) { return f(r) * f(r) * r; }, f.r_min, f.r_max, br, o));
}

// Radial step derivatives: chi', and Lap chi = chi'' + chi'/r.
double d_chi(const Cutoff& chi, double r) { return chi.jet(r).d1; }
double lap_chi(const Cutoff& chi, double r) {
    const Jet j = chi.jet(r);
    return j.d2 + j.d1 / r;
}

}  // namespace

double PlanarField::mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * h * h;
}

PlanarField sample_planar(const std::function<double(Point)>& f, double half_width, int n) {
    if (n < 2) throw ParameterError("planar lattice needs at least two points per side");
    PlanarField p;
    p.h = 2.0 * half_width / (n - 1);
    p.x0 = p.y0 = -half_width;
    p.nx = p.ny = n;
    p.values.resize(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) p.at(i, j) = f(p.point(i, j));
    return p;
}

PlanarField heat_convolve(const PlanarField& f, double nu_t) {
    if (nu_t < 0.0) throw ParameterError("diffusion time must be nonnegative");
    if (nu_t == 0.0) return f;
    if (std::sqrt(4.0 * nu_t) < f.h) throw ResolutionError("heat kernel narrower than the lattice spacing");
    const int reach = static_cast<int>(std::ceil(12.0 * std::sqrt(2.0 * nu_t) / f.h));
    std::vector<double> w(2 * reach + 1);
    double sum = 0.0;
    for (int k = -reach; k <= reach; ++k) {
        const double x = k * f.h;
        w[k + reach] = std::exp(-x * x / (4.0 * nu_t));
        sum += w[k + reach];
    }
    for (double& v : w) v /= sum;

    PlanarField tmp = f;
    for (int j = 0; j < f.ny; ++j)
        for (int i = 0; i < f.nx; ++i) {
            double s = 0.0;
            for (int k = std::max(-reach, -i); k <= std::min(reach, f.nx - 1 - i); ++k) s += w[k + reach] * f.at(i + k, j);
            tmp.at(i, j) = s;
        }
    PlanarField out = f;
    for (int j = 0; j < f.ny; ++j)
        for (int i = 0; i < f.nx; ++i) {
            double s = 0.0;
            for (int k = std::max(-reach, -j); k <= std::min(reach, f.ny - 1 - j); ++k) s += w[k + reach] * tmp.at(i, j + k);
            out.at(i, j) = s;
        }
    return out;
}

double radial_heat(const RadialProfile& f, double nu_t, double r, int order, const RadialHeatOptions& opt) {
    if (order != 0 && order != 1) throw ParameterError("radial heat kernel order must be 0 or 1");
    if (nu_t < 0.0) throw ParameterError("diffusion time must be nonnegative");
    if (nu_t == 0.0) return f(r);
    const double sd = std::sqrt(2.0 * nu_t);
    const double lo = std::max(f.r_min, r - opt.window * sd);
    const double hi = std::min(f.r_max, r + opt.window * sd);
    if (!(hi > lo)) return 0.0;
    const auto br = f.all_breaks();
    const auto pts = panel_points(lo, hi, br, std::min(0.5 * sd, opt.max_panel), opt.band_lo, opt.band_hi,
                                  opt.band_panel);
    const auto& g = quad::gauss_legendre(opt.order);
    const double inv = 1.0 / (2.0 * nu_t);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double mid = 0.5 * (pts[k] + pts[k + 1]);
        const double half = 0.5 * (pts[k + 1] - pts[k]);
        double part = 0.0;
        for (std::size_t q = 0; q < g.size(); ++q) {
            const double s = mid + half * g.x[q];
            const double d = r - s;
            part += g.w[q] * std::exp(-d * d * 0.5 * inv) * scaled_bessel_i(order, r * s * inv) * f.eval(s) * s;
        }
        sum += half * part;
    }
    return inv * sum;
}

double maximize_unimodal(const std::function<double(double)>& f, double a, double b, double tol) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return std::max({f(a), f(b), f(0.5 * (a + b))});
}

double sup_power_exp(int p) {
    if (p < 1) throw ParameterError("power must be positive");
    return maximize_unimodal([p](double x) { return std::pow(x, p) * std::exp(-x); }, 0.0, 10.0 * p);
}

Cutoff collar_cutoff(double eps) {
    if (!(eps > 0.0 && eps < 1.0 / 3.0)) throw GeometryError("collar width must lie in (0, 1/3)");
    return Cutoff(1.0 - 2.0 * eps, 1.0 - eps);
}

RadialProfile cutoff_vorticity(const SheetFamily& family, const Cutoff& chi) {
    const double w = 0.5 * family.width();
    return RadialProfile{[family, chi](double r) { return chi.value(r) * family.vorticity(r); }, 0.5 - w,
                         std::min(0.5 + w, chi.a_out()), {}};
}

RadialProfile cutoff_velocity(const SheetFamily& family, const Cutoff& chi) {
    const double w = 0.5 * family.width();
    return RadialProfile{[family, chi](double r) { return chi.value(r) * family.velocity(r); }, 0.5 - w,
                         chi.a_out(), {0.5 + w, chi.a_in()}};
}

RadialProfile cutoff_cross_term(const SheetFamily& family, const Cutoff& chi) {
    return RadialProfile{[family, chi](double r) { return family.velocity(r) * d_chi(chi, r); }, chi.a_in(),
                         chi.a_out(), {}};
}

Claim1Entry claim1_entry(const SheetFamily& family, double nu, std::span<const double> times, const Cutoff& chi) {
    Claim1Entry e;
    e.index = family.index();
    e.nu = nu;
    e.times.assign(times.begin(), times.end());
    e.initial_mass = family.mass();
    e.min_value = std::numeric_limits<double>::infinity();

    const auto w0 = cutoff_vorticity(family, chi);
    const auto g1 = cutoff_velocity(family, chi);
    const auto g2 = cutoff_cross_term(family, chi);
    const double width = family.width();
    const double sd_max = std::sqrt(2.0 * nu * (times.empty() ? 0.0 : times.back()));
    RadialHeatOptions opt;
    opt.band_lo = w0.r_min;
    opt.band_hi = w0.r_max;
    opt.band_panel = width / 16.0;
    // The L1 monotonicity check needs near-roundoff accuracy; the L2 pieces do not.
    RadialHeatOptions popt = opt;
    opt.order = 16;
    const double reach = opt.window * sd_max;

    // One radial rule for every time, fine enough for the narrowest profile.
    const double fine = std::min(width / 16.0, 1.0 / 128.0);
    const auto i_pts =
        panel_points(std::max(0.0, w0.r_min - reach), w0.r_max + reach, w0.all_breaks(), fine);
    const auto i_rule = rule_on(i_pts, 16);
    const auto v_pts = panel_points(0.0, chi.a_out() + reach, g1.all_breaks(), 1.0 / 128.0,
                                    w0.r_min - reach, w0.r_max + reach, fine);
    const auto v_rule = rule_on(v_pts, 8);

    e.velocity_l2 = profile_l2(family.velocity_profile());
    e.piece1_bound = e.velocity_l2;
    e.piece2_bound = e.velocity_l2 * chi.max_grad();

    for (double t : times) {
        const double nt = nu * t;
        const double sd = std::sqrt(2.0 * nt);
        double l1 = 0.0;
        for (std::size_t q = 0; q < i_rule.size(); ++q) {
            const double r = i_rule.x[q];
            if (r < w0.r_min - opt.window * sd || r > w0.r_max + opt.window * sd) continue;
            const double v = radial_heat(w0, nt, r, 0, opt);
            e.min_value = std::min(e.min_value, v);
            l1 += i_rule.w[q] * std::abs(v) * r;
        }
        e.l1.push_back(2.0 * kPi * l1);

        double p1 = 0.0, p2 = 0.0;
        for (std::size_t q = 0; q < v_rule.size(); ++q) {
            const double r = v_rule.x[q];
            const double a = radial_heat(g1, nt, r, 1, popt);
            const double b = radial_heat(g2, nt, r, 0, popt);
            p1 += v_rule.w[q] * a * a * r;
            p2 += v_rule.w[q] * b * b * r;
        }
        e.piece1 = std::max(e.piece1, std::sqrt(2.0 * kPi * p1));
        e.piece2 = std::max(e.piece2, std::sqrt(2.0 * kPi * p2));
    }
    for (std::size_t k = 0; k + 1 < e.l1.size(); ++k)
        if (e.l1[k + 1] > e.l1[k] * (1.0 + tol::roundoff_relative)) e.l1_nonincreasing = false;
    const double slack = 1.0 + tol::roundoff_relative;
    const double l1_max = e.l1.empty() ? 0.0 : *std::max_element(e.l1.begin(), e.l1.end());
    e.pass = e.min_value >= -1e-10 && e.l1_nonincreasing && l1_max <= e.initial_mass * slack &&
             e.piece1 <= e.piece1_bound * slack && e.piece2 <= e.piece2_bound * slack;
    return e;
}

namespace {

// Shared time loop: sum over Gauss nodes s in (0, t) of weight * inner(k, theta, tau), where the
// sample interval is [t_k, t_{k+1}] and theta the position inside it.
template <class Inner>
double duhamel_time_sum(const Trajectory& traj, std::size_t j, Inner&& inner) {
    const auto& g = quad::gauss_legendre(4);
    const double t = traj.times[j];
    double sum = 0.0;
    for (std::size_t k = 0; k < j; ++k) {
        const double a = traj.times[k];
        const double b = traj.times[k + 1];
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        for (std::size_t q = 0; q < g.size(); ++q) {
            const double s = mid + half * g.x[q];
            sum += half * g.w[q] * inner(k, (s - a) / (b - a), t - s);
        }
    }
    return sum;
}

quad::AdaptiveOptions collar_options() {
    quad::AdaptiveOptions o;
    o.abs_tol = 1e-300;
    o.rel_tol = 1e-8;
    o.relative_to_magnitude = true;
    o.max_panels = 20000;
    o.max_depth = 30;
    return o;
}

std::vector<double> collar_points(const Cutoff& chi) {
    std::vector<double> p;
    for (int i = 0; i <= 16; ++i) p.push_back(chi.a_in() + (chi.a_out() - chi.a_in()) * i / 16.0);
    return p;
}

}  // namespace

DuhamelValue duhamel_terms(const Trajectory& traj, std::size_t j, double rho, const Cutoff& chi) {
    if (j >= traj.time_count()) throw ParameterError("time index out of range");
    const double nu = traj.nu;
    const auto pts = collar_points(chi);
    const auto opt = collar_options();
    auto omega = [&](std::size_t k, double theta, double s) {
        return (1.0 - theta) * traj.vorticity[k].at(s) + theta * traj.vorticity[k + 1].at(s);
    };
    const double a_part = duhamel_time_sum(traj, j, [&](std::size_t k, double theta, double tau) {
        const double inv = 1.0 / (2.0 * nu * tau);
        return quad::adaptive_seeded(
            [&](double s) {
                const double d = rho - s;
                return inv * std::exp(-d * d * 0.5 * inv) * scaled_bessel_i(0, rho * s * inv) * omega(k, theta, s) *
                       lap_chi(chi, s) * s;
            },
            pts, opt);
    });
    const double b_part = duhamel_time_sum(traj, j, [&](std::size_t k, double theta, double tau) {
        const double inv = 1.0 / (2.0 * nu * tau);
        return quad::adaptive_seeded(
            [&](double s) {
                const double d = rho - s;
                const double z = rho * s * inv;
                const double radial = rho * scaled_bessel_i(1, z) - s * scaled_bessel_i(0, z);
                return inv / tau * std::exp(-d * d * 0.5 * inv) * radial * omega(k, theta, s) * d_chi(chi, s) * s;
            },
            pts, opt);
    });
    DuhamelValue v;
    v.A = nu * a_part;
    v.B = -2.0 * v.A - b_part;
    return v;
}

double duhamel_b_direct(const Trajectory& traj, std::size_t j, double rho, const Cutoff& chi) {
    if (j >= traj.time_count()) throw ParameterError("time index out of range");
    const double nu = traj.nu;
    const double h = traj.grid()->max_spacing();
    const auto pts = collar_points(chi);
    const auto opt = collar_options();
    auto domega = [&](std::size_t k, double theta, double s) {
        auto w = [&](double x) { return (1.0 - theta) * traj.vorticity[k].at(x) + theta * traj.vorticity[k + 1].at(x); };
        return (w(s + h) - w(s - h)) / (2.0 * h);
    };
    return 2.0 * nu * duhamel_time_sum(traj, j, [&](std::size_t k, double theta, double tau) {
        const double inv = 1.0 / (2.0 * nu * tau);
        return quad::adaptive_seeded(
            [&](double s) {
                const double d = rho - s;
                return inv * std::exp(-d * d * 0.5 * inv) * scaled_bessel_i(0, rho * s * inv) * domega(k, theta, s) *
                       d_chi(chi, s) * s;
            },
            pts, opt);
    });
}

Claim2Entry claim2_entry(const Trajectory& traj, double eps, const CompactSubdomain& K, double final_time) {
    const Cutoff chi = collar_cutoff(eps);
    if (!(K.radius() < 1.0 - 3.0 * eps)) throw GeometryError("K must lie inside {|x| < 1 - 3 eps}");
    Claim2Entry e;
    e.index = traj.family_index;
    e.nu = traj.nu;
    e.eps = eps;
    for (const auto& w : traj.vorticity) e.vorticity_l1 = std::max(e.vorticity_l1, l1_norm(w));

    const double nu = traj.nu;
    const double common = final_time * e.vorticity_l1;
    const double termA = nu / (kPi * eps * eps) * sup_power_exp(1) * common * chi.max_laplacian();
    const double termB = nu / (kPi * eps * eps * eps) * sup_power_exp(2) * common * chi.max_grad();
    e.bound_A = termA;
    e.bound_B = termA + termB;
    e.derived_bound_B = 2.0 * termA + 4.0 * termB;

    const auto lattice = center_lattice(K, 0.05);
    for (std::size_t j = 0; j < traj.time_count(); ++j) {
        if (!(traj.times[j] > 0.0)) continue;
        for (double rho : lattice) {
            const auto v = duhamel_terms(traj, j, rho, chi);
            e.sup_A = std::max(e.sup_A, std::abs(v.A));
            e.sup_B = std::max(e.sup_B, std::abs(v.B));
            e.sup_II = std::max(e.sup_II, std::abs(v.A + v.B));
        }
    }
    e.pass = e.sup_A <= e.bound_A && e.sup_B <= e.bound_B;
    return e;
}

double log_log_slope(std::span<const double> nus, std::span<const double> values) {
    if (nus.size() != values.size()) throw ParameterError("slope inputs differ in length");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < nus.size(); ++i) {
        if (!(values[i] > 0.0) || !(nus[i] > 0.0)) continue;
        const double x = std::log(nus[i]);
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

}  // namespace vvlab
