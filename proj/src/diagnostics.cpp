#include "vvlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vvlab/errors.hpp"
#include "vvlab/quadrature.hpp"

namespace vvlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Adds the Gauss rule on [a, b] applied to g.
template <class G>
double gauss_on(const quad::Rule& rule, double a, double b, G&& g) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) sum += rule.w[q] * g(mid + half * rule.x[q]);
    return half * sum;
}

// Points in (lo, hi) where |f| may fail to be smooth: grid nodes and sign changes.
std::vector<double> kinks(const RadialField& f, double lo, double hi) {
    const RadialGrid& g = *f.grid;
    std::vector<double> out{lo};
    std::size_t i = g.locate(lo);
    for (; i + 1 < g.size() && g[i] < hi; ++i) {
        const double a = g[i];
        const double b = g[i + 1];
        const double fa = f.values[i];
        const double fb = f.values[i + 1];
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
            const double z = a + (b - a) * fa / (fa - fb);
            if (z > out.back() && z < hi) out.push_back(z);
        }
        if (b > out.back() && b < hi) out.push_back(b);
    }
    out.push_back(hi);
    return out;
}

double arc_length(double s, double d, double rho) {
    if (s <= rho - d) return kTwoPi * s;
    if (s <= 0.0 || d <= 0.0) return 0.0;
    const double c = std::clamp((s * s + d * d - rho * rho) / (2.0 * s * d), -1.0, 1.0);
    return 2.0 * s * std::acos(c);
}

}  // namespace

CompactSubdomain::CompactSubdomain(double a) : a_(a) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("compact subdomain radius must lie in (0, 1)");
}

double l1_on_compact(const Trajectory& traj, const CompactSubdomain& K) {
    double best = 0.0;
    for (const auto& w : traj.vorticity) best = std::max(best, l1_norm(w, K.radius()));
    return best;
}

double ball_integral(const RadialField& f, double d, double rho) {
    if (!(rho > 0.0)) throw ParameterError("ball radius must be positive");
    if (d < 0.0) throw ParameterError("center distance must be nonnegative");
    const auto& rule = quad::gauss_legendre(4);
    auto absf = [&](double s) { return std::abs(f.at(s)); };
    double total = 0.0;

    // Circles entirely inside the ball.
    const double full_hi = std::min(1.0, rho - d);
    if (full_hi > 0.0) {
        const auto pts = kinks(f, 0.0, full_hi);
        for (std::size_t k = 0; k + 1 < pts.size(); ++k)
            total += gauss_on(rule, pts[k], pts[k + 1], [&](double s) { return absf(s) * kTwoPi * s; });
    }

    // Circles crossing the sphere. The weight has square-root endpoints; s = c - h cos(theta)
    // removes them.
    const double lo = std::abs(d - rho);
    const double hi = std::min(1.0, d + rho);
    if (hi > lo && d > 0.0) {
        const double c = 0.5 * (lo + hi);
        const double h = 0.5 * (hi - lo);
        const auto pts = kinks(f, lo, hi);
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            const double ta = std::acos(std::clamp((c - pts[k]) / h, -1.0, 1.0));
            const double tb = std::acos(std::clamp((c - pts[k + 1]) / h, -1.0, 1.0));
            total += gauss_on(rule, ta, tb, [&](double th) {
                const double s = c - h * std::cos(th);
                return absf(s) * arc_length(s, d, rho) * h * std::sin(th);
            });
        }
    }
    return total;
}

std::vector<double> center_lattice(const CompactSubdomain& K, double step) {
    if (!(step > 0.0)) throw ParameterError("lattice step must be positive");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor(K.radius() / step + 1e-9));
    for (std::size_t i = 0; i <= count; ++i) out.push_back(static_cast<double>(i) * step);
    if (out.back() < K.radius() - 1e-12) out.push_back(K.radius());
    return out;
}

double maximal_function(const RadialField& f, const CompactSubdomain& K, double rho) {
    double best = 0.0;
    for (double d : center_lattice(K)) best = std::max(best, ball_integral(f, d, rho));
    return best;
}

std::vector<double> maximal_function_values(const Trajectory& traj, const CompactSubdomain& K,
                                            std::span<const double> radii, TimeAggregate mode) {
    if (traj.vorticity.empty()) throw ParameterError("trajectory has no samples");
    const double h = traj.grid()->max_spacing();
    for (double r : radii)
        if (r < 2.0 * h) throw ResolutionError("ball radius below two grid spacings");
    std::vector<double> out;
    out.reserve(radii.size());
    for (double r : radii) {
        std::vector<double> m(traj.time_count());
        for (std::size_t j = 0; j < m.size(); ++j) m[j] = maximal_function(traj.vorticity[j], K, r);
        double v = 0.0;
        if (mode == TimeAggregate::supremum) {
            v = *std::max_element(m.begin(), m.end());
        } else {
            for (std::size_t j = 0; j + 1 < m.size(); ++j)
                v += 0.5 * (traj.times[j + 1] - traj.times[j]) * (m[j] + m[j + 1]);
        }
        out.push_back(v);
    }
    return out;
}

MaximalFunctionCurve assemble_curve(std::span<const double> radii, std::vector<std::vector<double>> per_n) {
    MaximalFunctionCurve c;
    c.radii.assign(radii.begin(), radii.end());
    c.sup_values.assign(radii.size(), 0.0);
    for (const auto& row : per_n) {
        if (row.size() != radii.size()) throw ParameterError("curve row length differs from radius count");
        for (std::size_t j = 0; j < row.size(); ++j) c.sup_values[j] = std::max(c.sup_values[j], row[j]);
    }
    c.per_n = std::move(per_n);
    return c;
}

MaximalFunctionCurve maximal_function_curve(std::span<const Trajectory> trajs, const CompactSubdomain& K,
                                            std::span<const double> radii, TimeAggregate mode) {
    for (std::size_t j = 0; j + 1 < radii.size(); ++j)
        if (!(radii[j] > radii[j + 1])) throw ParameterError("radii must be strictly decreasing");
    std::vector<std::vector<double>> rows;
    for (const auto& t : trajs) rows.push_back(maximal_function_values(t, K, radii, mode));
    return assemble_curve(radii, std::move(rows));
}

double weak_pairing(const Trajectory& traj, const RadialProfile& reference, const TestFunction& phi) {
    if (traj.velocity.empty()) return 0.0;
    const auto& times = traj.times;
    phi.validate(times.back());

    // Time weights: int g(t) hat_j(t) dt for the piecewise-linear interpolant.
    const std::size_t J = times.size();
    std::vector<double> cw(J, 0.0);
    quad::AdaptiveOptions topt;
    topt.abs_tol = 1e-15;
    topt.rel_tol = 1e-12;
    for (std::size_t j = 0; j + 1 < J; ++j) {
        const double a = std::max(times[j], phi.t0());
        const double b = std::min(times[j + 1], phi.t1());
        if (!(b > a)) continue;
        const double dt = times[j + 1] - times[j];
        cw[j] += quad::adaptive([&](double t) { return phi.time_factor(t) * (times[j + 1] - t) / dt; }, a, b, topt);
        cw[j + 1] += quad::adaptive([&](double t) { return phi.time_factor(t) * (t - times[j]) / dt; }, a, b, topt);
    }

    // Radial nodes over the annulus met by the support, split at grid nodes and reference breaks.
    const Point c = phi.center();
    const double cn = norm(c);
    const double R = phi.radius();
    const double r_lo = std::max(0.0, cn - R);
    const double r_hi = std::min(1.0, cn + R);
    std::vector<double> pts{r_lo};
    const RadialGrid& g = *traj.grid();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] > r_lo && g[i] < r_hi) pts.push_back(g[i]);
    for (double b : reference.all_breaks())
        if (b > r_lo && b < r_hi) pts.push_back(b);
    pts.push_back(r_hi);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    const auto& rr = quad::gauss_legendre(3);
    const auto& ra = quad::gauss_legendre(32);
    const double theta_c = std::atan2(c.x2, c.x1);
    std::vector<double> nodes, weights;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double mid = 0.5 * (pts[k] + pts[k + 1]);
        const double half = 0.5 * (pts[k + 1] - pts[k]);
        for (std::size_t q = 0; q < rr.size(); ++q) {
            const double r = mid + half * rr.x[q];
            // m(r) = int over the circle of d(psi)/dr.
            double m = 0.0;
            auto drpsi = [&](double th) {
                const Point e{std::cos(th), std::sin(th)};
                return dot(phi.spatial_grad(r * e), e);
            };
            if (r + cn <= R) {
                const auto tr = quad::periodic_trapezoid(64);
                for (std::size_t p = 0; p < tr.size(); ++p) m += tr.w[p] * drpsi(tr.x[p]);
            } else if (cn > 0.0 && r > 0.0) {
                const double beta =
                    std::acos(std::clamp((r * r + cn * cn - R * R) / (2.0 * r * cn), -1.0, 1.0));
                for (int panel = 0; panel < 4; ++panel) {
                    const double a = theta_c - beta + panel * 0.5 * beta;
                    m += gauss_on(ra, a, a + 0.5 * beta, drpsi);
                }
            }
            nodes.push_back(r);
            weights.push_back(half * rr.w[q] * r * m);
        }
    }

    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        if (cw[j] == 0.0) continue;
        double s = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q)
            s += weights[q] * (traj.velocity[j].at(nodes[q]) - reference(nodes[q]));
        total += cw[j] * s;
    }
    return total;
}

double l2_distance(const RadialField& u, const RadialProfile& reference) {
    const RadialGrid& g = *u.grid;
    std::vector<double> pts = g.nodes();
    for (double b : reference.all_breaks())
        if (b > 0.0 && b < 1.0) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const auto& rule = quad::gauss_legendre(4);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
        sum += gauss_on(rule, pts[k], pts[k + 1], [&](double r) {
            const double e = u.at(r) - reference(r);
            return e * e * r;
        });
    return std::sqrt(kTwoPi * sum);
}

WeakStarDistance weak_star_l2_distance(const Trajectory& traj, const RadialProfile& reference,
                                       std::span<const TestFunction> battery) {
    if (battery.empty()) throw ParameterError("test-field battery is empty");
    WeakStarDistance out;
    for (const auto& phi : battery)
        out.pairing_residual = std::max(out.pairing_residual, std::abs(weak_pairing(traj, reference, phi)));
    for (const auto& u : traj.velocity) out.l2_distance = std::max(out.l2_distance, l2_distance(u, reference));
    return out;
}

std::vector<TestFunction> make_pairing_battery(std::size_t count, double final_time, unsigned long long seed,
                                               double outer) {
    std::mt19937_64 rng(seed);
    auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<TestFunction> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double R = 0.1 + 0.15 * uniform();
        const double rc = (outer - R) * std::sqrt(uniform());
        const double ang = 2.0 * std::numbers::pi * uniform();
        const double t0 = final_time * (0.05 + 0.2 * uniform());
        const double t1 = final_time * (0.75 + 0.2 * uniform());
        out.emplace_back(Point{rc * std::cos(ang), rc * std::sin(ang)}, R, t0, t1);
    }
    return out;
}

LogDecayFit log_decay_check(const RadialField& f, std::span<const double> radii, const CompactSubdomain& K) {
    if (radii.size() < 2) throw ParameterError("log-decay fit needs at least two radii");
    std::vector<double> r(radii.begin(), radii.end());
    std::sort(r.begin(), r.end(), std::greater<>());
    if (!(r.back() > 0.0) || !(r.front() < 1.0)) throw ParameterError("radii must lie in (0, 1)");
    if (r.front() / r.back() < 100.0) throw ParameterError("radii must span at least two decades");
    const double h = f.grid->max_spacing();
    if (r.back() < 2.0 * h) throw ResolutionError("ball radius below two grid spacings");

    LogDecayFit fit;
    fit.radii = r;
    for (double rho : r) fit.values.push_back(maximal_function(f, K, rho));
    const double vmax = *std::max_element(fit.values.begin(), fit.values.end());
    if (vmax < 1e-14) {
        fit.degenerate = true;
        return fit;
    }
    auto g = [](double rho) { return 1.0 / std::sqrt(std::abs(std::log(rho))); };
    const std::size_t half = (r.size() + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) fit.constant = std::max(fit.constant, fit.values[i] / g(r[i]));
    for (std::size_t i = half; i < r.size(); ++i)
        fit.residual = std::max(fit.residual, std::max(0.0, fit.values[i] - fit.constant * g(r[i])) / vmax);
    fit.concentration = fit.residual > 0.1;
    return fit;
}

ConvergenceEntry diagnose_member(const Trajectory& traj, int index, const CompactSubdomain& K,
                                 std::span<const double> radii, const RadialProfile& reference,
                                 std::span<const TestFunction> battery, TimeAggregate mode) {
    ConvergenceEntry e;
    e.index = index;
    e.nu = traj.nu;
    e.l1_sup = l1_on_compact(traj, K);
    const auto w = weak_star_l2_distance(traj, reference, battery);
    e.l2_distance = w.l2_distance;
    e.pairing_residual = w.pairing_residual;
    e.maximal_values = maximal_function_values(traj, K, radii, mode);
    return e;
}

}  // namespace vvlab
