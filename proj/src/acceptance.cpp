#include "vvlab/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include "vvlab/errors.hpp"
#include "vvlab/kernels.hpp"
#include "vvlab/tolerances.hpp"

namespace vvlab::acceptance {

namespace {

constexpr double kPi = std::numbers::pi;
// First positive zero of J_1.
constexpr double kLambda1 = 3.8317059702075125;

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a, b, c);
    return buf;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Point in_disk(std::mt19937_64& rng, Point c, double R) {
    const double r = R * std::sqrt(uniform01(rng));
    return c + polar(r, 2.0 * kPi * uniform01(rng));
}

}  // namespace

CriterionResult kernel_identities(std::uint64_t seed) {
    CriterionResult out{1, "kernel identities", false, 0.0, limits::green_symmetry, ""};
    std::mt19937_64 rng(seed);
    double sym = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Point x = in_disk(rng, {0.0, 0.0}, 0.999);
        const Point y = in_disk(rng, {0.0, 0.0}, 0.999);
        if (norm2(x - y) < 1e-12) continue;
        sym = std::max(sym, std::abs(green_disk(x, y) - green_disk(y, x)));
    }
    double boundary = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Point x = polar(1.0, 2.0 * kPi * uniform01(rng));
        const Point y = in_disk(rng, {0.0, 0.0}, 0.999);
        boundary = std::max(boundary, std::abs(green_disk(x, y)));
    }
    double weak_fine = 0.0, weak_coarse = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double R = 0.2 + 0.2 * uniform01(rng);
        const Point c = in_disk(rng, {0.0, 0.0}, 0.95 - R);
        const TestFunction phi(c, R, 0.01, 0.09);
        const Point y = in_disk(rng, c, 0.8 * R);
        weak_coarse = std::max(weak_coarse, std::abs(green_laplacian_pairing(phi, y, 0) - phi.spatial(y)));
        weak_fine = std::max(weak_fine, std::abs(green_laplacian_pairing(phi, y, 1) - phi.spatial(y)));
    }
    out.measured = sym;
    out.pass = sym < limits::green_symmetry && boundary < limits::green_boundary &&
               weak_fine < limits::green_weak_identity;
    out.detail = format("max |G(x,y)-G(y,x)| = %.3g; max |G| on boundary = %.3g; ", sym, boundary) +
                 format("weak identity error %.3g -> %.3g after refinement (limit 1e-5)", weak_coarse, weak_fine);
    return out;
}

PlateauProfile aux_plateau_profile(const TestFunction& phi, std::uint64_t seed, int samples) {
    std::mt19937_64 rng(seed);
    struct Sample {
        Point x;
        double angle;
        double u;
    };
    std::vector<Sample> base;
    while (static_cast<int>(base.size()) < samples) {
        const Point x = in_disk(rng, phi.center(), phi.radius());
        base.push_back({x, 2.0 * kPi * uniform01(rng), uniform01(rng)});
    }
    PlateauProfile p;
    for (int k = 1; k <= 6; ++k) {
        const double lo = std::pow(10.0, -k);
        double best = 0.0;
        for (const Sample& s : base) {
            const Point y = s.x + polar(lo * std::pow(10.0, s.u), s.angle);
            if (norm2(y) >= 1.0) continue;
            best = std::max(best, std::abs(aux_kernel(s.x, y, phi.spatial_grad(s.x), phi.spatial_grad(y))));
        }
        p.decade_floor.push_back(lo);
        p.sup.push_back(best);
    }
    return p;
}

CriterionResult aux_plateau(std::uint64_t seed) {
    CriterionResult out{2, "H boundedness plateau", false, 0.0, limits::aux_plateau_growth, ""};
    double worst = 0.0;
    std::string detail;
    const TestFunction probes[] = {TestFunction({0.0, 0.0}, 0.5, 0.01, 0.09),
                                   TestFunction({0.3, -0.2}, 0.4, 0.01, 0.09)};
    for (const auto& phi : probes) {
        const auto p = aux_plateau_profile(phi, seed);
        // Running sup over distances >= 1e-4 and >= 1e-6.
        double s4 = 0.0, s6 = 0.0;
        for (std::size_t k = 0; k < p.sup.size(); ++k) {
            if (k < 4) s4 = std::max(s4, p.sup[k]);
            s6 = std::max(s6, p.sup[k]);
        }
        const double growth = s4 > 0.0 ? s6 / s4 - 1.0 : std::numeric_limits<double>::infinity();
        worst = std::max(worst, growth);
        detail += format("sup %.6g (d >= 1e-4) -> %.6g (d >= 1e-6); ", s4, s6);
    }
    out.measured = worst;
    out.pass = worst < limits::aux_plateau_growth;
    out.detail = detail + format("max relative growth %.3g", worst);
    return out;
}

std::vector<double> sample_energies(const Trajectory& traj) {
    std::vector<double> e;
    for (const auto& u : traj.velocity) {
        const double l2 = l2_norm(u);
        e.push_back(0.5 * l2 * l2);
    }
    return e;
}

CriterionResult solver_exactness(std::span<const Trajectory> trajectories) {
    CriterionResult out{3, "solver exactness", false, 0.0, limits::mode_decay, ""};
    // Single first mode on its own grid.
    const double nu = 1e-2;
    const std::vector<double> times{0.0, 0.01, 0.05, 0.1};
    const auto single = evolve(ModeExpansion::single(1, 1), nu, times, make_grid(RadialGrid::uniform(512)));
    double decay = 0.0;
    for (std::size_t j = 1; j < times.size(); ++j) {
        const double expected = std::exp(-nu * kLambda1 * kLambda1 * times[j]);
        const auto& u0 = single.velocity.front().values;
        const auto& uj = single.velocity[j].values;
        for (std::size_t i = 0; i < u0.size(); ++i)
            if (std::abs(u0[i]) > 1e-3) decay = std::max(decay, std::abs(uj[i] / u0[i] - expected));
    }
    bool monotone = true;
    double slip = 0.0;
    for (const auto& t : trajectories) {
        std::vector<double> e;
        if (t.modes) {
            for (double s : t.times) e.push_back(t.modes->energy(t.nu * s));
        } else {
            e = sample_energies(t);
        }
        for (std::size_t j = 1; j < e.size(); ++j)
            if (e[j] > e[j - 1] * (1.0 + tol::roundoff_relative)) monotone = false;
        for (std::size_t j = 0; j < t.time_count(); ++j)
            if (t.times[j] > 0.0) slip = std::max(slip, std::abs(t.velocity[j].values.back()));
    }
    out.measured = decay;
    out.pass = decay < limits::mode_decay && monotone && slip < limits::no_slip;
    out.detail = format("single-mode decay error %.3g; max |u(1,t)| = %.3g; ", decay, slip) +
                 (monotone ? "energy nonincreasing on " : "energy increases somewhere on ") +
                 std::to_string(trajectories.size()) + " trajectories";
    return out;
}

CriterionResult sheet_limit(std::span<const double> d) {
    CriterionResult out{4, "vortex-sheet limit", false, 0.0, limits::sheet_final_ratio, ""};
    if (d.size() < 2) {
        out.detail = "needs at least two members";
        return out;
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < d.size(); ++i)
        if (!(d[i] < d[i - 1])) decreasing = false;
    out.measured = d.back() / d.front();
    out.pass = decreasing && out.measured < limits::sheet_final_ratio;
    out.detail = format("sup_t L2 distance %.4g -> %.4g, ratio %.4g; ", d.front(), d.back(), out.measured) +
                 (decreasing ? "strictly decreasing" : "not strictly decreasing");
    return out;
}

CriterionResult l1_bound(std::span<const double> l1_sups, std::span<const double> masses) {
    CriterionResult out{5, "L1(K) vorticity bound", false, 0.0, limits::l1_factor * limits::l1_slack, ""};
    if (l1_sups.size() != masses.size() || l1_sups.empty()) throw ParameterError("l1_bound needs one mass per member");
    double worst = 0.0;
    for (std::size_t i = 0; i < l1_sups.size(); ++i) worst = std::max(worst, l1_sups[i] / masses[i]);
    out.measured = worst;
    out.pass = worst <= out.threshold;
    out.detail = format("max sup_t ||omega||_L1(K) / initial mass = %.6g (limit %.3g)", worst, out.threshold);
    return out;
}

CriterionResult maximal_decay(const MaximalFunctionCurve& curve) {
    CriterionResult out{6, "maximal-function decay", false, 0.0, limits::maximal_ratio, ""};
    if (curve.sup_values.size() < 2) {
        out.detail = "needs at least two radii";
        return out;
    }
    const double big = curve.sup_values.front();
    const double small = curve.sup_values.back();
    out.measured = big > 0.0 ? small / big : std::numeric_limits<double>::infinity();
    out.pass = small <= limits::maximal_ratio * big;
    out.detail = format("sup-over-n curve %.6g at r = %.4g, ", small, curve.radii.back()) +
                 format("%.6g at r = %.4g, ratio %.4g", big, curve.radii.front(), out.measured);
    return out;
}

CriterionResult claim2(std::span<const Claim2Entry> entries) {
    CriterionResult out{7, "Duhamel bounds and linear scaling", false, 0.0, limits::slope_window, ""};
    bool bounded = !entries.empty();
    std::vector<double> nus, sa, sb;
    for (const auto& e : entries) {
        bounded = bounded && e.pass;
        nus.push_back(e.nu);
        sa.push_back(e.sup_A);
        sb.push_back(e.sup_B);
    }
    const double slope_a = log_log_slope(nus, sa);
    const double slope_b = log_log_slope(nus, sb);
    const double dev = std::max(std::abs(slope_a - limits::slope_target), std::abs(slope_b - limits::slope_target));
    out.measured = std::isnan(dev) ? std::numeric_limits<double>::infinity() : dev;
    out.pass = bounded && out.measured <= limits::slope_window;
    out.detail = std::string(bounded ? "sup|A|, sup|B| below the bounds for every member; "
                                     : "a measured sup exceeds its bound; ") +
                 format("log-log slopes A %.4g, B %.4g (target 1 +- 0.1)", slope_a, slope_b);
    return out;
}

CriterionResult claim1(std::span<const Claim1Entry> entries) {
    CriterionResult out{8, "heat part positivity and L1 decay", false, 0.0, limits::claim1_floor, ""};
    double min_value = std::numeric_limits<double>::infinity();
    bool monotone = !entries.empty();
    for (const auto& e : entries) {
        min_value = std::min(min_value, e.min_value);
        monotone = monotone && e.l1_nonincreasing;
    }
    out.measured = min_value;
    out.pass = monotone && min_value >= limits::claim1_floor;
    out.detail = format("min I_n = %.3g; ", min_value) +
                 (monotone ? "L1 nonincreasing for every member" : "L1 increases for some member");
    return out;
}

bool halves_or_at_roundoff(const LevelPair& p) {
    const double floor = limits::residual_floor * p.magnitude;
    if (std::abs(p.coarse) <= floor && std::abs(p.fine) <= floor) return true;
    return std::abs(p.fine) * limits::halving_factor <= std::abs(p.coarse);
}

CriterionResult residual_vanishing(std::span<const LevelPair> velocity, std::span<const LevelPair> vorticity) {
    CriterionResult out{9, "weak-residual vanishing", false, 0.0, limits::halving_factor, ""};
    int ok = 0, roundoff = 0;
    double worst_ratio = 0.0;
    auto scan = [&](std::span<const LevelPair> ps) {
        for (const auto& p : ps) {
            if (halves_or_at_roundoff(p)) ++ok;
            const double floor = limits::residual_floor * p.magnitude;
            if (std::abs(p.coarse) <= floor && std::abs(p.fine) <= floor) {
                ++roundoff;
            } else if (p.fine != 0.0) {
                worst_ratio = std::max(worst_ratio, std::abs(p.fine / p.coarse));
            }
        }
    };
    scan(velocity);
    scan(vorticity);
    const int total = static_cast<int>(velocity.size() + vorticity.size());
    out.measured = worst_ratio;
    out.pass = total > 0 && ok == total;
    out.detail = std::to_string(ok) + "/" + std::to_string(total) + " residual pairs pass (" +
                 std::to_string(roundoff) + " at roundoff on both levels)" +
                 format("; worst fine/coarse ratio above roundoff %.3g", worst_ratio);
    return out;
}

CriterionResult equivalence(std::span<const EquivalenceInstance> instances) {
    CriterionResult out{10, "velocity/vorticity equivalence", false, 0.0, limits::equivalence_factor, ""};
    bool all = !instances.empty();
    double worst = 0.0;
    for (const auto& i : instances) {
        const double tol = limits::equivalence_factor * std::max(i.tol_vel, i.tol_vort);
        const double gap = std::abs(i.r_vel + i.r_vort);
        all = all && gap <= tol;
        worst = std::max(worst, tol > 0.0 ? gap / tol : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
    }
    out.measured = worst;
    out.pass = all;
    out.detail = std::to_string(instances.size()) + " instances; max |R_vel + R_vort| / (2 max tol) = " +
                 format("%.3g", worst);
    return out;
}

CriterionResult chi_independence(std::span<const CutoffResidual> r) {
    CriterionResult out{11, "cutoff independence", false, 0.0, limits::equivalence_factor, ""};
    bool all = r.size() >= 2;
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double tol = limits::equivalence_factor * std::max(r[i].tolerance, r[j].tolerance);
            const double gap = std::abs(r[i].value - r[j].value);
            all = all && gap <= tol;
            worst = std::max(worst, tol > 0.0 ? gap / tol : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
        }
    out.measured = worst;
    out.pass = all;
    out.detail = std::to_string(r.size()) + " cutoffs; max pairwise gap / (2 max tol) = " + format("%.3g", worst);
    return out;
}

}  // namespace vvlab::acceptance
