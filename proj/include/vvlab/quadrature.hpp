#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "vvlab/errors.hpp"

namespace vvlab::quad {

/// Nodes and weights of a 1D rule.
struct Rule {
    std::vector<double> x;
    std::vector<double> w;

    std::size_t size() const { return x.size(); }
    void append(const Rule& other);
};

/// n-point Gauss-Legendre rule on [-1, 1]. Cached; safe to call concurrently.
const Rule& gauss_legendre(int n);

/// Gauss rule of the given order on each of `panels` equal panels of [a, b].
Rule composite(double a, double b, int panels, int order);

/// As above, after first splitting [a, b] at the breakpoints that fall strictly inside it.
Rule composite(double a, double b, std::span<const double> breaks, int panels, int order);

/// Equal-weight rule for a periodic integrand on [0, 2 pi).
Rule periodic_trapezoid(int n, double offset = 0.0);

struct AdaptiveOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    /// Smallest panel is (b - a) / 2^max_depth.
    unsigned max_depth = 15;
    std::size_t max_panels = 4000;
    /// Measure rel_tol against int |f| instead of |int f| (for cancelling integrands).
    bool relative_to_magnitude = false;
};

/// Globally adaptive Gauss-Kronrod (7/15 points) with bisection of the worst panel, starting
/// from the panels between consecutive entries of `points` (increasing). The error target
/// applies to the whole sum. Throws QuadratureFailure when the tolerance is not met within the
/// panel limits.
template <class F>
double adaptive_seeded(F&& f, std::span<const double> points, const AdaptiveOptions& opt = {}) {
    if (points.size() < 2 || points.front() == points.back()) return 0.0;
    const double a = points.front();
    const double b = points.back();
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    using G = boost::math::quadrature::gauss<double, 7>;
    const auto& xk = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = G::weights();

    struct Panel {
        double lo, hi, value, error, magnitude;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    auto evaluate = [&](double lo, double hi) {
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        const double f0 = f(mid);
        double k = wk[0] * f0;
        double g = wg[0] * f0;
        double mass = std::abs(k);
        for (std::size_t i = 1; i < xk.size(); ++i) {
            const double fl = f(mid - half * xk[i]);
            const double fr = f(mid + half * xk[i]);
            k += wk[i] * (fl + fr);
            mass += wk[i] * (std::abs(fl) + std::abs(fr));
            if (i % 2 == 0) g += wg[i / 2] * (fl + fr);
        }
        double err = std::abs(half * (k - g));
        // Differences at roundoff level carry no information about the truncation error.
        if (err <= 50.0 * std::numeric_limits<double>::epsilon() * half * mass) err = 0.0;
        return Panel{lo, hi, half * k, err, half * mass};
    };

    const double min_width = std::abs(b - a) * std::ldexp(1.0, -static_cast<int>(opt.max_depth));
    std::priority_queue<Panel> heap;
    double total = 0.0;
    double error = 0.0;
    double magnitude = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (!(points[i + 1] > points[i])) continue;
        const Panel p = evaluate(points[i], points[i + 1]);
        total += p.value;
        error += p.error;
        magnitude += p.magnitude;
        heap.push(p);
    }
    auto scale = [&] { return opt.relative_to_magnitude ? magnitude : std::abs(total); };
    while (error > std::max(opt.abs_tol, opt.rel_tol * scale())) {
        if (!std::isfinite(total) || heap.size() >= opt.max_panels || std::abs(heap.top().hi - heap.top().lo) < min_width) {
            char msg[160];
            std::snprintf(msg, sizeof msg, "adaptive quadrature did not converge on [%.6g, %.6g]: error estimate %.3g",
                          a, b, error);
            throw QuadratureFailure(msg);
        }
        const Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        const Panel left = evaluate(worst.lo, mid);
        const Panel right = evaluate(mid, worst.hi);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        magnitude += left.magnitude + right.magnitude - worst.magnitude;
        heap.push(left);
        heap.push(right);
        if (error < 0.0) error = 0.0;
    }
    if (!std::isfinite(total)) throw QuadratureFailure("adaptive quadrature produced a non-finite value");
    // Re-sum to avoid drift from the running updates.
    double sum = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        heap.pop();
    }
    return sum;
}

/// Adaptive integral over [a, b].
template <class F>
double adaptive(F&& f, double a, double b, const AdaptiveOptions& opt = {}) {
    if (a == b) return 0.0;
    const double pts[2] = {a, b};
    return adaptive_seeded(f, pts, opt);
}

/// Adaptive integral over [a, b] with known non-smooth points.
template <class F>
double adaptive(F&& f, double a, double b, std::span<const double> breaks, const AdaptiveOptions& opt = {}) {
    double sum = 0.0;
    double lo = a;
    for (double p : breaks) {
        if (p <= lo || p >= b) continue;
        sum += adaptive(f, lo, p, opt);
        lo = p;
    }
    return sum + adaptive(f, lo, b, opt);
}

}  // namespace vvlab::quad
