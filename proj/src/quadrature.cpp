#include "vvlab/quadrature.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace vvlab::quad {

void Rule::append(const Rule& other) {
    x.insert(x.end(), other.x.begin(), other.x.end());
    w.insert(w.end(), other.w.begin(), other.w.end());
}

namespace {

Rule make_gauss_legendre(int n) {
    Rule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // Recompute the derivative at the converged node for the weight.
        double p0 = 1.0;
        double p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = w;
        rule.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.x[n / 2] = 0.0;
    return rule;
}

}  // namespace

const Rule& gauss_legendre(int n) {
    if (n < 1) throw ParameterError("Gauss-Legendre order must be positive");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<Rule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<Rule>(make_gauss_legendre(n));
    return *slot;
}

Rule composite(double a, double b, int panels, int order) {
    const Rule& base = gauss_legendre(order);
    Rule rule;
    if (!(b > a) || panels < 1) return rule;
    rule.x.reserve(static_cast<std::size_t>(panels) * order);
    rule.w.reserve(static_cast<std::size_t>(panels) * order);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double hi = (p + 1 == panels) ? b : lo + h;
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        for (int i = 0; i < order; ++i) {
            rule.x.push_back(mid + half * base.x[i]);
            rule.w.push_back(half * base.w[i]);
        }
    }
    return rule;
}

Rule composite(double a, double b, std::span<const double> breaks, int panels, int order) {
    std::vector<double> cuts{a};
    for (double p : breaks)
        if (p > a && p < b) cuts.push_back(p);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    Rule rule;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) rule.append(composite(cuts[i], cuts[i + 1], panels, order));
    return rule;
}

Rule periodic_trapezoid(int n, double offset) {
    Rule rule;
    rule.x.resize(n);
    rule.w.assign(n, 2.0 * std::numbers::pi / n);
    for (int j = 0; j < n; ++j) rule.x[j] = offset + 2.0 * std::numbers::pi * j / n;
    return rule;
}

}  // namespace vvlab::quad
