#include "vvlab/cutoffs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vvlab/errors.hpp"

namespace vvlab {

namespace {

// f(s) = bump(1 - s) = exp(-1 / (s (2 - s))) on (0, 1], with derivatives.
Jet edge(double s) {
    if (s <= 0.0) return {};
    const double p = s * (2.0 - s);
    const double f = std::exp(-1.0 / p);
    if (f == 0.0) return {};
    const double dp = 2.0 - 2.0 * s;
    const double g1 = dp / (p * p);
    const double g2 = -2.0 / (p * p) - 2.0 * dp * dp / (p * p * p);
    return {f, g1 * f, (g2 + g1 * g1) * f};
}

}  // namespace

double bump(double s) {
    const double q = 1.0 - s * s;
    return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

Jet smooth_step(double s) {
    if (s <= 0.0) return {1.0, 0.0, 0.0};
    if (s >= 1.0) return {0.0, 0.0, 0.0};
    const Jet a = edge(s);
    const Jet b0 = edge(1.0 - s);
    const Jet n{b0.v, -b0.d1, b0.d2};
    const Jet d{a.v + n.v, a.d1 + n.d1, a.d2 + n.d2};
    const double v = n.v / d.v;
    const double d1 = (n.d1 - v * d.d1) / d.v;
    const double d2 = (n.d2 - 2.0 * d1 * d.d1 - v * d.d2) / d.v;
    return {v, d1, d2};
}

RadialStep::RadialStep(double inner, double outer) : inner_(inner), outer_(outer) {
    if (!(inner >= 0.0) || !(inner < outer)) {
        throw ParameterError("radial step needs 0 <= inner < outer, got " + std::to_string(inner) + ", " +
                             std::to_string(outer));
    }
}

double RadialStep::value(double r) const {
    if (r <= inner_) return 1.0;
    if (r >= outer_) return 0.0;
    return smooth_step((r - inner_) / (outer_ - inner_)).v;
}

Jet RadialStep::jet(double r) const {
    const double w = outer_ - inner_;
    const Jet s = smooth_step((r - inner_) / w);
    return {s.v, s.d1 / w, s.d2 / (w * w)};
}

Vec2 RadialStep::grad(Point x) const {
    const double r = norm(x);
    if (r <= inner_ || r >= outer_) return {};
    return (jet(r).d1 / r) * x;
}

double RadialStep::laplacian(Point x) const {
    const double r = norm(x);
    if (r <= inner_ || r >= outer_) return 0.0;
    const Jet j = jet(r);
    return j.d2 + j.d1 / r;
}

namespace {

double checked_inner(double a_in, double a_out) {
    if (!(a_in < a_out)) throw ParameterError("cutoff needs a_in < a_out");
    if (!(a_in > 0.0) || !(a_out < 1.0)) throw ParameterError("cutoff needs 0 < a_in < a_out < 1");
    return a_in;
}

int checked_index(int k) {
    if (k < 2) throw ParameterError("boundary cutoff needs k >= 2");
    return k;
}

}  // namespace

Cutoff::Cutoff(double a_in, double a_out) : RadialStep(checked_inner(a_in, a_out), a_out) {}

double Cutoff::max_grad() const {
    double m = 0.0;
    const int n = 4000;
    for (int i = 1; i < n; ++i) {
        const double r = a_in() + (a_out() - a_in()) * i / n;
        m = std::max(m, std::abs(jet(r).d1));
    }
    return m;
}

double Cutoff::max_laplacian() const {
    double m = 0.0;
    const int n = 4000;
    for (int i = 1; i < n; ++i) {
        const double r = a_in() + (a_out() - a_in()) * i / n;
        const Jet j = jet(r);
        m = std::max(m, std::abs(j.d2 + j.d1 / r));
    }
    return m;
}

Cutoff make_cutoff(double a_in, double a_out) { return Cutoff(a_in, a_out); }

Mollifier::Mollifier(int k) : k_(k) {
    if (k < 1) throw ParameterError("mollifier index must be positive");
}

double Mollifier::normalization() {
    // 2 pi int_0^{1/2} bump(2 s) s ds = (pi / 4) (1/e - E1(1)), with E1(1) = -Ei(-1).
    static const double c = 4.0 / (std::numbers::pi * (std::exp(-1.0) + std::expint(-1.0)));
    return c;
}

double Mollifier::base(double r) const { return normalization() * bump(2.0 * r); }

double Mollifier::scaled(double r) const { return static_cast<double>(k_) * k_ * base(k_ * r); }

Mollifier make_mollifier(int k) { return Mollifier(k); }

BoundaryCutoff::BoundaryCutoff(int k)
    : RadialStep(1.0 - 2.0 / checked_index(k), 1.0 - 1.0 / k), k_(k) {}

double BoundaryCutoff::gradient_constant() {
    static const double c = [] {
        double m = 0.0;
        const int n = 20000;
        for (int i = 1; i < n; ++i) m = std::max(m, std::abs(smooth_step(static_cast<double>(i) / n).d1));
        return m;
    }();
    return c;
}

BoundaryCutoff make_boundary_cutoff(int k) { return BoundaryCutoff(k); }

}  // namespace vvlab
