#pragma once

#include "vvlab/geometry.hpp"

namespace vvlab {

/// Value and first two derivatives of a function of one variable.
struct Jet {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// The bump exp(-1/(1 - s^2)) on |s| < 1, zero elsewhere.
double bump(double s);

/// C-infinity step equal to 1 for s <= 0 and 0 for s >= 1, built from `bump`.
Jet smooth_step(double s);

/// Radial transition from 1 (r <= inner) to 0 (r >= outer); inner may be 0.
class RadialStep {
public:
    RadialStep(double inner, double outer);

    double value(double r) const;
    Jet jet(double r) const;
    double inner() const { return inner_; }
    double outer() const { return outer_; }

    double value(Point x) const { return value(norm(x)); }
    Vec2 grad(Point x) const;
    double laplacian(Point x) const;

private:
    double inner_;
    double outer_;
};

/// chi: 1 on {r <= a_in}, 0 on {r >= a_out}.
class Cutoff : public RadialStep {
public:
    Cutoff(double a_in, double a_out);

    double a_in() const { return inner(); }
    double a_out() const { return outer(); }
    /// Distance from {r <= radius} to the set where 1 - chi is nonzero.
    double separation(double support_radius) const { return a_in() - support_radius; }
    double max_grad() const;
    double max_laplacian() const;
};

Cutoff make_cutoff(double a_in, double a_out);

/// zeta_k(x) = k^2 zeta(k x), zeta = C bump(2|x|), unit mass, support radius 1/(2k).
class Mollifier {
public:
    explicit Mollifier(int k);

    int k() const { return k_; }
    double radius() const { return 0.5 / k_; }
    double base(double r) const;
    double operator()(Point z) const { return scaled(norm(z)); }
    double scaled(double r) const;
    static double normalization();

private:
    int k_;
};

Mollifier make_mollifier(int k);

/// rho_k: 1 where dist(x, boundary) >= 2/k, 0 where dist(x, boundary) <= 1/k.
class BoundaryCutoff : public RadialStep {
public:
    explicit BoundaryCutoff(int k);

    int k() const { return k_; }
    /// The constant C in max |grad rho_k| = C k.
    static double gradient_constant();

private:
    int k_;
};

BoundaryCutoff make_boundary_cutoff(int k);

}  // namespace vvlab
