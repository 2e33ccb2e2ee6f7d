#pragma once

#include "vvlab/geometry.hpp"

namespace vvlab {

/// phi(t, x) = amplitude * g(t) * psi(x), with g a bump on (t0, t1) and psi the bump
/// exp(-1/(1 - |x - c|^2 / R^2)) on the disk B(c, R).
class TestFunction {
public:
    TestFunction(Point center, double radius, double t0, double t1, double amplitude = 1.0);

    double value(double t, Point x) const { return time_factor(t) * spatial(x); }
    double dt(double t, Point x) const { return time_derivative(t) * spatial(x); }
    Vec2 grad(double t, Point x) const { return time_factor(t) * spatial_grad(x); }
    Vec2 perp_grad(double t, Point x) const { return perp(grad(t, x)); }
    Sym2 hessian(double t, Point x) const;
    double laplacian(double t, Point x) const { return trace(hessian(t, x)); }

    double time_factor(double t) const;
    double time_derivative(double t) const;
    /// amplitude * psi(x) and its derivatives.
    double spatial(Point x) const;
    Vec2 spatial_grad(Point x) const;
    Sym2 spatial_hessian(Point x) const;

    Point center() const { return center_; }
    double radius() const { return radius_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    double amplitude() const { return amplitude_; }
    /// Largest |x| on the spatial support.
    double outer_radius() const { return norm(center_) + radius_; }
    bool in_support(Point x) const { return norm2(x - center_) < radius_ * radius_; }
    /// Throws SupportError unless the support closure lies in (0, T) x (open disk).
    void validate(double final_time) const;

private:
    Point center_;
    double radius_;
    double t0_;
    double t1_;
    double amplitude_;
};

}  // namespace vvlab
