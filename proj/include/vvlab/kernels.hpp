#pragma once

#include "vvlab/fields.hpp"
#include "vvlab/geometry.hpp"
#include "vvlab/test_function.hpp"

namespace vvlab {

/// Dirichlet Green's function of the unit disk (Delta_x G = delta_y, G = 0 on the boundary).
double green_disk(Point x, Point y);

/// K(x, y) = perpendicular gradient of green_disk in x.
Vec2 biot_savart_kernel(Point x, Point y);

/// The image (smooth) part of the kernel: K minus (1/2pi) (x - y)^perp / |x - y|^2.
Vec2 biot_savart_image(Point x, Point y);

/// H(x, y) = [K(x, y) . grad_x + K(y, x) . grad_y] / 2 for given gradients at x and y.
double aux_kernel(Point x, Point y, Vec2 grad_x, Vec2 grad_y);

/// H for a test function at time t.
double aux_test_function(const TestFunction& phi, double t, Point x, Point y);

/// int G(x, y) Lap psi(x) dx for psi the spatial factor of phi and y inside its support, in polar
/// coordinates about y: periodic trapezoid with 64 * 2^level angles, adaptive Gauss-Kronrod along
/// each ray. Equals psi(y) in the limit. Throws DomainError unless y lies in the support.
double green_laplacian_pairing(const TestFunction& phi, Point y, int level = 0);

struct VelocityQuadrature {
    double abs_tol = 1e-11;
    double rel_tol = 1e-9;
    unsigned max_depth = 14;
};

/// u(x) = integral of K(x, y) omega(y) dy, in polar coordinates centred at x.
Vec2 velocity_from_vorticity(const ScalarField2D& omega, Point x, const VelocityQuadrature& opt = {});

}  // namespace vvlab
