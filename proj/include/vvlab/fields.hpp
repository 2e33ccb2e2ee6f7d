#pragma once

#include <functional>
#include <vector>

#include "vvlab/geometry.hpp"

namespace vvlab {

/// Scalar density on the disk, supported in the annulus r_min <= |x| <= r_max.
/// `breaks` lists radii of circles across which the density is not smooth.
struct ScalarField2D {
    std::function<double(Point)> eval;
    double r_min = 0.0;
    double r_max = 1.0;
    std::vector<double> breaks;
};

/// Function of the radius alone, supported in [r_min, r_max].
struct RadialProfile {
    std::function<double(double)> eval;
    double r_min = 0.0;
    double r_max = 1.0;
    std::vector<double> breaks;

    double operator()(double r) const { return (r < r_min || r > r_max) ? 0.0 : eval(r); }
    ScalarField2D as_field() const;
    /// All radii where the profile may be non-smooth, support ends included.
    std::vector<double> all_breaks() const;
};

/// Vector field on the disk with the circles where it is not smooth.
struct VectorField2D {
    std::function<Vec2(Point)> eval;
    double r_min = 0.0;
    double r_max = 1.0;
    std::vector<double> breaks;
};

/// The azimuthal field u_theta(|x|) e_theta.
VectorField2D swirl_field(const RadialProfile& u_theta);

}  // namespace vvlab
