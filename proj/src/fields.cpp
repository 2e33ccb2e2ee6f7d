#include "vvlab/fields.hpp"

#include <algorithm>

namespace vvlab {

ScalarField2D RadialProfile::as_field() const {
    ScalarField2D field;
    field.eval = [profile = *this](Point x) { return profile(norm(x)); };
    field.r_min = r_min;
    field.r_max = r_max;
    field.breaks = breaks;
    return field;
}

std::vector<double> RadialProfile::all_breaks() const {
    std::vector<double> out = breaks;
    if (r_min > 0.0) out.push_back(r_min);
    if (r_max < 1.0) out.push_back(r_max);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

VectorField2D swirl_field(const RadialProfile& u_theta) {
    VectorField2D field;
    field.eval = [u_theta](Point x) {
        const double r = norm(x);
        if (r == 0.0) return Vec2{};
        return (u_theta(r) / r) * perp(x);
    };
    field.r_min = u_theta.r_min;
    field.r_max = u_theta.r_max;
    field.breaks = u_theta.breaks;
    return field;
}

}  // namespace vvlab
