#include "vvlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vvlab/errors.hpp"
#include "vvlab/quadrature.hpp"
#include "vvlab/tolerances.hpp"

namespace vvlab {

namespace {

constexpr double kInv2Pi = 0.5 * std::numbers::inv_pi;

void check_point(Point x) {
    if (!(norm2(x) <= 1.0 + tol::disk_slack)) {
        throw DomainError("point (" + std::to_string(x.x1) + ", " + std::to_string(x.x2) +
                          ") lies outside the closed unit disk");
    }
}

double check_pair(Point x, Point y) {
    check_point(x);
    check_point(y);
    const double d2 = norm2(x - y);
    if (d2 < tol::coincident * tol::coincident) throw CoincidentPointsError("coincident points in kernel evaluation");
    return d2;
}

Vec2 image_part(Point x, Point y, double d2) {
    const double denom = d2 + (1.0 - norm2(x)) * (1.0 - norm2(y));
    return (-kInv2Pi / denom) * perp(norm2(y) * x - y);
}

}  // namespace

double green_disk(Point x, Point y) {
    const double d2 = check_pair(x, y);
    const double a = std::max(0.0, 1.0 - norm2(x));
    const double b = std::max(0.0, 1.0 - norm2(y));
    return -0.5 * kInv2Pi * std::log1p(a * b / d2);
}

Vec2 biot_savart_image(Point x, Point y) { return image_part(x, y, check_pair(x, y)); }

Vec2 biot_savart_kernel(Point x, Point y) {
    const double d2 = check_pair(x, y);
    return (kInv2Pi / d2) * perp(x - y) + image_part(x, y, d2);
}

double aux_kernel(Point x, Point y, Vec2 grad_x, Vec2 grad_y) {
    const double d2 = check_pair(x, y);
    // The free-space parts of K(x, y) and K(y, x) are opposite; combine them first.
    const Vec2 free = (kInv2Pi / d2) * perp(x - y);
    return 0.5 * (dot(free, grad_x - grad_y) + dot(image_part(x, y, d2), grad_x) + dot(image_part(y, x, d2), grad_y));
}

double aux_test_function(const TestFunction& phi, double t, Point x, Point y) {
    return aux_kernel(x, y, phi.grad(t, x), phi.grad(t, y));
}

Vec2 velocity_from_vorticity(const ScalarField2D& omega, Point x, const VelocityQuadrature& opt) {
    check_point(x);
    const double rx = norm(x);

    std::vector<double> circles = omega.breaks;
    if (omega.r_min > 0.0) circles.push_back(omega.r_min);
    if (omega.r_max < 1.0) circles.push_back(omega.r_max);

    // Angles are measured from the direction pointing at the origin; rays tangent to a
    // circle of radius c < |x| make angle asin(c / |x|) with it.
    const double base = (rx > 0.0) ? std::atan2(-x.x2, -x.x1) : 0.0;
    double half_width = std::numbers::pi;
    if (rx > omega.r_max) half_width = std::asin(std::min(1.0, omega.r_max / rx));
    std::vector<double> alpha_breaks;
    for (double c : circles) {
        if (c < rx) {
            const double a = std::asin(c / rx);
            if (a < half_width) {
                alpha_breaks.push_back(-a);
                alpha_breaks.push_back(a);
            }
        }
    }
    std::sort(alpha_breaks.begin(), alpha_breaks.end());

    const double c0 = rx * rx;
    quad::AdaptiveOptions inner{opt.abs_tol * 1e-2, opt.rel_tol * 1e-2, opt.max_depth};
    quad::AdaptiveOptions outer{opt.abs_tol, opt.rel_tol, opt.max_depth};

    auto ray = [&](double alpha, int component) {
        const Vec2 e{std::cos(base + alpha), std::sin(base + alpha)};
        const double b = dot(x, e);
        const double s_exit = -b + std::sqrt(std::max(0.0, b * b - c0 + 1.0));
        if (!(s_exit > 0.0)) return 0.0;
        std::vector<double> cuts{0.0, s_exit};
        for (double c : circles) {
            const double disc = b * b - c0 + c * c;
            if (disc <= 0.0) continue;
            const double root = std::sqrt(disc);
            for (double s : {-b - root, -b + root})
                if (s > 0.0 && s < s_exit) cuts.push_back(s);
        }
        std::sort(cuts.begin(), cuts.end());
        const Vec2 free = -kInv2Pi * perp(e);
        auto f = [&](double s) {
            const Point y = x + s * e;
            const double w = omega.eval(y);
            if (w == 0.0) return 0.0;
            const double d2 = s * s;
            const Vec2 v = free + s * image_part(x, y, d2);
            return w * (component == 0 ? v.x1 : v.x2);
        };
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double lo = cuts[i];
            const double hi = cuts[i + 1];
            if (hi - lo <= 0.0) continue;
            const double rm = norm(x + (0.5 * (lo + hi)) * e);
            if (rm < omega.r_min || rm > omega.r_max) continue;
            sum += quad::adaptive(f, lo, hi, inner);
        }
        return sum;
    };

    Vec2 u;
    for (int component = 0; component < 2; ++component) {
        auto g = [&](double alpha) { return ray(alpha, component); };
        const double value = quad::adaptive(g, -half_width, half_width, alpha_breaks, outer);
        (component == 0 ? u.x1 : u.x2) = value;
    }
    return u;
}

double green_laplacian_pairing(const TestFunction& phi, Point y, int level) {
    if (!phi.in_support(y)) throw DomainError("pairing point lies outside the test-function support");
    const Point c = phi.center();
    const double R = phi.radius();
    const Vec2 d = y - c;
    const int n = 64 << level;
    quad::AdaptiveOptions opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = 1e-12;
    opt.relative_to_magnitude = true;
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        const Vec2 e = polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / n);
        // Exit distance of the ray y + s e from B(c, R).
        const double b = dot(e, d);
        const double s_max = -b + std::sqrt(b * b - (norm2(d) - R * R));
        sum += quad::adaptive(
            [&](double s) {
                const Point x = y + s * e;
                return s * green_disk(x, y) * trace(phi.spatial_hessian(x));
            },
            0.0, s_max, opt);
    }
    return sum * 2.0 * std::numbers::pi / n;
}

}  // namespace vvlab
