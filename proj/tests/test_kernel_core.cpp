#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vvlab/cutoffs.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/kernels.hpp"
#include "vvlab/quadrature.hpp"
#include "vvlab/radial.hpp"

using namespace vvlab;

namespace {

constexpr double kPi = std::numbers::pi;

// Method of images, written directly from the textbook formula.
double images_oracle(Point x, Point y) {
    const double ny = norm(y);
    const Point ystar = (1.0 / (ny * ny)) * y;
    return std::log(norm(x - y) / (ny * norm(x - ystar))) / (2.0 * kPi);
}

Point random_interior(std::mt19937_64& rng, double rmax = 0.999) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = rmax * std::sqrt(u(rng));
    return polar(r, 2.0 * kPi * u(rng));
}

}  // namespace

TEST_CASE("green_disk matches the images formula") {
    // Frozen from a 30-digit evaluation of the images formula.
    CHECK(green_disk({0.5, 0.0}, {0.0, 0.5}) == doctest::Approx(-0.05998325415574408).epsilon(1e-14));
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const Point x = random_interior(rng);
        const Point y = random_interior(rng);
        CHECK(std::abs(green_disk(x, y) - images_oracle(x, y)) < 1e-12);
    }
}

TEST_CASE("green_disk is symmetric and vanishes on the boundary") {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Point x = random_interior(rng);
        const Point y = random_interior(rng);
        worst = std::max(worst, std::abs(green_disk(x, y) - green_disk(y, x)));
    }
    CHECK(worst < 1e-12);
    for (int i = 0; i < 100; ++i) {
        const Point b = polar(1.0, 0.1 * i);
        const Point y = random_interior(rng);
        CHECK(std::abs(green_disk(b, y)) < 1e-10);
        CHECK(std::abs(green_disk(y, b)) < 1e-10);
    }
    CHECK(std::isfinite(green_disk({0.3, 0.2}, {0.0, 0.0})));
    CHECK(green_disk({0.3, 0.4}, {0.0, 0.0}) == doctest::Approx(std::log(0.5) / (2.0 * kPi)));
}

TEST_CASE("green_disk rejects coincident and exterior points") {
    CHECK_THROWS_AS(green_disk({0.2, 0.1}, {0.2, 0.1}), CoincidentPointsError);
    CHECK_THROWS_AS(green_disk({1.1, 0.0}, {0.2, 0.1}), DomainError);
    CHECK_THROWS_AS(biot_savart_kernel({0.0, 0.0}, {0.0, 1.01}), DomainError);
}

TEST_CASE("biot_savart_kernel is the perpendicular gradient of G") {
    std::mt19937_64 rng(3);
    for (const double h : {1e-3, 5e-4}) {
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const Point x = random_interior(rng, 0.9);
            const Point y = random_interior(rng, 0.9);
            if (norm(x - y) < 0.05) continue;
            const double d1 = (green_disk(x + Vec2{h, 0}, y) - green_disk(x - Vec2{h, 0}, y)) / (2 * h);
            const double d2 = (green_disk(x + Vec2{0, h}, y) - green_disk(x - Vec2{0, h}, y)) / (2 * h);
            const Vec2 k = biot_savart_kernel(x, y);
            worst = std::max(worst, std::max(std::abs(k.x1 + d2), std::abs(k.x2 - d1)) * norm2(x - y));
        }
        // Second order: the scaled difference shrinks like h^2.
        CHECK(worst < 20.0 * h * h);
    }
}

TEST_CASE("biot_savart_kernel vanishes as y reaches the boundary") {
    const Point x{0.3, 0.0};
    double previous = INFINITY;
    for (double r : {0.9, 0.99, 0.999, 0.9999, 1.0}) {
        const double m = norm(biot_savart_kernel(x, polar(r, 0.7)));
        CHECK(m < previous);
        previous = m;
    }
    CHECK(previous < 1e-14);
}

TEST_CASE("biot_savart_kernel minus the free-space kernel stays bounded near the diagonal") {
    const Point x{0.4, -0.2};
    for (double d : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const Point y = x + polar(d, 1.1);
        const Vec2 free = (1.0 / (2.0 * kPi * d * d)) * perp(x - y);
        const Vec2 rest = biot_savart_kernel(x, y) - free;
        CHECK(norm(rest) < 2.0);
        CHECK(norm(biot_savart_kernel(x, y)) * 2.0 * kPi * d == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("aux_test_function is symmetric and vanishes off the support") {
    const TestFunction phi({0.2, 0.1}, 0.3, 0.02, 0.08);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const Point x = random_interior(rng);
        const Point y = random_interior(rng);
        const double t = 0.02 + 0.06 * std::uniform_real_distribution<double>(0, 1)(rng);
        CHECK(aux_test_function(phi, t, x, y) == doctest::Approx(aux_test_function(phi, t, y, x)).epsilon(1e-12));
    }
    CHECK(aux_test_function(phi, 0.05, {-0.5, 0.0}, {0.0, -0.7}) == 0.0);
    CHECK_THROWS_AS(aux_test_function(phi, 0.05, {0.1, 0.1}, {0.1, 0.1}), CoincidentPointsError);
}

TEST_CASE("aux_test_function stays below a plateau near the diagonal") {
    const TestFunction phi({0.1, 0.0}, 0.5, 0.02, 0.08);
    double sup_coarse = 0.0;
    double sup_fine = 0.0;
    std::mt19937_64 rng(9);
    for (int i = 0; i < 2000; ++i) {
        const Point x = random_interior(rng, 0.9);
        const double a = 2.0 * kPi * (i % 97) / 97.0;
        sup_coarse = std::max(sup_coarse, std::abs(aux_test_function(phi, 0.05, x, x + polar(1e-4, a))));
        sup_fine = std::max(sup_fine, std::abs(aux_test_function(phi, 0.05, x, x + polar(1e-6, a))));
    }
    CHECK(std::isfinite(sup_fine));
    CHECK(sup_fine < 1.05 * sup_coarse);
}

TEST_CASE("velocity of a uniform disk of vorticity") {
    const double a = 0.4;
    RadialProfile w{[](double) { return 1.0; }, 0.0, a, {}};
    for (const Point x : {Point{0.1, 0.05}, Point{0.35, 0.0}, Point{0.0, 0.6}, Point{-0.7, 0.5}}) {
        const double r = norm(x);
        const double ut = r <= a ? r / 2 : a * a / (2 * r);
        const Vec2 u = velocity_from_vorticity(w.as_field(), x);
        const Vec2 expect = (ut / r) * perp(x);
        CHECK(std::abs(u.x1 - expect.x1) < 1e-8);
        CHECK(std::abs(u.x2 - expect.x2) < 1e-8);
    }
}

TEST_CASE("velocity of zero vorticity is zero and boundary velocity is tangent") {
    RadialProfile zero{[](double) { return 0.0; }, 0.0, 1.0, {}};
    const Vec2 u = velocity_from_vorticity(zero.as_field(), {0.3, 0.2});
    CHECK(u.x1 == 0.0);
    CHECK(u.x2 == 0.0);

    // Off-centre blob: the velocity at the boundary has no normal component.
    ScalarField2D blob;
    blob.eval = [](Point y) { return std::exp(-norm2(y - Point{0.2, 0.1}) / 0.02); };
    const Point b = polar(1.0, 0.4);
    const Vec2 ub = velocity_from_vorticity(blob, b);
    CHECK(std::abs(dot(ub, b)) < 1e-8);
}

TEST_CASE("velocity of a sheet-family member matches x_perp/|x|^2 off the sheet") {
    const SheetFamily family(32, 2.0 * kPi);
    for (const Point x : {Point{0.8, 0.0}, Point{0.0, -0.7}, Point{0.6, 0.6}}) {
        const Vec2 u = velocity_from_vorticity(family.vorticity_profile().as_field(), x);
        const Vec2 expect = (1.0 / norm2(x)) * perp(x);
        CHECK(norm(u - expect) < 1e-6);
    }
    const Vec2 inside = velocity_from_vorticity(family.vorticity_profile().as_field(), {0.2, 0.1});
    CHECK(norm(inside) < 1e-8);
}

TEST_CASE("cutoff plateaus, bounds and parameter checks") {
    const Cutoff chi = make_cutoff(0.6, 0.8);
    CHECK(chi.value(Point{0.5, 0.0}) == 1.0);
    CHECK(chi.value(Point{0.9, 0.0}) == 0.0);
    for (int i = 0; i <= 100; ++i) {
        const double v = chi.value(0.55 + 0.3 * i / 100.0);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(chi.separation(0.5) == doctest::Approx(0.1));
    CHECK_THROWS_AS(make_cutoff(0.8, 0.6), ParameterError);
    CHECK_THROWS_AS(make_cutoff(0.0, 0.6), ParameterError);
    CHECK_THROWS_AS(make_cutoff(0.5, 1.0), ParameterError);
}

TEST_CASE("cutoff derivatives agree with finite differences") {
    const Cutoff chi = make_cutoff(0.3, 0.7);
    const double h = 1e-5;
    for (double r = 0.31; r < 0.7; r += 0.037) {
        const Jet j = chi.jet(r);
        CHECK(j.d1 == doctest::Approx((chi.value(r + h) - chi.value(r - h)) / (2 * h)).epsilon(1e-6));
        CHECK(j.d2 == doctest::Approx((chi.jet(r + h).d1 - chi.jet(r - h).d1) / (2 * h)).epsilon(1e-5));
        const Point x = polar(r, 0.3);
        const double lap_fd = (chi.value(x + Vec2{h, 0}) + chi.value(x - Vec2{h, 0}) + chi.value(x + Vec2{0, h}) +
                               chi.value(x - Vec2{0, h}) - 4.0 * chi.value(x)) /
                              (h * h);
        CHECK(chi.laplacian(x) == doctest::Approx(lap_fd).epsilon(1e-3));
    }
}

TEST_CASE("mollifier has unit mass and the right support") {
    for (int k : {2, 8, 32}) {
        const Mollifier zeta = make_mollifier(k);
        // Independent mass check: adaptive quadrature of the scaled profile in polar form.
        const double mass = 2.0 * kPi *
                            quad::adaptive([&](double r) { return zeta.scaled(r) * r; }, 0.0, zeta.radius(),
                                           quad::AdaptiveOptions{1e-12, 1e-12, 20});
        CHECK(std::abs(mass - 1.0) < 1e-10);
        CHECK(zeta(Point{0.5 / k, 0.0}) == 0.0);
        CHECK(zeta(Point{0.49 / k, 0.0}) >= 0.0);
    }
}

TEST_CASE("mollification error decays like 1/k^2") {
    // f(x) = x1^2 + 3 x2 at x = (0.2, 0.1); (f * zeta_k)(x) - f(x) = m2 / k^2 exactly.
    auto f = [](Point y) { return y.x1 * y.x1 + 3.0 * y.x2; };
    const Point x{0.2, 0.1};
    double previous = 0.0;
    for (int k : {4, 8, 16}) {
        const Mollifier zeta(k);
        const quad::Rule rs = quad::composite(0.0, zeta.radius(), 8, 12);
        const quad::Rule as = quad::periodic_trapezoid(32);
        double s = 0.0;
        for (std::size_t i = 0; i < rs.size(); ++i)
            for (std::size_t j = 0; j < as.size(); ++j)
                s += rs.w[i] * as.w[j] * rs.x[i] * zeta.scaled(rs.x[i]) * f(x - polar(rs.x[i], as.x[j]));
        const double err = std::abs(s - f(x));
        if (previous > 0.0) CHECK(previous / err == doctest::Approx(4.0).epsilon(1e-6));
        previous = err;
    }
}

TEST_CASE("boundary cutoff: plateaus and gradient of order k") {
    const double c = BoundaryCutoff::gradient_constant();
    CHECK(c > 1.0);
    CHECK(c < 3.0);
    for (int k : {4, 8, 16, 32}) {
        const BoundaryCutoff rho = make_boundary_cutoff(k);
        CHECK(rho.value(1.0 - 2.0 / k - 1e-9) == 1.0);
        CHECK(rho.value(1.0 - 1.0 / k) == 0.0);
        double m = 0.0;
        for (int i = 0; i <= 4000; ++i) m = std::max(m, norm(rho.grad(polar(1.0 - 2.0 / k + i / (4000.0 * k), 0.2))));
        CHECK(m / k <= c * (1.0 + 1e-9));
        CHECK(m / k > 0.99 * c);
    }
    CHECK_THROWS_AS(make_boundary_cutoff(1), ParameterError);
}

TEST_CASE("G paired with the Laplacian of a bump returns the bump") {
    const TestFunction phi({0.2, -0.1}, 0.4, 0.01, 0.09);
    for (Point y : {Point{0.2, -0.1}, Point{0.35, 0.05}, Point{-0.1, -0.2}}) {
        const double coarse = green_laplacian_pairing(phi, y, 0);
        const double fine = green_laplacian_pairing(phi, y, 1);
        CHECK(phi.spatial(y) > 0.0);
        CHECK(std::abs(coarse - phi.spatial(y)) < 1e-5);
        CHECK(std::abs(fine - phi.spatial(y)) < 1e-8);
    }
    CHECK_THROWS_AS(green_laplacian_pairing(phi, {0.7, 0.5}, 0), DomainError);
}
