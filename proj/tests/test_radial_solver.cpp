#include <cmath>
#include <numbers>

#include "doctest.h"
#include "vvlab/bessel.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/quadrature.hpp"
#include "vvlab/radial.hpp"

using namespace vvlab;

namespace {

constexpr double kPi = std::numbers::pi;

long double series_j1(long double x) {
    long double term = x / 2;
    long double sum = term;
    for (int k = 1; k < 80; ++k) {
        term *= -(x * x / 4) / (k * (k + 1.0L));
        sum += term;
    }
    return sum;
}

double bisect_first_zero() {
    long double lo = 3.5L;
    long double hi = 4.0L;
    for (int i = 0; i < 200; ++i) {
        const long double mid = (lo + hi) / 2;
        if ((series_j1(mid) > 0) == (series_j1(lo) > 0))
            lo = mid;
        else
            hi = mid;
    }
    return static_cast<double>(lo);
}

double l2_distance(const RadialProfile& a, const RadialProfile& b, std::vector<double> breaks) {
    auto f = [&](double r) {
        const double d = a(r) - b(r);
        return d * d * r;
    };
    return std::sqrt(2.0 * kPi * quad::adaptive(f, 0.0, 1.0, breaks, quad::AdaptiveOptions{1e-12, 1e-12, 20}));
}

}  // namespace

TEST_CASE("Bessel functions against reference values") {
    CHECK(bessel_j1(0.0) == 0.0);
    CHECK(bessel_j0(0.0) == 1.0);
    // Frozen 30-digit reference values.
    CHECK(bessel_j1(2.5) == doctest::Approx(0.497094102464274038).epsilon(1e-14));
    CHECK(bessel_j1(12.3) == doctest::Approx(-0.194258848040591393).epsilon(1e-13));
    CHECK(bessel_j0(30.0) == doctest::Approx(-0.0863679835810402113).epsilon(1e-13));
    CHECK(bessel_j0(100.3) == doctest::Approx(0.041857982899804083).epsilon(1e-12));
    CHECK(bessel_j1(-2.5) == doctest::Approx(-0.497094102464274038).epsilon(1e-14));
    for (double x = 0.0; x < 200.0; x += 0.173) {
        CHECK(std::abs(bessel_j0(x) - std::cyl_bessel_j(0.0, x)) < 1e-11);
        CHECK(std::abs(bessel_j1(x) - std::cyl_bessel_j(1.0, x)) < 1e-11);
    }
}

TEST_CASE("zeros of J1") {
    const auto z = bessel_j1_zeros(400);
    CHECK(std::abs(z[0] - bisect_first_zero()) < 1e-12);
    CHECK(std::abs(z[0] - 3.8317059702075123) < 1e-9);
    CHECK(z[0] > 3.8);
    CHECK(z[0] < 3.9);
    CHECK(std::abs(z[1] - 7.0155866698156188) < 1e-12);
    CHECK(std::abs(z[99] - 314.94347283776716) < 1e-10);
    for (std::size_t k = 1; k < z.size(); ++k) CHECK(z[k] > z[k - 1]);
    // Spacing tends to pi.
    CHECK(std::abs((z[399] - z[398]) - kPi) < 1e-5);
    CHECK(std::abs((z[399] - z[398]) - kPi) < std::abs((z[9] - z[8]) - kPi));
    for (double x : z) CHECK(std::abs(bessel_j1(x)) < 1e-13);
    CHECK_THROWS_AS(bessel_j1_zeros(0), ParameterError);
}

TEST_CASE("scaled modified Bessel functions") {
    CHECK(scaled_bessel_i(0, 0.0) == 1.0);
    CHECK(scaled_bessel_i(1, 0.0) == 0.0);
    CHECK(scaled_bessel_i(0, 3.0) == doctest::Approx(0.243000354161825398).epsilon(1e-14));
    CHECK(scaled_bessel_i(1, 40.0) == doctest::Approx(0.0624822290744420607).epsilon(1e-14));
    for (double z = 0.05; z < 60.0; z += 0.31)
        for (int m : {0, 1})
            CHECK(scaled_bessel_i(m, z) == doctest::Approx(std::exp(-z) * std::cyl_bessel_i(double(m), z)).epsilon(1e-12));
}

TEST_CASE("radial grids") {
    const RadialGrid u = RadialGrid::uniform(10);
    CHECK(u.size() == 11);
    CHECK(u[0] == 0.0);
    CHECK(u[10] == 1.0);
    const RadialGrid c = RadialGrid::clustered(64);
    CHECK(c[64] == 1.0);
    CHECK(c[64] - c[63] < c[1] - c[0]);
    CHECK_THROWS_AS(RadialGrid({0.0, 0.5, 0.4, 1.0}), ParameterError);
    CHECK_THROWS_AS(RadialGrid({0.1, 0.5, 1.0}), ParameterError);
}

TEST_CASE("sheet family normalization and resolution") {
    const RadialGrid grid = RadialGrid::uniform(4096);
    for (int n : {4, 16, 64}) {
        const SheetFamily f = build_sheet_family(n, grid, 2.0 * kPi);
        const double mass = 2.0 * kPi * quad::adaptive([&](double r) { return f.vorticity(r) * r; }, 0.5 - 0.5 / n,
                                                       0.5 + 0.5 / n, quad::AdaptiveOptions{1e-10, 1e-12, 20});
        CHECK(std::abs(mass - 2.0 * kPi) < 1e-8);
        CHECK(f.vorticity(0.5) > 0.0);
        CHECK(f.vorticity(0.5 + 0.51 / n) == 0.0);
        CHECK(f.velocity(0.9) == doctest::Approx(1.0 / 0.9).epsilon(1e-12));
        CHECK(f.velocity(0.3) == 0.0);
    }
    CHECK_THROWS_AS(build_sheet_family(1024, RadialGrid::uniform(2048), 2.0 * kPi), ResolutionError);
}

TEST_CASE("circulation of the limit velocity is 2 pi") {
    for (double r : {0.6, 0.75, 0.95}) {
        const quad::Rule th = quad::periodic_trapezoid(64);
        double circ = 0.0;
        for (std::size_t j = 0; j < th.size(); ++j) {
            const Vec2 x = polar(r, th.x[j]);
            const Vec2 u = (1.0 / norm2(x)) * perp(x);
            const Vec2 tangent = polar(r, th.x[j] + kPi / 2);
            circ += th.w[j] * dot(u, tangent);
        }
        CHECK(circ == doctest::Approx(2.0 * kPi).epsilon(1e-13));
    }
}

TEST_CASE("sheet family converges to the limit in L2") {
    const RadialProfile limit = SheetFamily::limit_profile();
    const double limit_norm = l2_distance(limit, RadialProfile{[](double) { return 0.0; }}, {0.5});
    CHECK(limit_norm * limit_norm == doctest::Approx(2.0 * kPi * std::log(2.0)).epsilon(1e-10));
    double previous = INFINITY;
    for (int n : {2, 4, 8, 16, 32, 64}) {
        const SheetFamily f(n, 2.0 * kPi);
        const double d = l2_distance(f.velocity_profile(), limit, {0.5 - 0.5 / n, 0.5, 0.5 + 0.5 / n});
        CHECK(d < previous);
        previous = d;
    }
}

TEST_CASE("projection onto the Bessel basis") {
    const auto z = bessel_j1_zeros(2);
    RadialProfile mode{[l = z[1]](double r) { return bessel_j1(l * r); }};
    const ModeExpansion e = project_modes(mode, 64);
    CHECK(e.coefficients[1] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 0; k < e.size(); ++k)
        if (k != 1) CHECK(std::abs(e.coefficients[k]) < 1e-12);
    CHECK(e.reconstruction_error < 1e-10);
    CHECK_FALSE(e.truncation_warning);

    const ModeExpansion zero = project_modes(RadialProfile{[](double) { return 0.0; }}, 64);
    for (double c : zero.coefficients) CHECK(c == 0.0);
}

TEST_CASE("sheet-family coefficients agree with an independent quadrature") {
    const int n = 16;
    const SheetFamily f(n, 2.0 * kPi);
    const ModeExpansion e = project_modes(f.velocity_profile(), mode_count_for(n));
    CHECK(e.size() == 96);
    for (int k : {0, 1, 10, 50, 95}) {
        const double lam = e.zeros[k];
        auto integrand = [&](double r) { return f.velocity(r) * bessel_j1(lam * r) * r; };
        const std::vector<double> breaks{0.5 - 0.5 / n, 0.5 + 0.5 / n};
        const double c = quad::adaptive(integrand, 0.0, 1.0, breaks, quad::AdaptiveOptions{1e-13, 1e-12, 25}) /
                         e.norms[k];
        CHECK(std::abs(e.coefficients[k] - c) < 1e-10);
    }
    // u(1) = 1 is not representable in the Dirichlet basis: the error is reported, not hidden.
    CHECK(e.reconstruction_error > 1e-6);
    CHECK(e.truncation_warning);
}

TEST_CASE("single-mode decay is exact") {
    const ModeExpansion e = ModeExpansion::single(1, 64);
    const GridPtr grid = make_grid(RadialGrid::uniform(512));
    const std::vector<double> times{0.0, 0.05, 0.1};
    const Trajectory traj = evolve(e, 0.01, times, grid);
    const double n0 = l2_norm(traj.velocity[0]);
    const double expected = std::exp(-0.01 * e.zeros[0] * e.zeros[0] * 0.1);
    CHECK(std::abs(l2_norm(traj.velocity[2]) / n0 - expected) < 1e-8);
    CHECK(std::sqrt(e.energy(0.01 * 0.1) / e.energy()) == doctest::Approx(expected).epsilon(1e-14));
    for (double v : traj.velocity[0].values) CHECK(std::isfinite(v));
}

TEST_CASE("evolve reproduces the initial field and composes in time") {
    const SheetFamily f(8, 2.0 * kPi);
    const ModeExpansion e = project_modes(f.velocity_profile(), mode_count_for(8));
    const GridPtr grid = make_grid(RadialGrid::uniform(1024));
    const std::vector<double> t0{0.0};
    const Trajectory at0 = evolve(e, 0.01, t0, grid);
    for (std::size_t i = 0; i < grid->size(); i += 37)
        CHECK(at0.velocity[0].values[i] == doctest::Approx(e.velocity((*grid)[i])).epsilon(1e-12));

    const std::vector<double> direct_times{0.0, 0.03};
    const std::vector<double> step_times{0.0, 0.02};
    const Trajectory direct = evolve(e, 0.01, direct_times, grid);
    const Trajectory second = evolve(e.advanced(0.01, 0.01), 0.01, step_times, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i)
        worst = std::max(worst, std::abs(direct.velocity[1].values[i] - second.velocity[1].values[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("no-slip and energy decay along a sheet trajectory") {
    const int n = 16;
    const SheetFamily f(n, 2.0 * kPi);
    const ModeExpansion e = project_modes(f.velocity_profile(), mode_count_for(n));
    const GridPtr grid = make_grid(RadialGrid::uniform(2048));
    const auto times = geometric_times(0.1, 1e-4, 12);
    const Trajectory traj = evolve(e, 0.005, times, grid);
    double previous = INFINITY;
    for (std::size_t j = 0; j < traj.time_count(); ++j) {
        if (j > 0) CHECK(std::abs(traj.velocity[j].values.back()) < 1e-10);
        const double energy = 0.5 * std::pow(l2_norm(traj.velocity[j]), 2);
        CHECK(energy <= previous);
        previous = energy;
    }
}

TEST_CASE("energy identity with dissipation from the modes") {
    const SheetFamily f(8, 2.0 * kPi);
    const ModeExpansion e = project_modes(f.velocity_profile(), mode_count_for(8));
    const double nu = 0.01;
    const double t = 0.05;
    // nu int_0^t ||grad u||^2 ds by Gauss-Legendre on a graded time grid.
    double dissipation = 0.0;
    const std::vector<double> breaks{1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
    const quad::Rule rule = quad::composite(0.0, t, breaks, 4, 20);
    for (std::size_t q = 0; q < rule.size(); ++q) dissipation += rule.w[q] * nu * e.enstrophy(nu * rule.x[q]);
    CHECK(e.energy(nu * t) + dissipation == doctest::Approx(e.energy()).epsilon(1e-6));

    // Enstrophy from modes against the finite-difference vorticity of the evolved field
    // (for no-slip fields the integral of |grad u|^2 equals that of omega^2).
    const GridPtr grid = make_grid(RadialGrid::uniform(8192));
    const std::vector<double> times{0.0, t};
    const Trajectory traj = evolve(e, nu, times, grid);
    CHECK(std::pow(l2_norm(traj.vorticity[1]), 2) == doctest::Approx(e.enstrophy(nu * t)).epsilon(1e-4));
}

TEST_CASE("smaller viscosity stays closer to the initial velocity") {
    const SheetFamily f(8, 2.0 * kPi);
    const ModeExpansion e = project_modes(f.velocity_profile(), mode_count_for(8));
    const GridPtr grid = make_grid(RadialGrid::uniform(1024));
    const auto times = geometric_times(0.1, 1e-3, 8);
    double previous = INFINITY;
    for (double nu : {0.02, 0.01, 0.005}) {
        const Trajectory traj = evolve(e, nu, times, grid);
        double sup = 0.0;
        for (std::size_t j = 0; j < traj.time_count(); ++j) {
            RadialField d = traj.velocity[j];
            for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= traj.velocity[0].values[i];
            sup = std::max(sup, l2_norm(d));
        }
        CHECK(sup < previous);
        previous = sup;
    }
}

TEST_CASE("circulation and curl on the grid") {
    const GridPtr grid = make_grid(RadialGrid::uniform(200));
    const RadialField two = sample(RadialProfile{[](double) { return 2.0; }}, grid, FieldKind::vorticity);
    const RadialField u = velocity_from_vorticity_radial(two);
    for (std::size_t i = 0; i < grid->size(); ++i) CHECK(u.values[i] == doctest::Approx((*grid)[i]).epsilon(1e-13));
    const RadialField rigid = sample(RadialProfile{[](double r) { return r; }}, grid, FieldKind::swirl_velocity);
    for (double w : vorticity_from_velocity(rigid).values) CHECK(w == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("vorticity round trip is second order") {
    auto profile = RadialProfile{[](double r) { return std::exp(-20.0 * (r - 0.4) * (r - 0.4)) * std::cos(3.0 * r); }};
    double previous = 0.0;
    for (int m : {200, 400, 800}) {
        const GridPtr grid = make_grid(RadialGrid::uniform(m));
        const RadialField w = sample(profile, grid, FieldKind::vorticity);
        RadialField back = vorticity_from_velocity(velocity_from_vorticity_radial(w));
        for (std::size_t i = 0; i < back.values.size(); ++i) back.values[i] -= w.values[i];
        const double err = l1_norm(back);
        if (previous > 0.0) CHECK(previous / err == doctest::Approx(4.0).epsilon(0.15));
        previous = err;
    }
}
