#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vvlab/errors.hpp"
#include "vvlab/weak.hpp"

using namespace vvlab;

namespace {

constexpr double kPi = std::numbers::pi;

// Trapezoid sum over the square [c - R, c + R]^2; the integrands vanish on its edges.
template <class F>
double square_sum(Point c, double R, int n, F&& f) {
    const double h = 2.0 * R / n;
    double s = 0.0;
    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) s += f(Point{c.x1 - R + i * h, c.x2 - R + j * h});
    return s * h * h;
}

// int g over the time window, trapezoid.
double time_integral(const TestFunction& phi, int n, bool derivative = false) {
    const double h = (phi.t1() - phi.t0()) / n;
    double s = 0.0;
    for (int i = 1; i < n; ++i) {
        const double t = phi.t0() + i * h;
        s += derivative ? phi.time_derivative(t) : phi.time_factor(t);
    }
    return s * h;
}

// grad Phi by central differences of Phi.
Mat2 fd_gradient(const DivFreeTestField& f, double t, Point x, double h = 1e-5) {
    const Vec2 p1 = f.value(t, {x.x1 + h, x.x2}), m1 = f.value(t, {x.x1 - h, x.x2});
    const Vec2 p2 = f.value(t, {x.x1, x.x2 + h}), m2 = f.value(t, {x.x1, x.x2 - h});
    return {(p1.x1 - m1.x1) / (2 * h), (p2.x1 - m2.x1) / (2 * h), (p1.x2 - m1.x2) / (2 * h),
            (p2.x2 - m2.x2) / (2 * h)};
}

// Spatial part int grad Phi : u (x) u with grad Phi from differences, at a time where g != 0.
double oracle_quadratic(const DivFreeTestField& f, const std::function<Vec2(Point)>& u) {
    const auto& phi = f.generator();
    const double tm = 0.5 * (phi.t0() + phi.t1());
    const double s = square_sum(phi.center(), phi.radius(), 400, [&](Point x) {
        const Mat2 m = fd_gradient(f, tm, x);
        const Vec2 v = u(x);
        return m.a11 * v.x1 * v.x1 + m.a12 * v.x1 * v.x2 + m.a21 * v.x2 * v.x1 + m.a22 * v.x2 * v.x2;
    });
    return s / phi.time_factor(tm) * time_integral(phi, 4000);
}

Cutoff cutoff_for(const TestFunction& phi, double gap = 0.1, double width = 0.1) {
    return Cutoff(phi.outer_radius() + gap, phi.outer_radius() + gap + width);
}

Trajectory swirl_trajectory(const RadialProfile& u_theta, double growth, std::vector<double> times) {
    const auto grid = make_grid(RadialGrid::uniform(1024));
    Trajectory t;
    t.times = std::move(times);
    for (double s : t.times) {
        auto v = sample(u_theta, grid, FieldKind::swirl_velocity);
        for (double& x : v.values) x *= 1.0 + growth * s;
        t.vorticity.push_back(vorticity_from_velocity(v));
        t.velocity.push_back(std::move(v));
    }
    return t;
}

}  // namespace

TEST_CASE("test fields are divergence free with the stated gradient") {
    const auto bat = make_test_battery(5, 11, {0.1, -0.05}, 0.6, 0.01, 0.09, 0.1);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (const auto& f : bat) {
        const auto& p = f.generator();
        double scale = 0.0, worst_div = 0.0, worst_grad = 0.0;
        for (int i = 0; i < 200; ++i) {
            const Point x = p.center() + Vec2{p.radius() * U(rng), p.radius() * U(rng)} * 0.7;
            const double t = p.t0() + (p.t1() - p.t0()) * (0.5 + 0.4 * U(rng));
            const Mat2 a = f.gradient(t, x), b = fd_gradient(f, t, x);
            scale = std::max({scale, std::abs(a.a11), std::abs(a.a12), std::abs(a.a21), std::abs(a.a22)});
            worst_grad = std::max({worst_grad, std::abs(a.a11 - b.a11), std::abs(a.a12 - b.a12),
                                   std::abs(a.a21 - b.a21), std::abs(a.a22 - b.a22)});
            worst_div = std::max(worst_div, std::abs(f.divergence(t, x)));
        }
        CHECK(scale > 0.0);
        CHECK(worst_grad < 1e-6 * scale);
        CHECK(worst_div <= 1e-12 * scale);
    }
}

TEST_CASE("test fields vanish outside their support and window") {
    const auto f = generate_test_field(5, {0.0, 0.0}, 0.5, 0.02, 0.08, 0.1);
    const auto& p = f.generator();
    CHECK(p.t0() >= 0.02);
    CHECK(p.t1() <= 0.08);
    CHECK(norm(p.center()) + p.radius() <= 0.5 + 1e-15);
    const double tm = 0.5 * (p.t0() + p.t1());
    for (int j = 0; j < 16; ++j) {
        const Point x = p.center() + polar(p.radius() * 1.001, 2 * kPi * j / 16);
        CHECK(f.value(tm, x).x1 == 0.0);
        CHECK(f.value(tm, x).x2 == 0.0);
    }
    CHECK(f.value(p.t0() * 0.5, p.center()).x1 == 0.0);
    CHECK(f.value(p.t1() + 1e-3, p.center()).x2 == 0.0);
}

TEST_CASE("different seeds give different fields, same seed the same field") {
    const auto a = generate_test_field(1, {0.0, 0.0}, 0.6, 0.01, 0.09, 0.1);
    const auto b = generate_test_field(1, {0.0, 0.0}, 0.6, 0.01, 0.09, 0.1);
    CHECK(a.generator().center().x1 == b.generator().center().x1);
    CHECK(a.generator().radius() == b.generator().radius());
    const auto bat = make_test_battery(10, 100, {0.0, 0.0}, 0.6, 0.01, 0.09, 0.1);
    for (std::size_t i = 0; i < bat.size(); ++i) {
        CHECK(bat[i].seed() == 100 + i);
        for (std::size_t j = 0; j < i; ++j) {
            const auto& p = bat[i].generator();
            const auto& q = bat[j].generator();
            const double d = norm(p.center() - q.center()) + std::abs(p.radius() - q.radius());
            CHECK(d > 1e-6);
        }
    }
}

TEST_CASE("test field generation rejects bad supports and windows") {
    CHECK_THROWS_AS(generate_test_field(1, {0.5, 0.0}, 0.5, 0.01, 0.09, 0.1), SupportError);
    CHECK_THROWS_AS(generate_test_field(1, {0.0, 0.0}, 0.5, 0.0, 0.09, 0.1), SupportError);
    CHECK_THROWS_AS(generate_test_field(1, {0.0, 0.0}, 0.5, 0.05, 0.05, 0.1), SupportError);
    CHECK_THROWS_AS(generate_test_field(1, {0.0, 0.0}, 0.5, 0.01, 0.1, 0.1), SupportError);
}

TEST_CASE("velocity residual of the zero field is zero") {
    const VectorField2D zero{[](Point) { return Vec2{0.0, 0.0}; }, 0.0, 1.0, {}};
    const auto f = generate_test_field(2, {0.0, 0.0}, 0.7, 0.01, 0.09, 0.1);
    const auto r = velocity_weak_residual(zero, f);
    CHECK(r.value == 0.0);
    CHECK(r.magnitude == 0.0);
}

TEST_CASE("steady swirl fields have roundoff velocity residuals") {
    const auto u0 = swirl_field(SheetFamily::limit_profile());
    const VectorField2D rigid{[](Point x) { return perp(x); }, 0.0, 1.0, {}};
    for (const auto& f : make_test_battery(4, 40, {0.0, 0.0}, 0.75, 0.01, 0.09, 0.1)) {
        for (const auto* u : {&u0, &rigid}) {
            const auto r = velocity_weak_residual(*u, f);
            CHECK(std::abs(r.value) <= 1e-12 * r.magnitude);
        }
    }
    // The Cartesian oracle agrees that the quadratic term vanishes for rigid rotation.
    const auto f = generate_test_field(7, {0.1, 0.0}, 0.5, 0.01, 0.09, 0.1);
    CHECK(std::abs(oracle_quadratic(f, [](Point x) { return perp(x); })) < 1e-8);
}

TEST_CASE("velocity residual of a non-steady field matches a Cartesian oracle") {
    const auto u = [](Point x) { return Vec2{std::exp(x.x1) * x.x2 * x.x2, std::sin(3 * x.x1 * x.x2) + x.x1}; };
    const VectorField2D field{u, 0.0, 1.0, {}};
    for (std::uint64_t seed : {3u, 8u}) {
        const auto f = generate_test_field(seed, {0.1, 0.1}, 0.6, 0.01, 0.09, 0.1);
        const double expected = oracle_quadratic(f, u);
        WeakQuadrature q;
        q.level = 2;
        const auto r = velocity_weak_residual(field, f, q);
        CHECK(std::abs(expected) > 5e-3 * r.magnitude);
        CHECK(r.value == doctest::Approx(expected).epsilon(1e-5));
    }
}

TEST_CASE("trajectory velocity residual matches the linear-in-time oracle") {
    const RadialProfile ut{[](double r) { return r * (1.0 - r * r); }, 0.0, 1.0, {}};
    const auto traj = swirl_trajectory(ut, 10.0, {0.0, 0.05, 0.1});
    const auto f = generate_test_field(9, {0.1, 0.0}, 0.6, 0.01, 0.09, 0.1);
    const auto& p = f.generator();
    // Swirl fields kill the quadratic term; the time term is -10 int g * int Phi . u.
    const auto& v = traj.velocity.front();
    const double tm = 0.5 * (p.t0() + p.t1());
    const double spatial = square_sum(p.center(), p.radius(), 400, [&](Point x) {
        const double r = norm(x);
        return dot(f.value(tm, x), r > 0.0 ? perp(x) * (v.at(r) / r) : Vec2{0.0, 0.0});
    }) / p.time_factor(tm);
    const double expected = -10.0 * time_integral(p, 4000) * spatial;
    WeakQuadrature q;
    q.level = 2;
    const auto r = velocity_weak_residual(traj, f, q);
    CHECK(std::abs(expected) > 1e-2 * r.magnitude);
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("velocity and vorticity residuals cancel along a time-dependent radial trajectory") {
    const RadialProfile ut{[](double r) { return r * (1.0 - r * r); }, 0.0, 1.0, {}};
    const auto traj = swirl_trajectory(ut, 10.0, {0.0, 0.03, 0.06, 0.1});
    for (std::uint64_t seed : {21u, 22u}) {
        const auto f = generate_test_field(seed, {0.0, 0.1}, 0.6, 0.01, 0.09, 0.1);
        const auto& p = f.generator();
        WeakQuadrature q;
        q.level = 1;
        const auto rv = velocity_weak_residual(traj, f, q);
        const auto rw = vorticity_interior_residual(traj, p, cutoff_for(p), q);
        CHECK(std::abs(rv.value) > 1e-2 * rv.magnitude);
        CHECK(std::abs(rv.value + rw.value) < 2e-5 * std::abs(rv.value));
    }
}

TEST_CASE("vorticity residual edge cases") {
    const TestFunction phi({0.1, 0.0}, 0.3, 0.02, 0.08);
    const RadialProfile zero{[](double) { return 0.0; }, 0.0, 1.0, {}};
    const auto r = vorticity_interior_residual(zero, phi, cutoff_for(phi));
    CHECK(r.value == 0.0);
    CHECK(r.splitting.fallback);
    CHECK(r.eta == doctest::Approx(0.1));
    CHECK_THROWS_AS(vorticity_interior_residual(zero, phi, Cutoff(0.35, 0.5)), SeparationError);
    const SheetFamily fam(4, 2 * kPi);
    WeakQuadrature q;
    q.max_kernel_evaluations = 1000;
    CHECK_THROWS_AS(vorticity_interior_residual(fam.vorticity_profile().as_field(), phi, cutoff_for(phi), q),
                    BudgetError);
}

TEST_CASE("steady sheet vorticity: residual at roundoff for every admissible cutoff") {
    const SheetFamily fam(16, 2 * kPi);
    const auto w = fam.vorticity_profile();
    for (const auto& f : make_test_battery(3, 70, {0.0, 0.0}, 0.7, 0.01, 0.09, 0.1)) {
        const auto& p = f.generator();
        for (double gap : {0.05, 0.1, 0.15}) {
            const auto r = vorticity_interior_residual(w, p, cutoff_for(p, gap));
            CHECK(r.magnitude > 0.0);
            CHECK(std::abs(r.value) < 1e-12 * r.magnitude);
            CHECK(std::abs(r.time_term) < 1e-12 * r.magnitude);
        }
    }
}

TEST_CASE("general route on a radial density agrees with the radial route") {
    const SheetFamily fam(4, 2 * kPi);
    const TestFunction phi({0.2, 0.1}, 0.25, 0.02, 0.08);
    const auto chi = cutoff_for(phi);
    const auto radial = vorticity_interior_residual(fam.vorticity_profile(), phi, chi);
    WeakQuadrature q;
    q.radial_panels = 16;
    const auto general = vorticity_interior_residual(fam.vorticity_profile().as_field(), phi, chi, q);
    CHECK(general.magnitude == doctest::Approx(radial.magnitude).epsilon(2e-2));
    CHECK(std::abs(general.value - radial.value) < 1e-3 * radial.magnitude);
}

TEST_CASE("velocity and vorticity residuals cancel for a non-radial field") {
    // psi = bump_1 + bump_2 gives omega = Laplacian(psi) and u = grad-perp(psi) in closed form.
    const TestFunction s1({0.2, 0.1}, 0.4, 0.01, 0.09), s2({-0.1, 0.2}, 0.3, 0.01, 0.09, 0.5);
    const double rmax = std::max(s1.outer_radius(), s2.outer_radius());
    const ScalarField2D w{[&](Point x) { return trace(s1.spatial_hessian(x)) + trace(s2.spatial_hessian(x)); }, 0.0,
                          rmax, {}};
    const VectorField2D u{[&](Point x) { return perp(s1.spatial_grad(x) + s2.spatial_grad(x)); }, 0.0, rmax, {}};
    const TestFunction phi({0.1, 0.15}, 0.25, 0.02, 0.08);
    WeakQuadrature q;
    q.level = 2;
    const auto rv = velocity_weak_residual(u, DivFreeTestField(phi), q);
    WeakQuadrature qw;
    qw.angular_nodes = 32;
    const auto rw = vorticity_interior_residual(w, phi, cutoff_for(phi), qw);
    CHECK(std::abs(rv.value) > 1e-3 * rv.magnitude);
    const auto& s = rw.splitting;
    const double direct = s.near.back() + s.far.back() + rw.far_term;
    CHECK(std::abs(direct + rv.value) < 1e-3 * std::abs(rv.value));
    CHECK(std::abs(rw.value + rv.value) < 5e-3 * std::abs(rv.value));
    // The near/far split is an exact partition.
    for (std::size_t i = 1; i < s.deltas.size(); ++i)
        CHECK(s.near[i] + s.far[i] == doctest::Approx(s.near[0] + s.far[0]).epsilon(1e-12));
    CHECK(s.observed_order >= 1.0);
    CHECK(s.observed_order <= 4.0);
}

TEST_CASE("delta extrapolation") {
    DeltaSplitting s;
    s.deltas.assign(kDeltaSchedule.begin(), kDeltaSchedule.end());
    for (double d : s.deltas) s.far.push_back(2.0 - 5.0 * d * d * d);
    extrapolate_splitting(s, 1e-14);
    CHECK(s.observed_order == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.extrapolated == doctest::Approx(2.0).epsilon(1e-13));
    CHECK_FALSE(s.fallback);

    for (double& f : s.far) f = 1.0;
    extrapolate_splitting(s, 1e-14);
    CHECK(s.fallback);
    CHECK(s.extrapolated == 1.0);

    s.far = {0.0, 1.0, 2.0, 2.9};
    CHECK_THROWS_AS(extrapolate_splitting(s, 1e-14), QuadratureFailure);
    s.far = {0.0, 1.0, 2.0, 1.0};
    CHECK_THROWS_AS(extrapolate_splitting(s, 1e-14), QuadratureFailure);
    s.far = {0.0, 1.0};
    CHECK_THROWS_AS(extrapolate_splitting(s, 1e-14), ParameterError);
}

TEST_CASE("level convergence driver") {
    int calls = 0;
    const auto shrinking = [&](const WeakQuadrature& q) {
        ++calls;
        return ResidualValue{1.0 + std::pow(4.0, -3 * q.level), 1.0};
    };
    const auto c = converge_residual(shrinking, {}, 8);
    // |4^(-3l) - 4^(-3(l-1))| first drops below 1e-6 at l = 5.
    CHECK(c.level == 5);
    CHECK(calls == 6);
    CHECK(c.estimate <= c.tolerance);
    const auto stuck = [](const WeakQuadrature& q) { return ResidualValue{q.level % 2 ? 1.0 : 0.0, 1.0}; };
    CHECK_THROWS_AS(converge_residual(stuck, {}, 3), QuadratureFailure);
}

TEST_CASE("the near part obeys the maximal-function bound") {
    const SheetFamily fam(8, 2 * kPi);
    const TestFunction phi({0.1, 0.1}, 0.45, 0.02, 0.08);
    const auto chi = cutoff_for(phi);
    const auto w = fam.vorticity_profile();
    const auto r = vorticity_interior_residual(w, phi, chi);
    const auto checks = a1_bound_check(r.splitting, w, phi, chi);
    REQUIRE(checks.size() == kDeltaSchedule.size());
    for (const auto& c : checks) {
        CHECK(c.bound > 0.0);
        CHECK(c.pass);
    }
    // The bound shrinks with delta.
    CHECK(checks.back().bound < checks.front().bound);
}

TEST_CASE("sampled H sup is finite and grows little at short distances") {
    const TestFunction phi({0.1, 0.0}, 0.3, 0.02, 0.08);
    const double a = sampled_aux_sup(phi, 0.6, 1, 4000);
    const double b = sampled_aux_sup(phi, 0.6, 1, 40000);
    CHECK(std::isfinite(a));
    CHECK(a > 0.0);
    CHECK(b >= a);
    CHECK(b < 1.5 * a);
}

TEST_CASE("interior/boundary decomposition") {
    const auto grid = make_grid(RadialGrid::uniform(2048));
    const SheetFamily fam(8, 2 * kPi);
    const auto w = sample(fam.vorticity_profile(), grid, FieldKind::vorticity);
    const Cutoff chi(0.7, 0.8);
    CHECK_THROWS_AS(decompose_interior_boundary(w, chi, 1), ParameterError);

    const TestFunction phi({0.1, 0.1}, 0.4, 0.02, 0.08);
    const double tm = 0.05;
    std::vector<double> errors;
    const double target = [&] {
        double s = 0.0;
        const double h = 1.0 / 4000;
        for (int i = 0; i < 4000; ++i) {
            const double r = (i + 0.5) * h;
            double ring = 0.0;
            for (int j = 0; j < 256; ++j) ring += phi.value(tm, polar(r, 2 * kPi * (j + 0.5) / 256));
            s += fam.vorticity(r) * ring * (2 * kPi / 256) * r * h;
        }
        return s;
    }();
    for (int k : {4, 8, 16, 32}) {
        const auto d = decompose_interior_boundary(w, chi, k);
        for (double v : d.boundary.values) CHECK(v == 0.0);
        CHECK(l1_norm(d.interior) <= l1_norm(w) * (1.0 + 1e-3));
        double pairing = 0.0;
        const double h = 1.0 / 4000;
        for (int i = 0; i < 4000; ++i) {
            const double r = (i + 0.5) * h;
            double ring = 0.0;
            for (int j = 0; j < 256; ++j) ring += phi.value(tm, polar(r, 2 * kPi * (j + 0.5) / 256));
            pairing += d.interior.at(r) * ring * (2 * kPi / 256) * r * h;
        }
        errors.push_back(std::abs(pairing - target));
        const auto terms = boundary_split_terms(d, phi);
        CHECK(terms[1] == 0.0);
        CHECK(terms[2] == 0.0);
        CHECK(terms[3] == 0.0);
    }
    // Mollification error ~ k^-2.
    for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] < errors[i - 1] / 3.0);
}

TEST_CASE("the boundary part misses supp psi once the mollifier is narrower than the gap") {
    const auto grid = make_grid(RadialGrid::uniform(2048));
    const RadialProfile one{[](double) { return 1.0; }, 0.0, 1.0, {}};
    const auto w = sample(one, grid, FieldKind::vorticity);
    const TestFunction phi({0.1, 0.0}, 0.4, 0.02, 0.08);
    const Cutoff chi(0.6, 0.7);
    const double eta = chi.separation(phi.outer_radius());
    REQUIRE(eta > 0.0);
    auto boundary_on_support = [&](const Decomposition& d) {
        double m = 0.0;
        for (std::size_t i = 0; i < grid->size(); ++i)
            if ((*grid)[i] <= phi.outer_radius()) m = std::max(m, std::abs(d.boundary.values[i]));
        return m;
    };
    const auto fine = decompose_interior_boundary(w, chi, 16);
    CHECK(0.5 / 16 < eta);
    CHECK(boundary_on_support(fine) == 0.0);
    const auto terms = boundary_split_terms(fine, phi);
    CHECK(terms[2] == 0.0);
    CHECK(terms[3] == 0.0);
    const auto coarse = decompose_interior_boundary(w, chi, 4);
    CHECK(0.5 / 4 > eta);
    CHECK(boundary_on_support(coarse) > 0.0);
}
