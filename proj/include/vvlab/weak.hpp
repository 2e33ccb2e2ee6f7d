#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vvlab/cutoffs.hpp"
#include "vvlab/fields.hpp"
#include "vvlab/radial.hpp"
#include "vvlab/test_function.hpp"

namespace vvlab {

/// General 2x2 matrix; m[i][j] = d_j Phi_i for a gradient.
struct Mat2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a21 = 0.0;
    double a22 = 0.0;
};

/// Phi = grad-perp(phi) for a scalar test function phi.
class DivFreeTestField {
public:
    explicit DivFreeTestField(TestFunction phi, std::uint64_t seed = 0);

    const TestFunction& generator() const { return phi_; }
    std::uint64_t seed() const { return seed_; }

    Vec2 value(double t, Point x) const { return phi_.perp_grad(t, x); }
    Vec2 dt(double t, Point x) const { return phi_.time_derivative(t) * perp(phi_.spatial_grad(x)); }
    Mat2 gradient(double t, Point x) const;
    double divergence(double t, Point x) const;

private:
    TestFunction phi_;
    std::uint64_t seed_;
};

/// Random phi = g(t) psi(x): psi a bump on B(c, R) with B(c, R) inside the support disk,
/// R in [0.2, 0.4] x support_radius, and g a bump on a window inside [t_lo, t_hi].
/// Throws SupportError unless the support disk lies in the open unit disk and
/// 0 < t_lo < t_hi < final_time.
DivFreeTestField generate_test_field(std::uint64_t seed, Point support_center, double support_radius, double t_lo,
                                     double t_hi, double final_time);

/// Fields for seeds first_seed, first_seed + 1, ...
std::vector<DivFreeTestField> make_test_battery(std::size_t count, std::uint64_t first_seed, Point support_center,
                                                double support_radius, double t_lo, double t_hi, double final_time);

/// Resolution of the residual quadratures. Level l doubles the radial panels, the angular
/// nodes and the time nodes of level 0. Ray rules around each outer node are fixed.
struct WeakQuadrature {
    int level = 0;
    int radial_panels = 32;
    /// Gauss points per radial panel of the outer grids; 1 gives the midpoint rule.
    int radial_order = 1;
    int angular_nodes = 64;
    int time_nodes = 16;
    int ray_order = 16;
    int ray_panels = 2;
    /// Upper bound on the width of an angular panel of the ray rule.
    double max_angle_panel = 0.4;
    std::size_t max_kernel_evaluations = 100'000'000;

    int scale() const { return 1 << level; }
    WeakQuadrature refined() const {
        WeakQuadrature q = *this;
        ++q.level;
        return q;
    }
};

struct ResidualValue {
    double value = 0.0;
    /// The same quadrature applied to the absolute values of the integrands.
    double magnitude = 0.0;
};

/// int int d_t Phi . u + grad Phi : u (x) u dx dt. Gauss panels in r aligned with the field's
/// breaks, midpoint rule along the arc inside supp Phi and in t.
ResidualValue velocity_weak_residual(const VectorField2D& u, const DivFreeTestField& field,
                                     const WeakQuadrature& q = {});
/// Trajectory version; u is piecewise linear in time between samples and the time integrals
/// against g and g' are evaluated adaptively.
ResidualValue velocity_weak_residual(const Trajectory& traj, const DivFreeTestField& field,
                                     const WeakQuadrature& q = {});

inline constexpr std::array<double, 4> kDeltaSchedule{0.2, 0.1, 0.05, 0.025};

/// A(delta) split of the H double integral: far = int int H (1 - rho_delta) chi w chi w and
/// near = int int H rho_delta chi w chi w, for w the vorticity and psi the spatial factor.
struct DeltaSplitting {
    std::vector<double> deltas;
    std::vector<double> far;
    std::vector<double> near;
    /// Order p in far(delta) - far(0) ~ delta^p from the last three deltas; NaN when not used.
    double observed_order = 0.0;
    double extrapolated = 0.0;
    /// True when the last difference is below tolerance and the finest value is returned.
    bool fallback = false;
    /// Sum of |time weights| multiplying the spatial integrals.
    double time_weight = 0.0;
};

/// Richardson extrapolation of far(delta) to delta = 0. Differences at or below `tolerance`
/// count as converged. Throws QuadratureFailure when the observed order is outside [1, 4].
void extrapolate_splitting(DeltaSplitting& s, double tolerance);

struct VorticityResidual {
    double value = 0.0;
    double magnitude = 0.0;
    double time_term = 0.0;
    double h_term = 0.0;
    double far_term = 0.0;
    double eta = 0.0;
    DeltaSplitting splitting;
    std::size_t kernel_evaluations = 0;
};

/// Sum of the three terms of the interior weak vorticity form for vorticity held constant in
/// time. Throws SeparationError unless chi = 1 on a neighborhood of supp phi, BudgetError past
/// q.max_kernel_evaluations.
///
/// General densities: the H double integral runs over a polar midpoint grid in x and rays from
/// each x. Radial densities: the kernel integrals are tabulated per radius (rotation
/// equivariance) and paired with grad psi on the outer grid.
VorticityResidual vorticity_interior_residual(const ScalarField2D& omega, const TestFunction& phi, const Cutoff& chi,
                                              const WeakQuadrature& q = {});
VorticityResidual vorticity_interior_residual(const RadialProfile& omega, const TestFunction& phi, const Cutoff& chi,
                                              const WeakQuadrature& q = {});
/// Trajectory version (radial route); the bilinear terms use hat-function time weights at the samples.
VorticityResidual vorticity_interior_residual(const Trajectory& traj, const TestFunction& phi, const Cutoff& chi,
                                              const WeakQuadrature& q = {});

/// Residual at two consecutive levels with the difference as error estimate.
struct ConvergedResidual {
    double value = 0.0;
    double coarse = 0.0;
    double estimate = 0.0;
    /// quadrature_target times the magnitude.
    double tolerance = 0.0;
    int level = 0;
};

/// Raises the level from q.level until the estimate is within tolerance; QuadratureFailure
/// when max_level is reached first.
ConvergedResidual converge_residual(const std::function<ResidualValue(const WeakQuadrature&)>& eval,
                                    WeakQuadrature q, int max_level);

/// sup |H^psi(x, y)| over sampled pairs near the support of psi, distances down to 1e-6.
double sampled_aux_sup(const TestFunction& phi, double outer_radius, std::uint64_t seed, int pairs = 20000);

struct A1Check {
    double delta = 0.0;
    double near = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// |A_1(delta)| <= M ||chi w||_L1 sup_x int_{B(x, delta)} |chi w| for each delta of the splitting.
std::vector<A1Check> a1_bound_check(const DeltaSplitting& s, const RadialProfile& omega, const TestFunction& phi,
                                    const Cutoff& chi);

/// Interior and boundary parts (rho_k chi w) * zeta_k and (rho_k (1 - chi) w) * zeta_k, sampled
/// on the grid of w. Radial symmetry is preserved by the even mollifier.
struct Decomposition {
    int k = 0;
    RadialField interior;
    RadialField boundary;
};
/// Throws ParameterError when k < 2.
Decomposition decompose_interior_boundary(const RadialField& omega, const Cutoff& chi, int k);

/// The four integrals int u_X . grad psi w_Y dx, X, Y in {I, B}, with u_X the velocity of w_X:
/// {II, BI, IB, BB}. IB and BB contain w_B on supp psi.
std::array<double, 4> boundary_split_terms(const Decomposition& d, const TestFunction& phi);

}  // namespace vvlab
