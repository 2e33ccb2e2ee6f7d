#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vvlab/diagnostics.hpp"
#include "vvlab/heat.hpp"
#include "vvlab/radial.hpp"
#include "vvlab/weak.hpp"

namespace vvlab::acceptance {

/// Pinned thresholds of the acceptance suite.
namespace limits {
inline constexpr double green_symmetry = 1e-12;
inline constexpr double green_boundary = 1e-10;
inline constexpr double green_weak_identity = 1e-5;
inline constexpr double aux_plateau_growth = 0.05;
inline constexpr double mode_decay = 1e-8;
inline constexpr double no_slip = 1e-10;
inline constexpr double sheet_final_ratio = 0.25;
inline constexpr double l1_factor = 4.0;
inline constexpr double l1_slack = 1.05;
inline constexpr double maximal_ratio = 0.2;
inline constexpr double slope_target = 1.0;
inline constexpr double slope_window = 0.1;
inline constexpr double claim1_floor = -1e-10;
inline constexpr double halving_factor = 3.5;
/// Residuals below this multiple of their magnitude are at roundoff and carry no order.
inline constexpr double residual_floor = 1e-12;
inline constexpr double equivalence_factor = 2.0;
}  // namespace limits

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// 1: G symmetry on 1000 random pairs, |G| on the boundary, and int G Lap psi = psi(y) after one
/// refinement, for three bumps.
CriterionResult kernel_identities(std::uint64_t seed);

/// sup |H| over pairs at distance d in each decade [1e-k, 1e-k+1), k = 1..6, with the same base
/// points and directions in every decade.
struct PlateauProfile {
    std::vector<double> decade_floor;
    std::vector<double> sup;
};
PlateauProfile aux_plateau_profile(const TestFunction& phi, std::uint64_t seed, int samples = 4000);
/// 2: the running sup grows by less than 5% over the last two decades.
CriterionResult aux_plateau(std::uint64_t seed);

/// 3: single-mode decay against exp(-nu lambda_1^2 t), energy nonincreasing along every
/// trajectory, |u_theta(1, t)| at positive times.
CriterionResult solver_exactness(std::span<const Trajectory> trajectories);

/// Velocity energy of every sample, pi int u^2 r dr by trapezoid.
std::vector<double> sample_energies(const Trajectory& traj);

/// 4: sup_t ||u(t) - u_0||_L2 per member, in schedule order.
CriterionResult sheet_limit(std::span<const double> sup_l2_distances);

/// 5: sup_t ||omega(t)||_L1(K) per member against 4 * 1.05 * its initial mass.
CriterionResult l1_bound(std::span<const double> l1_sups, std::span<const double> initial_masses);

/// 6: sup-over-members curve at its smallest radius against 0.2 times its value at the largest.
CriterionResult maximal_decay(const MaximalFunctionCurve& curve);

/// 7: measured sups below the printed bounds for every member and log-log slopes of the sups
/// against nu within 1 +- 0.1.
CriterionResult claim2(std::span<const Claim2Entry> entries);

/// 8: min I_n >= -1e-10 and ||I_n(t)||_L1 nonincreasing for every member.
CriterionResult claim1(std::span<const Claim1Entry> entries);

/// Residuals of one test field at two consecutive levels.
struct LevelPair {
    double coarse = 0.0;
    double fine = 0.0;
    double magnitude = 0.0;
};

/// |fine| <= |coarse| / 3.5, or both below residual_floor * magnitude.
bool halves_or_at_roundoff(const LevelPair& p);

/// 9: every velocity and vorticity residual pair of the battery decreases under one halving.
CriterionResult residual_vanishing(std::span<const LevelPair> velocity, std::span<const LevelPair> vorticity);

/// One steady instance of the equivalence check.
struct EquivalenceInstance {
    double r_vel = 0.0;
    double r_vort = 0.0;
    double tol_vel = 0.0;
    double tol_vort = 0.0;
};
/// 10: |R_vel + R_vort| <= 2 max(tol_vel, tol_vort) on every instance.
CriterionResult equivalence(std::span<const EquivalenceInstance> instances);

/// R_vort and its tolerance for one cutoff.
struct CutoffResidual {
    double value = 0.0;
    double tolerance = 0.0;
};
/// 11: all pairs agree within 2 max tolerance.
CriterionResult chi_independence(std::span<const CutoffResidual> residuals);

}  // namespace vvlab::acceptance
