#pragma once

#include <span>
#include <vector>

#include "vvlab/fields.hpp"
#include "vvlab/radial.hpp"
#include "vvlab/test_function.hpp"

namespace vvlab {

/// K = {|x| <= a} with 0 < a < 1.
class CompactSubdomain {
public:
    explicit CompactSubdomain(double a);
    double radius() const { return a_; }
    double distance_to_boundary() const { return 1.0 - a_; }

private:
    double a_;
};

/// sup over the sampled times of the L1 norm of the vorticity on K.
double l1_on_compact(const Trajectory& traj, const CompactSubdomain& K);

/// Integral of |f| over B(x; rho) intersected with the unit disk, for radial f and |x| = d.
/// Uses the arc length of {|y| = s} inside the ball as a weight on the radial integral.
double ball_integral(const RadialField& f, double d, double rho);

/// Centers |x| = 0, h, 2h, ... up to the radius of K (the sup over angles is trivial).
std::vector<double> center_lattice(const CompactSubdomain& K, double step = 0.01);

/// sup over the center lattice of ball_integral.
double maximal_function(const RadialField& f, const CompactSubdomain& K, double rho);

enum class TimeAggregate { integral, supremum };

struct MaximalFunctionCurve {
    std::vector<double> radii;
    /// per_n[i][j]: member i, radius j.
    std::vector<std::vector<double>> per_n;
    std::vector<double> sup_values;
};

/// One row of per_n: trapezoid in time (or sup over time) of maximal_function.
/// Throws ResolutionError when a radius is below two grid spacings.
std::vector<double> maximal_function_values(const Trajectory& traj, const CompactSubdomain& K,
                                            std::span<const double> radii,
                                            TimeAggregate mode = TimeAggregate::integral);

/// Radii must be strictly decreasing.
MaximalFunctionCurve maximal_function_curve(std::span<const Trajectory> trajs, const CompactSubdomain& K,
                                            std::span<const double> radii,
                                            TimeAggregate mode = TimeAggregate::integral);

/// Combines per-member rows computed elsewhere into a curve with the sup over members.
MaximalFunctionCurve assemble_curve(std::span<const double> radii, std::vector<std::vector<double>> per_n);

/// int_0^T int (u - reference) . grad-perp(phi) dx dt for u piecewise linear in time.
double weak_pairing(const Trajectory& traj, const RadialProfile& reference, const TestFunction& phi);

struct WeakStarDistance {
    double pairing_residual = 0.0;
    double l2_distance = 0.0;
};

/// Max pairing residual over the battery and sup_t ||u(t) - reference||_L2.
/// Throws ParameterError on an empty battery.
WeakStarDistance weak_star_l2_distance(const Trajectory& traj, const RadialProfile& reference,
                                       std::span<const TestFunction> battery);

/// ||u - reference||_L2 on the disk for one sample.
double l2_distance(const RadialField& u, const RadialProfile& reference);

/// Deterministic battery of test functions supported in {|x| <= outer} x (0, T).
std::vector<TestFunction> make_pairing_battery(std::size_t count, double final_time, unsigned long long seed,
                                               double outer = 0.75);

struct LogDecayFit {
    double constant = 0.0;
    /// max over the smaller radii of max(0, m_i - C g_i) / max_i m_i.
    double residual = 0.0;
    bool concentration = false;
    bool degenerate = false;
    std::vector<double> radii;
    std::vector<double> values;
};

/// Fits the maximal function m_i of |f| on K against C g_i, g_i = |log r_i|^{-1/2}. C is the
/// smallest constant with C g_i >= m_i on the larger half of the radii; the residual measures
/// how far the smaller radii exceed that envelope, and a residual above 0.1 flags concentration.
/// Throws ParameterError when the radii span less than two decades.
LogDecayFit log_decay_check(const RadialField& f, std::span<const double> radii,
                            const CompactSubdomain& K = CompactSubdomain(0.7));

/// Per-member scalars.
struct ConvergenceEntry {
    int index = 0;
    double nu = 0.0;
    double l1_sup = 0.0;
    double l2_distance = 0.0;
    double pairing_residual = 0.0;
    std::vector<double> maximal_values;
};

struct ConvergenceReport {
    std::vector<double> radii;
    std::vector<ConvergenceEntry> entries;
    MaximalFunctionCurve curve;
};

ConvergenceEntry diagnose_member(const Trajectory& traj, int index, const CompactSubdomain& K,
                                 std::span<const double> radii, const RadialProfile& reference,
                                 std::span<const TestFunction> battery,
                                 TimeAggregate mode = TimeAggregate::integral);

}  // namespace vvlab
