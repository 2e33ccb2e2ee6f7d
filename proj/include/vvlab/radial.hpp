#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vvlab/fields.hpp"

namespace vvlab {

/// Nodes 0 = r_0 < r_1 < ... < r_M = 1.
class RadialGrid {
public:
    explicit RadialGrid(std::vector<double> nodes);

    static RadialGrid uniform(int intervals);
    /// r_i = sin(pi i / (2M)): spacing shrinks toward r = 1.
    static RadialGrid clustered(int intervals);

    const std::vector<double>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double max_spacing() const;
    /// Index i with r_i <= r <= r_{i+1}; r is clamped to [0, 1].
    std::size_t locate(double r) const;
    /// Number of nodes with |r - center| < half_width.
    std::size_t count_within(double center, double half_width) const;

private:
    std::vector<double> nodes_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(RadialGrid grid);

enum class FieldKind { vorticity, swirl_velocity };

struct RadialField {
    GridPtr grid;
    std::vector<double> values;
    FieldKind kind = FieldKind::vorticity;

    /// Piecewise-linear interpolant; zero outside [0, 1].
    double at(double r) const;
    RadialProfile profile() const;
};

RadialField sample(const RadialProfile& f, GridPtr grid, FieldKind kind);

/// 2 pi int_0^a |f| r dr and (2 pi int_0^1 f^2 r dr)^(1/2), trapezoid on the grid.
double l1_norm(const RadialField& f, double a = 1.0);
double l2_norm(const RadialField& f);

/// u_theta(r) = (1/r) int_0^r omega s ds (cumulative trapezoid).
RadialField velocity_from_vorticity_radial(const RadialField& omega);
/// omega(r) = (1/r) d(r u_theta)/dr, three-point differences, one-sided at the ends.
RadialField vorticity_from_velocity(const RadialField& u_theta);

/// u_theta(r) = sum_k c_k J_1(lambda_k r) with lambda_k the positive zeros of J_1.
struct ModeExpansion {
    std::vector<double> coefficients;
    std::vector<double> zeros;
    /// int_0^1 J_1(lambda_k r)^2 r dr = J_0(lambda_k)^2 / 2.
    std::vector<double> norms;
    double reconstruction_error = 0.0;
    bool truncation_warning = false;

    std::size_t size() const { return coefficients.size(); }
    /// Velocity and vorticity after diffusion time nu * t.
    double velocity(double r, double nu_t = 0.0) const;
    double vorticity(double r, double nu_t = 0.0) const;
    /// Expansion of the field at time t under viscosity nu.
    ModeExpansion advanced(double nu, double t) const;
    /// pi int u^2 r dr (half the squared L2 norm on the disk).
    double energy(double nu_t = 0.0) const;
    /// Squared L2 norm of the velocity gradient on the disk.
    double enstrophy(double nu_t = 0.0) const;

    static ModeExpansion zero(int m);
    static ModeExpansion single(int index, int m);
};

struct ProjectionOptions {
    double tolerance = 1e-6;
    int order = 16;
};

/// c_k = <u, J_1(lambda_k .)>_w / ||J_1(lambda_k .)||_w^2, weight r dr.
ModeExpansion project_modes(const RadialProfile& u_theta, int m, const ProjectionOptions& opt = {});
ModeExpansion project_modes(const RadialField& u_theta, int m, const ProjectionOptions& opt = {});

/// Mode count used for sheet-family index n.
int mode_count_for(int n);

struct Trajectory {
    double nu = 0.0;
    std::vector<double> times;
    std::vector<RadialField> velocity;
    std::vector<RadialField> vorticity;
    int family_index = 0;
    bool truncation_warning = false;
    /// Retained when the trajectory comes from evolve().
    std::optional<ModeExpansion> modes;

    GridPtr grid() const { return velocity.empty() ? nullptr : velocity.front().grid; }
    std::size_t time_count() const { return times.size(); }
};

/// Exact mode decay; vorticity by vorticity_from_velocity.
Trajectory evolve(const ModeExpansion& initial, double nu, std::span<const double> times, GridPtr grid);

/// Time samples {0} followed by a geometric sequence from first_positive up to final_time.
std::vector<double> geometric_times(double final_time, double first_positive, int positive_count);

/// Smooth annular approximations of the vortex sheet at r = 1/2.
class SheetFamily {
public:
    SheetFamily(int n, double mass);

    int index() const { return n_; }
    double mass() const { return mass_; }
    double width() const { return 1.0 / n_; }
    double amplitude() const { return amplitude_; }

    double vorticity(double r) const;
    /// Circulation integral (1/r) int_0^r omega s ds.
    double velocity(double r) const;
    RadialProfile vorticity_profile() const;
    RadialProfile velocity_profile() const;

    /// The limit u_0: 1/r for 1/2 < r <= 1, zero inside.
    static double limit_velocity(double r);
    static RadialProfile limit_profile();

private:
    int n_;
    double mass_;
    double amplitude_;
};

/// Throws ResolutionError when fewer than 8 grid nodes fall across the bump.
SheetFamily build_sheet_family(int n, const RadialGrid& grid, double mass);

}  // namespace vvlab
