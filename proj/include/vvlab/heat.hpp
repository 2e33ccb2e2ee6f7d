#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vvlab/cutoffs.hpp"
#include "vvlab/diagnostics.hpp"
#include "vvlab/fields.hpp"
#include "vvlab/radial.hpp"

namespace vvlab {

/// Samples on the uniform lattice (x0 + i h, y0 + j h), i < nx, j < ny; values[j * nx + i].
struct PlanarField {
    double x0 = 0.0;
    double y0 = 0.0;
    double h = 1.0;
    int nx = 0;
    int ny = 0;
    std::vector<double> values;

    double& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
    Point point(int i, int j) const { return {x0 + i * h, y0 + j * h}; }
    /// Riemann sum h^2 sum f.
    double mass() const;
};

/// Square lattice on [-half_width, half_width]^2 with n points per side.
PlanarField sample_planar(const std::function<double(Point)>& f, double half_width, int n);

/// e^{nu t Laplacian} f on the same lattice: separable convolution with sampled Gaussian weights
/// normalized to unit sum, zero extension outside the lattice. Mass leaving the lattice is lost.
/// Throws ResolutionError when 0 < sqrt(4 nu t) < h.
PlanarField heat_convolve(const PlanarField& f, double nu_t);

/// e^{nu t Laplacian} applied to a radial density f(|x|) (order 0), or to the swirl field
/// f(|x|) e_theta (order 1, returned as the e_theta component), evaluated at radius r.
struct RadialHeatOptions {
    /// Upper bound on the quadrature panel width, in addition to half the Gaussian width.
    double max_panel = 1.0 / 64.0;
    int order = 8;
    /// The Gaussian is cut where it drops below exp(-window^2 / 2) relative to its peak.
    double window = 12.0;
    /// Optional band [band_lo, band_hi] where panels are at most band_panel wide.
    double band_lo = 0.0;
    double band_hi = 0.0;
    double band_panel = 0.0;
};
double radial_heat(const RadialProfile& f, double nu_t, double r, int order = 0, const RadialHeatOptions& opt = {});

/// max of f on [a, b] for unimodal f, by golden-section search.
double maximize_unimodal(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

/// sup over rho > 0 of rho^p e^{-rho}, evaluated numerically.
double sup_power_exp(int p);

/// chi_eps: 1 on {r <= 1 - 2 eps}, 0 on {r >= 1 - eps}.
Cutoff collar_cutoff(double eps);

struct Claim1Entry {
    int index = 0;
    double nu = 0.0;
    std::vector<double> times;
    /// min of I_n over the evaluation radii and times.
    double min_value = 0.0;
    std::vector<double> l1;
    bool l1_nonincreasing = true;
    double initial_mass = 0.0;
    /// ||u_0^n||_L2 on the disk.
    double velocity_l2 = 0.0;
    /// sup_t of ||e^{nu t Lap}[chi u_0^n]||_L2 and ||e^{nu t Lap}[u_0^n . grad-perp chi]||_L2.
    double piece1 = 0.0;
    double piece2 = 0.0;
    /// ||u_0^n||_L2 and ||u_0^n||_L2 max|chi'|: the heat semigroup is an L2 contraction.
    double piece1_bound = 0.0;
    double piece2_bound = 0.0;
    bool pass = false;
};

/// Heat part I_n(t) = e^{nu t Lap}[chi_eps omega_0^n] for the sheet family.
Claim1Entry claim1_entry(const SheetFamily& family, double nu, std::span<const double> times, const Cutoff& chi);

/// chi omega_0^n, chi u_0^n (e_theta component) and u_0^n chi' as radial profiles.
RadialProfile cutoff_vorticity(const SheetFamily& family, const Cutoff& chi);
RadialProfile cutoff_velocity(const SheetFamily& family, const Cutoff& chi);
RadialProfile cutoff_cross_term(const SheetFamily& family, const Cutoff& chi);

/// Duhamel pieces at (t, |x| = rho) for t a sample time of the trajectory:
///   A = nu int_0^t int Phi_{t-s}(x - y) omega Lap(chi) dy ds,
///   B = 2 nu int_0^t int Phi_{t-s}(x - y) grad(omega) . grad(chi) dy ds,
/// with B evaluated after moving the gradient onto the kernel and the cutoff. II_n = -(A + B).
struct DuhamelValue {
    double A = 0.0;
    double B = 0.0;
};
DuhamelValue duhamel_terms(const Trajectory& traj, std::size_t time_index, double rho, const Cutoff& chi);

/// B in its original form, with grad(omega) from differences of the sampled vorticity.
double duhamel_b_direct(const Trajectory& traj, std::size_t time_index, double rho, const Cutoff& chi);

struct Claim2Entry {
    int index = 0;
    double nu = 0.0;
    double eps = 0.0;
    double sup_A = 0.0;
    double sup_B = 0.0;
    double sup_II = 0.0;
    /// nu/(pi eps^2) (1/e) T L ||Lap chi||_inf and that plus nu/(pi eps^3) (4/e^2) T L ||grad chi||_inf,
    /// with L = sup_t ||omega||_L1.
    double bound_A = 0.0;
    double bound_B = 0.0;
    /// The B estimate with the prefactors 2 and 4 that the integrated-by-parts form carries.
    double derived_bound_B = 0.0;
    double vorticity_l1 = 0.0;
    bool pass = false;
};

/// Sample lattice: rho = 0, 0.05, ... up to the radius of K, all positive sample times.
/// Throws GeometryError unless K lies in {|x| < 1 - 3 eps}.
Claim2Entry claim2_entry(const Trajectory& traj, double eps, const CompactSubdomain& K, double final_time);

/// Least-squares slope of log(values) against log(nus); NaN when fewer than two positive values.
double log_log_slope(std::span<const double> nus, std::span<const double> values);

}  // namespace vvlab
