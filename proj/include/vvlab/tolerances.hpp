#pragma once

namespace vvlab::tol {

inline constexpr double kernel_identity = 1e-10;
inline constexpr double quadrature_target = 1e-6;

/// Pair distance below which two points count as coincident.
inline constexpr double coincident = 1e-14;
/// Slack on |x|^2 <= 1 for points of the closed disk.
inline constexpr double disk_slack = 1e-12;
/// Relative slack for "nonincreasing" checks on sums of many positive terms.
inline constexpr double roundoff_relative = 1e-12;

}  // namespace vvlab::tol
