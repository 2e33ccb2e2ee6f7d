#pragma once

#include <filesystem>
#include <limits>
#include <string>

#include "vvlab/radial.hpp"

namespace vvlab {

/// Long-format CSV with header `t,r,u_theta,omega`, one row per (time, node).
std::string trajectory_csv(const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
/// The CSV carries no viscosity; the caller supplies it.
Trajectory read_trajectory_csv(const std::filesystem::path& path,
                               double nu = std::numeric_limits<double>::quiet_NaN());

/// Binary layout, little-endian:
///   char[8] magic "VVLTRAJ1"; uint32 version; uint32 M (nodes); uint32 J (times); float64 nu;
///   float64 r[M]; float64 t[J]; float64 u_theta[J][M]; float64 omega[J][M].
std::string trajectory_binary(const Trajectory& traj);
void write_trajectory_binary(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_binary(const std::filesystem::path& path);

inline constexpr std::uint32_t kTrajectoryFormatVersion = 1;

}  // namespace vvlab
