#pragma once

#include <numbers>

namespace resonet {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = std::numbers::pi;

/// SMA-RG402 semi-rigid coaxial cable.
struct CableProfile {
  double inner_radius = 0.0005;  // m
  double outer_radius = 0.0015;  // m
  double permittivity = 2.06;
};

} // namespace resonet
