#pragma once

#include <numbers>

// Frequencies are cyclic (nu = omega / 2pi) in MHz, time in microseconds.
// Multiplying a cyclic rate in MHz by kTwoPi yields an angular rate in rad/us.

namespace magnonlink {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double angular(double cyclic_mhz) noexcept { return kTwoPi * cyclic_mhz; }

}  // namespace magnonlink
