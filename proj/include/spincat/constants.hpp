#pragma once

#include <numbers>

namespace spincat::constants {

// CODATA 2018.
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double bohr_radius = 5.29177210903e-11;  // m

// AME 2016 atomic masses.
inline constexpr double mass_na23 = 22.9897692820 * atomic_mass_unit;
inline constexpr double mass_rb87 = 86.909180531 * atomic_mass_unit;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace spincat::constants
