// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <numbers>

// Atomic units: hbar = m_e = e = 1.
namespace ndt::units {

inline constexpr double kSpeedOfLight = 137.035999084;
inline constexpr double kPi = std::numbers::pi;

// Intensity (W/cm^2) whose peak field is 1 a.u.
inline constexpr double kAtomicIntensityWcm2 = 3.50944758e16;

}  // namespace ndt::units
