// Copyright 2026 The rydrap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Physical <-> dimensionless conversion. Internally every energy and rate is
// in units of the angular Rabi unit Omega0 and time is tau = Omega0 t.

#include <numbers>
#include <stdexcept>

namespace rydrap {

struct PhysicalUnits {
    /// Omega0 / (2 pi) in MHz.
    double omega0_over_2pi_mhz = 100.0;

    /// Omega0 in rad/us.
    double omega0_rad_per_us() const { return 2.0 * std::numbers::pi * omega0_over_2pi_mhz; }

    void validate() const {
        if (!(omega0_over_2pi_mhz > 0.0)) throw std::invalid_argument("PhysicalUnits: omega0_over_2pi_MHz must be positive");
    }

    bool operator==(const PhysicalUnits&) const = default;
};

enum class Quantity {
    rate,       ///< value in 1/us
    time,       ///< value in us
    frequency,  ///< value as f/(2 pi) in MHz
};

inline double to_dimensionless(const PhysicalUnits& units, Quantity q, double value) {
    units.validate();
    if (!(value > 0.0)) throw std::invalid_argument("to_dimensionless: value must be positive");
    switch (q) {
        case Quantity::rate: return value / units.omega0_rad_per_us();
        case Quantity::time: return value * units.omega0_rad_per_us();
        case Quantity::frequency: return value / units.omega0_over_2pi_mhz;
    }
    throw std::invalid_argument("to_dimensionless: unknown quantity");
}

/// Rydberg lifetimes used by the dissipation presets, in us.
inline constexpr double kCesiumLifetimeUs = 540.0;
inline constexpr double kRubidiumLifetimeUs = 147.0;

}  // namespace rydrap
