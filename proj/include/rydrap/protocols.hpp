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

/// Named entanglement protocols: geometry, level scheme, pulse schedule,
/// initial and target states, plus fidelity evaluation.
///
/// With retargeting instead of pi_g, targets are the ground-flipped images.
///
/// | name            | layout   | initial | sweeps | target                          |
/// |-----------------|----------|---------|--------|---------------------------------|
/// | bell2           | line 2   | 11      | 2      | (10 + 01)/sqrt2                 |
/// | w3              | triangle | 111     | 2      | (001 + 010 + 100)/sqrt3         |
/// | w4_square       | square   | 1111    | 2      | (0001 + ... + 1000)/2           |
/// | w4_pyramid      | pyramid  | 1111    | 2      | (0001 + ... + 1000)/2           |
/// | pi_pulse_bell2  | line 2   | 11      | 2 x pi | as bell2                        |
/// | pi_pulse_w3     | triangle | 111     | 2 x pi | as w3                           |
/// | relay_bell3     | line 3   | 010     | 3      | (001 + 100)/sqrt2, middle traced|
/// | ghz4            | square   | 1111    | 2      | (0101 + 1010)/sqrt2             |

#include "rydrap/core.hpp"
#include "rydrap/dynamics.hpp"
#include "rydrap/geometry.hpp"
#include "rydrap/pulses.hpp"
#include "rydrap/units.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rydrap {

enum class ProtocolName { bell2, w3, w4_square, w4_pyramid, pi_pulse_bell2, pi_pulse_w3, relay_bell3, ghz4 };

inline constexpr std::array<ProtocolName, 8> kAllProtocols = {
    ProtocolName::bell2,          ProtocolName::w3,          ProtocolName::w4_square,   ProtocolName::w4_pyramid,
    ProtocolName::pi_pulse_bell2, ProtocolName::pi_pulse_w3, ProtocolName::relay_bell3, ProtocolName::ghz4};

inline std::string to_string(ProtocolName n) {
    switch (n) {
        case ProtocolName::bell2: return "bell2";
        case ProtocolName::w3: return "w3";
        case ProtocolName::w4_square: return "w4_square";
        case ProtocolName::w4_pyramid: return "w4_pyramid";
        case ProtocolName::pi_pulse_bell2: return "pi_pulse_bell2";
        case ProtocolName::pi_pulse_w3: return "pi_pulse_w3";
        case ProtocolName::relay_bell3: return "relay_bell3";
        case ProtocolName::ghz4: return "ghz4";
    }
    return "?";
}

inline ProtocolName protocol_from_string(const std::string& s) {
    for (auto n : kAllProtocols)
        if (to_string(n) == s) return n;
    throw std::invalid_argument("unknown protocol '" + s + "'");
}

enum class DissipationPreset { none, cs, rb };

inline std::string to_string(DissipationPreset p) {
    switch (p) {
        case DissipationPreset::none: return "none";
        case DissipationPreset::cs: return "Cs";
        case DissipationPreset::rb: return "Rb";
    }
    return "?";
}

inline DissipationPreset preset_from_string(const std::string& s) {
    if (s == "none") return DissipationPreset::none;
    if (s == "Cs" || s == "cs") return DissipationPreset::cs;
    if (s == "Rb" || s == "rb") return DissipationPreset::rb;
    throw std::invalid_argument("unknown dissipation preset '" + s + "'");
}

/// How the second ground level is brought into resonance between sweeps.
enum class GroundCouplingMode {
    pi_g,      ///< instantaneous global g0 <-> g1 flip
    retarget,  ///< laser switches to the other ground level instead
};

inline std::string to_string(GroundCouplingMode m) { return m == GroundCouplingMode::pi_g ? "pi_g" : "retarget"; }

inline GroundCouplingMode coupling_mode_from_string(const std::string& s) {
    if (s == "pi_g") return GroundCouplingMode::pi_g;
    if (s == "retarget") return GroundCouplingMode::retarget;
    throw std::invalid_argument("unknown ground coupling mode '" + s + "'");
}

struct ProtocolParams {
    double omega_max = 0.17;
    double delta_max = 0.24;
    double v0 = 0.70;
    /// Width of one sweep (dimensionless time).
    double sweep_width = 250.0;
    double tau_r_ratio = 0.35;
    double tau_d_ratio = 1.0;
    DissipationPreset preset = DissipationPreset::cs;
    GroundCouplingMode ground_coupling = GroundCouplingMode::pi_g;
    /// Omega0/(2 pi) used to turn the preset lifetime into a dimensionless rate.
    double omega0_over_2pi_mhz = 100.0;
    /// Overrides the preset's Rydberg lifetime (us).
    std::optional<double> lifetime_us;
    /// When set, omega_max = v0 / ratio (and likewise for delta_max).
    std::optional<double> v0_over_omega;
    std::optional<double> v0_over_delta;

    double effective_omega_max() const { return v0_over_omega ? v0 / *v0_over_omega : omega_max; }
    double effective_delta_max() const { return v0_over_delta ? v0 / *v0_over_delta : delta_max; }

    double lifetime() const {
        if (lifetime_us) return *lifetime_us;
        return preset == DissipationPreset::rb ? kRubidiumLifetimeUs : kCesiumLifetimeUs;
    }

    /// Dimensionless total Rydberg decay rate gamma_r / Omega0.
    double gamma_r() const {
        if (preset == DissipationPreset::none) return 0.0;
        return to_dimensionless(PhysicalUnits{omega0_over_2pi_mhz}, Quantity::rate, 1.0 / lifetime());
    }

    void validate() const {
        if (!(effective_omega_max() > 0.0)) throw std::invalid_argument("protocol.omega_max must be positive");
        if (!(effective_delta_max() >= 0.0)) throw std::invalid_argument("protocol.delta_max must be non-negative");
        if (!(v0 >= 0.0)) throw std::invalid_argument("protocol.V0 must be non-negative");
        if (!(sweep_width > 0.0)) throw std::invalid_argument("protocol.sweep_width must be positive");
        if (!(tau_r_ratio > 0.0) || !(tau_d_ratio > 0.0)) throw std::invalid_argument("protocol.tau ratios must be positive");
        if (!(omega0_over_2pi_mhz > 0.0)) throw std::invalid_argument("protocol.omega0_over_2pi_MHz must be positive");
        if (lifetime_us && !(*lifetime_us > 0.0)) throw std::invalid_argument("protocol.lifetime_us must be positive");
        if (v0_over_omega && !(*v0_over_omega > 0.0)) throw std::invalid_argument("protocol.v0_over_omega must be positive");
        if (v0_over_delta && !(*v0_over_delta > 0.0)) throw std::invalid_argument("protocol.v0_over_delta must be positive");
    }

    bool operator==(const ProtocolParams&) const = default;
};

struct ProtocolSpec {
    ProtocolName name = ProtocolName::bell2;
    ProtocolParams params;

    bool operator==(const ProtocolSpec&) const = default;
};

/// Default sweep width shared by the two-sweep protocols: tau_tot = 500,
/// i.e. 0.80 us at Omega0/(2 pi) = 100 MHz.
inline constexpr double kDefaultSweepWidth = 250.0;
/// Relay protocol: three sweeps in Omega0 tau_tot / (2 pi) = 81.
inline constexpr double kRelaySweepWidth = 27.0 * 2.0 * std::numbers::pi;

inline ProtocolSpec default_spec(ProtocolName name) {
    ProtocolSpec s;
    s.name = name;
    auto& p = s.params;
    p.sweep_width = kDefaultSweepWidth;
    switch (name) {
        case ProtocolName::bell2:
        case ProtocolName::pi_pulse_bell2:
            p.v0 = 0.70;
            break;
        case ProtocolName::w3:
        case ProtocolName::pi_pulse_w3:
            p.v0 = 0.73;
            break;
        case ProtocolName::w4_square:
        case ProtocolName::w4_pyramid:
            // Square diagonals see V0/8, so blockade there needs V0 well above V_sat.
            p.v0 = 8.0;
            break;
        case ProtocolName::relay_bell3:
            p.omega_max = 0.265;
            p.delta_max = 0.247;
            p.v0 = 0.96;
            p.sweep_width = kRelaySweepWidth;
            p.preset = DissipationPreset::rb;
            break;
        case ProtocolName::ghz4:
            p.v0 = 1.13;
            p.v0_over_omega = 4.85;
            p.v0_over_delta = 4.05;
            p.omega_max = p.effective_omega_max();
            p.delta_max = p.effective_delta_max();
            break;
    }
    return s;
}

/// Everything needed to run and score one protocol.
struct ProtocolInstance {
    ProtocolSpec spec;
    AtomLayout layout;
    InteractionMatrix interactions;
    LevelScheme scheme;
    PulseSchedule schedule;
    QuantumState initial;
    /// Target on the kept atoms.
    QuantumState target;
    /// Atoms scored against the target; empty means all.
    std::vector<int> keep;
};

namespace detail {

inline std::vector<std::string> single_excitation_labels(int n, char background, char excited) {
    std::vector<std::string> out;
    for (int i = n - 1; i >= 0; --i) {
        std::string s(static_cast<std::size_t>(n), background);
        s[static_cast<std::size_t>(i)] = excited;
        out.push_back(s);
    }
    return out;
}

inline std::string flip_ground(std::string s) {
    for (char& c : s) c = c == '0' ? '1' : (c == '1' ? '0' : c);
    return s;
}

struct ProtocolShape {
    LayoutShape layout;
    int n_atoms;
    std::string initial;
    std::vector<std::string> target;
    int n_sweeps;
    bool square_pulses;
    std::vector<int> keep;
};

inline ProtocolShape shape_of(ProtocolName name) {
    switch (name) {
        case ProtocolName::bell2: return {LayoutShape::line, 2, "11", single_excitation_labels(2, '0', '1'), 2, false, {}};
        case ProtocolName::w3: return {LayoutShape::triangle, 3, "111", single_excitation_labels(3, '0', '1'), 2, false, {}};
        case ProtocolName::w4_square: return {LayoutShape::square, 4, "1111", single_excitation_labels(4, '0', '1'), 2, false, {}};
        case ProtocolName::w4_pyramid: return {LayoutShape::pyramid, 4, "1111", single_excitation_labels(4, '0', '1'), 2, false, {}};
        case ProtocolName::pi_pulse_bell2: return {LayoutShape::line, 2, "11", single_excitation_labels(2, '0', '1'), 2, true, {}};
        case ProtocolName::pi_pulse_w3: return {LayoutShape::triangle, 3, "111", single_excitation_labels(3, '0', '1'), 2, true, {}};
        case ProtocolName::relay_bell3: return {LayoutShape::line, 3, "010", {"001", "100"}, 3, false, {0, 2}};
        case ProtocolName::ghz4: return {LayoutShape::square, 4, "1111", {"0101", "1010"}, 2, false, {}};
    }
    throw std::invalid_argument("unknown protocol");
}

/// Square pi pulse centred in a slot of the given width.
inline void append_centered_pi(std::vector<StepDescriptor>& steps, int collective_n, double omega, double slot) {
    const SquareStep pulse = square_pi_segment(collective_n, omega);
    const double pad = 0.5 * std::max(slot - pulse.duration, 0.0);
    if (pad > 0.0) steps.emplace_back(IdleStep{pad});
    steps.emplace_back(pulse);
    if (pad > 0.0) steps.emplace_back(IdleStep{pad});
}

}  // namespace detail

inline LevelScheme scheme_for(const ProtocolSpec& spec) {
    const double gamma = spec.params.gamma_r();
    if (spec.name == ProtocolName::relay_bell3 || spec.params.preset == DissipationPreset::rb)
        return gamma > 0.0 ? LevelScheme::rubidium_dump(gamma) : LevelScheme::closed_with_dump();
    return gamma > 0.0 ? LevelScheme::cesium(gamma) : LevelScheme::closed();
}

/// Schedule for a spec: sweeps separated by pi_g flips (or retargets).
inline PulseSchedule schedule_for(const ProtocolSpec& spec) {
    const auto shape = detail::shape_of(spec.name);
    const auto& p = spec.params;
    const double omega = p.effective_omega_max();
    const double delta = p.effective_delta_max();
    std::vector<StepDescriptor> steps;
    Level coupled = Level::g1;
    for (int k = 0; k < shape.n_sweeps; ++k) {
        if (k > 0) {
            if (p.ground_coupling == GroundCouplingMode::pi_g) {
                steps.emplace_back(PiGStep{});
            } else {
                coupled = coupled == Level::g1 ? Level::g0 : Level::g1;
                steps.emplace_back(RetargetStep{coupled});
            }
        }
        if (shape.square_pulses) {
            // The first pulse drives the blockaded collective transition, later
            // ones a single excited atom.
            detail::append_centered_pi(steps, k == 0 ? shape.n_atoms : 1, omega, p.sweep_width);
        } else {
            steps.emplace_back(RapStep{omega, delta, p.sweep_width, p.tau_r_ratio, p.tau_d_ratio});
        }
    }
    return build_schedule(steps);
}

inline ProtocolInstance build_protocol(const ProtocolSpec& spec) {
    spec.params.validate();
    const auto shape = detail::shape_of(spec.name);
    auto layout = build_layout(shape.layout, shape.n_atoms, 1.0, spec.params.v0);
    auto v = interaction_matrix(layout);
    auto scheme = scheme_for(spec);
    const int d = scheme.dim_local();

    // With retargeting the state differs from the pi_g route by one global
    // ground flip per skipped pi_g.
    std::vector<std::string> target = shape.target;
    if (spec.params.ground_coupling == GroundCouplingMode::retarget && (shape.n_sweeps - 1) % 2 == 1)
        for (auto& t : target) t = detail::flip_ground(t);
    if (!shape.keep.empty())
        for (auto& t : target) {
            std::string kept;
            for (int a : shape.keep) kept += t[static_cast<std::size_t>(a)];
            t = kept;
        }

    return ProtocolInstance{spec,
                            std::move(layout),
                            std::move(v),
                            scheme,
                            schedule_for(spec),
                            QuantumState::basis(shape.initial, d),
                            QuantumState::superposition(target, d),
                            shape.keep};
}

enum class FidelityConvention {
    standard,        ///< <psi|rho|psi>
    paper_squared,   ///< |<psi|rho|psi>|^2
};

inline FidelityConvention convention_from_string(const std::string& s) {
    if (s == "standard") return FidelityConvention::standard;
    if (s == "paper" || s == "paper_squared") return FidelityConvention::paper_squared;
    throw std::invalid_argument("unknown fidelity convention '" + s + "'");
}

inline std::string to_string(FidelityConvention c) {
    return c == FidelityConvention::standard ? "standard" : "paper_squared";
}

inline double fidelity(const QuantumState& rho, const QuantumState& target,
                       FidelityConvention convention = FidelityConvention::standard) {
    if (!target.is_pure()) throw std::invalid_argument("fidelity: target must be pure");
    if (rho.n_atoms() != target.n_atoms() || rho.dim_local() != target.dim_local())
        throw std::invalid_argument("fidelity: state and target dimensions differ");
    const CVector& psi = target.amplitudes();
    double f = rho.is_pure() ? std::norm(psi.dot(rho.amplitudes())) : psi.dot(rho.density_matrix() * psi).real();
    f = std::clamp(f, 0.0, 1.0);
    return convention == FidelityConvention::standard ? f : f * f;
}

/// Local g0 <-> g1 flips on atoms 1 and 3 of a four-atom state.
inline QuantumState ghz_canonicalize(const QuantumState& state) {
    if (state.n_atoms() != 4) throw std::invalid_argument("ghz_canonicalize: expects a 4-atom state");
    const std::array<int, 2> atoms{1, 3};
    const auto perm = ground_flip_permutation(atoms, 4, state.dim_local());
    if (state.is_pure()) return QuantumState::unchecked_pure(4, state.dim_local(), detail::permute(state.amplitudes(), perm));
    return QuantumState::unchecked_density(4, state.dim_local(), detail::permute(state.density_matrix(), perm));
}

struct ProtocolOutcome {
    QuantumState final_state;
    /// State restricted to the scored atoms.
    QuantumState scored_state;
    double fidelity = 0.0;
};

/// Runs a protocol. Closed schemes use the pure-state propagator.
inline ProtocolOutcome simulate_protocol(const ProtocolInstance& inst, const IntegratorSettings& settings = {},
                                         FidelityConvention convention = FidelityConvention::standard,
                                         const Checkpoints* checkpoints = nullptr) {
    QuantumState final_state = inst.scheme.dissipative()
                                   ? evolve_density(inst.initial, inst.schedule, inst.interactions, inst.scheme,
                                                    LindbladChannelSet::from_scheme(inst.scheme, inst.initial.n_atoms()),
                                                    settings, checkpoints)
                                   : evolve_pure(inst.initial, inst.schedule, inst.interactions, inst.scheme, settings,
                                                 checkpoints);
    QuantumState scored = inst.keep.empty() ? final_state : partial_trace(final_state, inst.keep);
    const double f = fidelity(scored, inst.target, convention);
    return {std::move(final_state), std::move(scored), f};
}

/// Same protocol with the interactions replaced (positional Monte Carlo).
inline ProtocolInstance with_layout(ProtocolInstance inst, AtomLayout layout) {
    inst.interactions = interaction_matrix(layout);
    inst.layout = std::move(layout);
    return inst;
}

}  // namespace rydrap
