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

// Control waveforms and pulse schedules.
//
// A schedule is an ordered list of timed segments (RAP sweeps, square pulses,
// idles) interleaved with zero-duration events (global ground-state flips).
// Each timed segment carries its own local time axis starting at 0.

#include "rydrap/core.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rydrap {

/// One RAP sweep of width `sweep_width`. The super-Gaussian envelope is
/// floored so that it vanishes at both edges; the detuning is a sine
/// centred on the sweep whose sign alternates with `k_index`.
struct RapParams {
    double omega_max = 0.17;
    double delta_max = 0.24;
    double sweep_width = 1.0;
    double tau_r = 0.35;
    double tau_d = 1.0;
    int k_index = 1;

    static RapParams with_ratios(double omega_max, double delta_max, double sweep_width, int k_index,
                                 double tau_r_ratio = 0.35, double tau_d_ratio = 1.0) {
        return {omega_max, delta_max, sweep_width, tau_r_ratio * sweep_width, tau_d_ratio * sweep_width, k_index};
    }

    void validate() const {
        if (!(omega_max > 0.0)) throw std::invalid_argument("RapParams: omega_max must be positive");
        if (!(sweep_width > 0.0)) throw std::invalid_argument("RapParams: sweep_width must be positive");
        if (!(tau_r > 0.0) || !(tau_d > 0.0)) throw std::invalid_argument("RapParams: tau_r and tau_d must be positive");
        if (k_index < 1) throw std::invalid_argument("RapParams: k_index must be >= 1");
        if (delta_max < 0.0) throw std::invalid_argument("RapParams: delta_max must be non-negative");
    }

    bool operator==(const RapParams&) const = default;
};

/// Instantaneous drive parameters.
struct Drive {
    double omega = 0.0;
    double delta = 0.0;
};

/// Envelope floor a = exp(-(T_p / (2 tau_R))^4).
inline double rap_floor(const RapParams& p) {
    const double x = p.sweep_width / (2.0 * p.tau_r);
    return std::exp(-(x * x) * (x * x));
}

inline Drive rap_waveform(double t, const RapParams& p) {
    if (t < 0.0 || t > p.sweep_width) throw std::out_of_range("rap_waveform: t outside the sweep");
    const double a = rap_floor(p);
    const double u = (t - 0.5 * p.sweep_width) / p.tau_r;
    const double u2 = u * u;
    const double envelope = (std::exp(-u2 * u2) - a) / (1.0 - a);
    const double sign = (p.k_index % 2 == 1) ? 1.0 : -1.0;
    const double delta = sign * p.delta_max * std::sin(std::numbers::pi * (t - 0.5 * p.sweep_width) / p.tau_d);
    // Clamp the rounding residue at the edges so the envelope is exactly 0 there.
    return {p.omega_max * std::max(envelope, 0.0), delta};
}

struct RapSegment {
    RapParams params;
    Level coupled = Level::g1;
};

struct SquareSegment {
    double omega = 1.0;
    double duration = 0.0;
    double delta = 0.0;
    Level coupled = Level::g1;
};

struct IdleSegment {
    double duration = 0.0;
};

/// Instantaneous global g0 <-> g1 swap on every atom.
struct GroundFlip {};

using Segment = std::variant<RapSegment, SquareSegment, IdleSegment, GroundFlip>;

inline double segment_duration(const Segment& s) {
    return std::visit(
        [](const auto& seg) -> double {
            using T = std::decay_t<decltype(seg)>;
            if constexpr (std::is_same_v<T, RapSegment>) return seg.params.sweep_width;
            else if constexpr (std::is_same_v<T, SquareSegment>) return seg.duration;
            else if constexpr (std::is_same_v<T, IdleSegment>) return seg.duration;
            else return 0.0;
        },
        s);
}

inline bool is_instant(const Segment& s) { return std::holds_alternative<GroundFlip>(s); }

/// Drive and coupled ground level at local time `t` of a timed segment.
inline Drive segment_drive(const Segment& s, double t) {
    if (const auto* r = std::get_if<RapSegment>(&s)) return rap_waveform(t, r->params);
    if (const auto* q = std::get_if<SquareSegment>(&s)) return {q->omega, q->delta};
    return {};
}

inline Level segment_coupling(const Segment& s) {
    if (const auto* r = std::get_if<RapSegment>(&s)) return r->coupled;
    if (const auto* q = std::get_if<SquareSegment>(&s)) return q->coupled;
    return Level::g1;
}

class PulseSchedule {
public:
    PulseSchedule() = default;
    explicit PulseSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {}

    const std::vector<Segment>& segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }

    double total_duration() const {
        double t = 0.0;
        for (const auto& s : segments_) t += segment_duration(s);
        return t;
    }

    /// Start time of every segment on the global axis.
    std::vector<double> segment_starts() const {
        std::vector<double> out;
        double t = 0.0;
        for (const auto& s : segments_) {
            out.push_back(t);
            t += segment_duration(s);
        }
        return out;
    }

    /// Index of the timed segment active at global time t. At an interior
    /// boundary the later segment wins.
    std::size_t segment_at(double t) const {
        const double total = total_duration();
        if (t < 0.0 || t > total) throw std::out_of_range("PulseSchedule: time outside schedule");
        double start = 0.0;
        std::size_t last_timed = segments_.size();
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const double d = segment_duration(segments_[i]);
            if (is_instant(segments_[i])) continue;
            last_timed = i;
            if (t < start + d) return i;
            start += d;
        }
        if (last_timed == segments_.size()) throw std::out_of_range("PulseSchedule: no timed segment");
        return last_timed;
    }

    Drive drive_at(double t) const {
        const auto i = segment_at(t);
        const double local = t - segment_starts()[i];
        return segment_drive(segments_[i], std::clamp(local, 0.0, segment_duration(segments_[i])));
    }

    Level coupling_at(double t) const { return segment_coupling(segments_[segment_at(t)]); }

    int rap_count() const {
        int c = 0;
        for (const auto& s : segments_) c += std::holds_alternative<RapSegment>(s) ? 1 : 0;
        return c;
    }

private:
    std::vector<Segment> segments_;
};

// Descriptors consumed by build_schedule.
struct RapStep {
    double omega_max = 0.17;
    double delta_max = 0.24;
    double sweep_width = 1.0;
    double tau_r_ratio = 0.35;
    double tau_d_ratio = 1.0;
};
struct PiGStep {};
/// Switch which ground level the laser couples to |r> for all later segments.
struct RetargetStep {
    Level ground = Level::g0;
};
struct SquareStep {
    double omega = 1.0;
    double duration = 0.0;
};
struct IdleStep {
    double duration = 0.0;
};
using StepDescriptor = std::variant<RapStep, PiGStep, RetargetStep, SquareStep, IdleStep>;

class ScheduleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Assigns k = 1, 2, ... to RAP steps in order and checks detuning
/// continuity between RAPs separated only by instantaneous events.
inline PulseSchedule build_schedule(std::span<const StepDescriptor> steps) {
    if (steps.empty()) throw ScheduleError("build_schedule: empty descriptor list");
    std::vector<Segment> segments;
    Level coupled = Level::g1;
    int k = 0;
    // Last RAP, cleared whenever a timed non-RAP segment intervenes.
    std::optional<RapParams> prev_rap;
    for (const auto& step : steps) {
        if (const auto* r = std::get_if<RapStep>(&step)) {
            RapSegment seg{RapParams::with_ratios(r->omega_max, r->delta_max, r->sweep_width, ++k, r->tau_r_ratio,
                                                  r->tau_d_ratio),
                           coupled};
            seg.params.validate();
            if (prev_rap) {
                const double end = rap_waveform(prev_rap->sweep_width, *prev_rap).delta;
                const double start = rap_waveform(0.0, seg.params).delta;
                const double scale = std::max(prev_rap->delta_max, seg.params.delta_max);
                if (std::abs(end - start) > 1e-12 * scale)
                    throw ScheduleError("build_schedule: detuning discontinuity between RAP " + std::to_string(k - 1) +
                                        " and RAP " + std::to_string(k));
            }
            segments.emplace_back(seg);
            prev_rap = seg.params;
        } else if (std::holds_alternative<PiGStep>(step)) {
            segments.emplace_back(GroundFlip{});
        } else if (const auto* t = std::get_if<RetargetStep>(&step)) {
            if (t->ground != Level::g0 && t->ground != Level::g1)
                throw ScheduleError("build_schedule: retarget must name a ground level");
            coupled = t->ground;
        } else if (const auto* q = std::get_if<SquareStep>(&step)) {
            if (!(q->duration >= 0.0)) throw ScheduleError("build_schedule: negative square duration");
            segments.emplace_back(SquareSegment{q->omega, q->duration, 0.0, coupled});
            prev_rap.reset();
        } else if (const auto* i = std::get_if<IdleStep>(&step)) {
            if (!(i->duration >= 0.0)) throw ScheduleError("build_schedule: negative idle duration");
            segments.emplace_back(IdleSegment{i->duration});
            prev_rap.reset();
        }
    }
    return PulseSchedule(std::move(segments));
}

inline PulseSchedule build_schedule(std::initializer_list<StepDescriptor> steps) {
    return build_schedule(std::span<const StepDescriptor>(steps.begin(), steps.size()));
}

/// Resonant square pulse realising a collective pi rotation of n blockaded
/// atoms: the effective Rabi frequency is sqrt(n) * omega.
inline SquareStep square_pi_segment(int n_atoms_driven_collectively, double omega) {
    if (n_atoms_driven_collectively < 1) throw std::invalid_argument("square_pi_segment: need at least one atom");
    if (!(omega > 0.0)) throw std::invalid_argument("square_pi_segment: omega must be positive");
    return {omega, std::numbers::pi / (std::sqrt(static_cast<double>(n_atoms_driven_collectively)) * omega)};
}

/// Local g0 <-> g1 swap, identity on ryd (and dump).
inline CMatrix ground_flip_local(int dim_local) {
    if (dim_local < 3) throw std::invalid_argument("ground_flip_local: dim_local must be >= 3");
    CMatrix u = CMatrix::Identity(dim_local, dim_local);
    u(0, 0) = u(1, 1) = 0.0;
    u(0, 1) = u(1, 0) = 1.0;
    return u;
}

/// Basis permutation realised by flipping g0 <-> g1 on the listed atoms:
/// perm[i] is the image of basis index i.
inline std::vector<Eigen::Index> ground_flip_permutation(std::span<const int> atoms, int n_atoms, int dim_local) {
    const std::size_t dim = hilbert_dim(n_atoms, dim_local);
    std::vector<Eigen::Index> perm(dim);
    for (std::size_t s = 0; s < dim; ++s) {
        std::size_t img = s;
        for (int a : atoms) {
            const int dg = digit_of(s, a, n_atoms, dim_local);
            const std::size_t stride = digit_stride(a, n_atoms, dim_local);
            if (dg == 0) img += stride;
            else if (dg == 1) img -= stride;
        }
        perm[s] = static_cast<Eigen::Index>(img);
    }
    return perm;
}

inline std::vector<int> all_atoms(int n_atoms) {
    std::vector<int> v(static_cast<std::size_t>(n_atoms));
    for (int i = 0; i < n_atoms; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
}

/// Global pi_g as a dense operator.
inline Operator pi_g_unitary(int n_atoms, int dim_local) {
    const auto atoms = all_atoms(n_atoms);
    const auto perm = ground_flip_permutation(atoms, n_atoms, dim_local);
    const auto dim = static_cast<Eigen::Index>(perm.size());
    CMatrix u = CMatrix::Zero(dim, dim);
    for (Eigen::Index s = 0; s < dim; ++s) u(perm[static_cast<std::size_t>(s)], s) = 1.0;
    return Operator(n_atoms, dim_local, std::move(u));
}

struct WaveformSample {
    double t = 0.0;
    double omega = 0.0;
    double delta = 0.0;
};

/// Uniform sampling of (Omega, Delta) over the whole schedule.
inline std::vector<WaveformSample> sample_waveform(const PulseSchedule& schedule, int n_points) {
    if (n_points < 2) throw std::invalid_argument("sample_waveform: need at least two points");
    const double total = schedule.total_duration();
    std::vector<WaveformSample> out;
    out.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double t = total * i / (n_points - 1);
        const auto d = schedule.drive_at(t);
        out.push_back({t, d.omega, d.delta});
    }
    return out;
}

inline void write_waveform_csv(std::ostream& os, std::span<const WaveformSample> samples) {
    os << "t,omega,delta\n";
    os.precision(17);
    for (const auto& s : samples) os << s.t << ',' << s.omega << ',' << s.delta << '\n';
}

}  // namespace rydrap
