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

/// Time evolution under the driven Rydberg Hamiltonian
///
///   H(t) = Delta(t) sum_i |r><r|_i + Omega(t)/2 sum_i (|r><g|_i + h.c.)
///          + sum_{i<j} V_ij |rr><rr|_ij,
///
/// with g the currently coupled ground level (g1 unless retargeted).
/// Closed systems follow i d|psi>/dt = H|psi>; open systems follow
///
///   d rho/dt = -i[H, rho] + sum_k (L_k rho L_k^+ - {L_k^+ L_k, rho}/2).
///
/// The main propagators integrate segment by segment with an adaptive
/// Dormand-Prince pair, acting on the state through precomputed index
/// tables. `propagate_oracle` is an independent route: piecewise-constant
/// generators assembled as explicit sparse superoperators and exponentiated.

#include "rydrap/core.hpp"
#include "rydrap/geometry.hpp"
#include "rydrap/integrator.hpp"
#include "rydrap/pulses.hpp"

#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rydrap {

/// Jump operators, one per (atom, decay channel) pair.
class LindbladChannelSet {
public:
    struct Jump {
        int atom = 0;
        DecayChannel channel;
    };

    LindbladChannelSet() = default;

    static LindbladChannelSet from_scheme(const LevelScheme& scheme, int n_atoms) {
        LindbladChannelSet set;
        set.n_atoms_ = n_atoms;
        set.dim_local_ = scheme.dim_local();
        for (int a = 0; a < n_atoms; ++a)
            for (const auto& c : scheme.channels())
                if (c.rate > 0.0) set.jumps_.push_back({a, c});
        return set;
    }

    bool empty() const { return jumps_.empty(); }
    std::size_t size() const { return jumps_.size(); }
    const std::vector<Jump>& jumps() const { return jumps_; }
    int n_atoms() const { return n_atoms_; }
    int dim_local() const { return dim_local_; }

    /// sqrt(rate) |to><from| embedded on the jump's atom.
    Operator jump_operator(std::size_t k) const {
        const auto& j = jumps_.at(k);
        return embed_single(std::sqrt(j.channel.rate) * local_transition(j.channel.to, j.channel.from, dim_local_),
                            j.atom, n_atoms_, dim_local_);
    }

    std::vector<Operator> jump_operators() const {
        std::vector<Operator> out;
        for (std::size_t k = 0; k < jumps_.size(); ++k) out.push_back(jump_operator(k));
        return out;
    }

private:
    int n_atoms_ = 0;
    int dim_local_ = 3;
    std::vector<Jump> jumps_;
};

/// Dense H(t) built from embedded single-site and two-site operators.
inline Operator hamiltonian_from_drive(Drive drive, Level coupled, const InteractionMatrix& v, const LevelScheme& scheme) {
    const int n = static_cast<int>(v.rows());
    const int d = scheme.dim_local();
    if (v.cols() != n || n < 1) throw std::invalid_argument("hamiltonian: interaction matrix must be square");
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(n, d));
    CMatrix h = CMatrix::Zero(dim, dim);
    const CMatrix nr = local_projector(Level::ryd, d);
    const CMatrix flip = local_transition(Level::ryd, coupled, d) + local_transition(coupled, Level::ryd, d);
    for (int i = 0; i < n; ++i) {
        h += drive.delta * embed_single(nr, i, n, d).matrix();
        h += (0.5 * drive.omega) * embed_single(flip, i, n, d).matrix();
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (v(i, j) != 0.0) h += v(i, j) * two_site_projector(i, j, Level::ryd, n, d).matrix();
    return Operator(n, d, std::move(h));
}

inline Operator hamiltonian_at(double t, const PulseSchedule& schedule, const InteractionMatrix& v,
                               const LevelScheme& scheme) {
    return hamiltonian_from_drive(schedule.drive_at(t), schedule.coupling_at(t), v, scheme);
}

namespace detail {

/// Index tables that apply H(t) and the dissipator without forming
/// dense operators.
class FastModel {
public:
    FastModel(const InteractionMatrix& v, const LevelScheme& scheme, const LindbladChannelSet* channels)
        : n_(static_cast<int>(v.rows())), d_(scheme.dim_local()), dim_(static_cast<Eigen::Index>(hilbert_dim(n_, d_))) {
        ryd_count_ = Eigen::VectorXd::Zero(dim_);
        interaction_ = Eigen::VectorXd::Zero(dim_);
        for (Eigen::Index s = 0; s < dim_; ++s) {
            std::vector<int> dg(static_cast<std::size_t>(n_));
            for (int a = 0; a < n_; ++a) dg[static_cast<std::size_t>(a)] = digit_of(static_cast<std::size_t>(s), a, n_, d_);
            double e = 0.0;
            int nr = 0;
            for (int i = 0; i < n_; ++i) {
                if (dg[static_cast<std::size_t>(i)] != level_index(Level::ryd)) continue;
                ++nr;
                for (int j = i + 1; j < n_; ++j)
                    if (dg[static_cast<std::size_t>(j)] == level_index(Level::ryd)) e += v(i, j);
            }
            ryd_count_(s) = nr;
            interaction_(s) = e;
        }
        for (Level g : {Level::g0, Level::g1}) {
            auto& pairs = drive_pairs_[static_cast<std::size_t>(level_index(g))];
            for (Eigen::Index s = 0; s < dim_; ++s)
                for (int a = 0; a < n_; ++a)
                    if (digit_of(static_cast<std::size_t>(s), a, n_, d_) == level_index(g)) {
                        const auto stride = static_cast<Eigen::Index>(digit_stride(a, n_, d_));
                        pairs.emplace_back(s, s + (level_index(Level::ryd) - level_index(g)) * stride);
                    }
        }
        if (channels != nullptr) {
            loss_ = Eigen::VectorXd::Zero(dim_);
            for (const auto& j : channels->jumps()) {
                JumpTable table;
                table.rate = j.channel.rate;
                const auto stride = static_cast<Eigen::Index>(digit_stride(j.atom, n_, d_));
                const int from = level_index(j.channel.from), to = level_index(j.channel.to);
                for (Eigen::Index s = 0; s < dim_; ++s)
                    if (digit_of(static_cast<std::size_t>(s), j.atom, n_, d_) == from) {
                        table.src.push_back(s);
                        table.dst.push_back(s + (to - from) * stride);
                        loss_(s) += j.channel.rate;
                    }
                jumps_.push_back(std::move(table));
            }
        }
    }

    Eigen::Index dim() const { return dim_; }

    /// Diagonal part of H for detuning `delta`.
    Eigen::VectorXd diagonal(double delta) const { return delta * ryd_count_ + interaction_; }

    const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs(Level coupled) const {
        return drive_pairs_[static_cast<std::size_t>(level_index(coupled))];
    }

    /// dpsi = -i H psi
    void schrodinger(Drive drive, Level coupled, const CVector& psi, CVector& dpsi) const {
        const Eigen::VectorXd diag = diagonal(drive.delta);
        dpsi = diag.cast<Complex>().cwiseProduct(psi);
        const double half = 0.5 * drive.omega;
        if (half != 0.0)
            for (const auto& [lo, hi] : pairs(coupled)) {
                dpsi(hi) += half * psi(lo);
                dpsi(lo) += half * psi(hi);
            }
        dpsi *= Complex(0.0, -1.0);
    }

    /// drho = -i[H, rho] + dissipator(rho)
    void lindblad(Drive drive, Level coupled, const CMatrix& rho, CMatrix& drho) const {
        const Eigen::VectorXd diag = diagonal(drive.delta);
        // -i (D rho - rho D) for diagonal D.
        for (Eigen::Index c = 0; c < dim_; ++c)
            for (Eigen::Index r = 0; r < dim_; ++r)
                drho(r, c) = Complex(0.0, -(diag(r) - diag(c))) * rho(r, c);
        const double half = 0.5 * drive.omega;
        if (half != 0.0) {
            const Complex mih(0.0, -half);
            for (const auto& [lo, hi] : pairs(coupled)) {
                // X rho rows and rho X columns.
                drho.row(hi) += mih * rho.row(lo);
                drho.row(lo) += mih * rho.row(hi);
                drho.col(hi) -= mih * rho.col(lo);
                drho.col(lo) -= mih * rho.col(hi);
            }
        }
        if (jumps_.empty()) return;
        for (Eigen::Index c = 0; c < dim_; ++c)
            for (Eigen::Index r = 0; r < dim_; ++r) drho(r, c) -= 0.5 * (loss_(r) + loss_(c)) * rho(r, c);
        for (const auto& j : jumps_) {
            const std::size_t m = j.src.size();
            for (std::size_t q = 0; q < m; ++q)
                for (std::size_t p = 0; p < m; ++p) drho(j.dst[p], j.dst[q]) += j.rate * rho(j.src[p], j.src[q]);
        }
    }

private:
    struct JumpTable {
        double rate = 0.0;
        std::vector<Eigen::Index> src;
        std::vector<Eigen::Index> dst;
    };

    int n_;
    int d_;
    Eigen::Index dim_;
    Eigen::VectorXd ryd_count_;
    Eigen::VectorXd interaction_;
    std::array<std::vector<std::pair<Eigen::Index, Eigen::Index>>, 2> drive_pairs_;
    Eigen::VectorXd loss_;
    std::vector<JumpTable> jumps_;
};

inline void check_model(const QuantumState& s, const InteractionMatrix& v, const LevelScheme& scheme) {
    if (v.rows() != s.n_atoms() || v.cols() != s.n_atoms())
        throw std::invalid_argument("evolve: interaction matrix does not match the number of atoms");
    if (scheme.dim_local() != s.dim_local()) throw std::invalid_argument("evolve: level scheme does not match the state");
}

inline CVector permute(const CVector& psi, const std::vector<Eigen::Index>& perm) {
    CVector out(psi.size());
    for (Eigen::Index s = 0; s < psi.size(); ++s) out(perm[static_cast<std::size_t>(s)]) = psi(s);
    return out;
}

inline CMatrix permute(const CMatrix& rho, const std::vector<Eigen::Index>& perm) {
    CMatrix out(rho.rows(), rho.cols());
    for (Eigen::Index c = 0; c < rho.cols(); ++c)
        for (Eigen::Index r = 0; r < rho.rows(); ++r) out(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(c)]) = rho(r, c);
    return out;
}

}  // namespace detail

/// Sampling request: `on_sample(t, state)` fires at each of `times`
/// (ascending, within the schedule), in order.
struct Checkpoints {
    std::vector<double> times;
    std::function<void(double, const QuantumState&)> on_sample;

    static Checkpoints uniform(double total, int n_points, std::function<void(double, const QuantumState&)> cb) {
        Checkpoints c;
        c.on_sample = std::move(cb);
        if (n_points < 2) throw std::invalid_argument("Checkpoints: need at least two points");
        for (int i = 0; i < n_points; ++i) c.times.push_back(total * i / (n_points - 1));
        return c;
    }
};

namespace detail {

/// Shared segment walker. `advance(segment, drive_fn, t_local0, t_local1)`
/// integrates one timed piece; `flip()` applies pi_g.
template <class StateT, class Advance, class Flip, class Wrap>
StateT walk_schedule(StateT y, const PulseSchedule& schedule, Advance&& advance, Flip&& flip, Wrap&& wrap,
                     const Checkpoints* checkpoints) {
    std::size_t next = 0;
    const auto emit_until = [&](double t_global, const StateT& state) {
        if (checkpoints == nullptr || !checkpoints->on_sample) return;
        while (next < checkpoints->times.size() && checkpoints->times[next] <= t_global + 1e-12) {
            checkpoints->on_sample(checkpoints->times[next], wrap(state));
            ++next;
        }
    };
    double start = 0.0;
    emit_until(0.0, y);
    const auto& segs = schedule.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const auto& seg = segs[i];
        if (is_instant(seg)) {
            y = flip(y);
            continue;
        }
        const double dur = segment_duration(seg);
        double local = 0.0;
        while (checkpoints != nullptr && next < checkpoints->times.size() &&
               checkpoints->times[next] < start + dur - 1e-12) {
            const double target = checkpoints->times[next] - start;
            if (target > local) {
                try {
                    y = advance(seg, y, local, target);
                } catch (const IntegrationError& e) {
                    throw IntegrationError(std::string(e.what()) + " (segment " + std::to_string(i) + ")", start + e.time());
                }
                local = target;
            }
            emit_until(start + local, y);
        }
        if (dur > local) {
            try {
                y = advance(seg, y, local, dur);
            } catch (const IntegrationError& e) {
                throw IntegrationError(std::string(e.what()) + " (segment " + std::to_string(i) + ")", start + e.time());
            }
        }
        start += dur;
        emit_until(start, y);
    }
    return y;
}

}  // namespace detail

/// Closed-system propagation of a pure state. Channels in `scheme` are ignored.
inline QuantumState evolve_pure(const QuantumState& psi0, const PulseSchedule& schedule, const InteractionMatrix& v,
                                const LevelScheme& scheme, const IntegratorSettings& settings = {},
                                const Checkpoints* checkpoints = nullptr, IntegrationStats* stats = nullptr) {
    if (!psi0.is_pure()) throw std::invalid_argument("evolve_pure: initial state must be pure");
    detail::check_model(psi0, v, scheme);
    const detail::FastModel model(v, scheme, nullptr);
    const int n = psi0.n_atoms(), d = psi0.dim_local();
    const auto perm = ground_flip_permutation(all_atoms(n), n, d);

    auto advance = [&](const Segment& seg, const CVector& y, double t0, double t1) {
        const Level coupled = segment_coupling(seg);
        auto rhs = [&](double t, const CVector& psi, CVector& dpsi) {
            model.schrodinger(segment_drive(seg, std::clamp(t, 0.0, segment_duration(seg))), coupled, psi, dpsi);
        };
        return integrate_dopri5(rhs, y, t0, t1, settings, stats);
    };
    auto flip = [&](const CVector& y) { return detail::permute(y, perm); };
    auto wrap = [&](const CVector& y) { return QuantumState::unchecked_pure(n, d, y); };
    CVector out = detail::walk_schedule<CVector>(psi0.amplitudes(), schedule, advance, flip, wrap, checkpoints);
    return QuantumState::unchecked_pure(n, d, std::move(out));
}

/// Lindblad propagation of a density state (pure inputs are promoted).
inline QuantumState evolve_density(const QuantumState& rho0, const PulseSchedule& schedule, const InteractionMatrix& v,
                                   const LevelScheme& scheme, const LindbladChannelSet& channels,
                                   const IntegratorSettings& settings = {}, const Checkpoints* checkpoints = nullptr,
                                   IntegrationStats* stats = nullptr) {
    detail::check_model(rho0, v, scheme);
    if (!channels.empty() && (channels.n_atoms() != rho0.n_atoms() || channels.dim_local() != rho0.dim_local()))
        throw std::invalid_argument("evolve_density: channel set does not match the state");
    const detail::FastModel model(v, scheme, &channels);
    const int n = rho0.n_atoms(), d = rho0.dim_local();
    const auto perm = ground_flip_permutation(all_atoms(n), n, d);

    auto advance = [&](const Segment& seg, const CMatrix& y, double t0, double t1) {
        const Level coupled = segment_coupling(seg);
        auto rhs = [&](double t, const CMatrix& rho, CMatrix& drho) {
            model.lindblad(segment_drive(seg, std::clamp(t, 0.0, segment_duration(seg))), coupled, rho, drho);
        };
        CMatrix out = integrate_dopri5(rhs, y, t0, t1, settings, stats);
        // Remove the anti-Hermitian rounding residue accumulated over the segment.
        return CMatrix(0.5 * (out + out.adjoint()));
    };
    auto flip = [&](const CMatrix& y) { return detail::permute(y, perm); };
    auto wrap = [&](const CMatrix& y) { return QuantumState::unchecked_density(n, d, y); };
    CMatrix out = detail::walk_schedule<CMatrix>(rho0.to_density_matrix(), schedule, advance, flip, wrap, checkpoints);
    return QuantumState::unchecked_density(n, d, std::move(out));
}

using SparseCMatrix = Eigen::SparseMatrix<Complex>;

/// Column-stacked Lindblad generator for a fixed Hamiltonian:
///   -i (I (x) H - H^T (x) I) + sum_k (conj(L) (x) L - I (x) L^+L / 2 - (L^+L)^T (x) I / 2).
inline SparseCMatrix vectorized_generator(const CMatrix& h, const std::vector<SparseCMatrix>& jumps) {
    const Eigen::Index d = h.rows();
    SparseCMatrix id(d, d);
    id.setIdentity();
    const SparseCMatrix hs = h.sparseView();
    const SparseCMatrix ht = SparseCMatrix(hs.transpose());
    SparseCMatrix gen = Complex(0.0, -1.0) * (SparseCMatrix(Eigen::kroneckerProduct(id, hs)) -
                                              SparseCMatrix(Eigen::kroneckerProduct(ht, id)));
    for (const auto& l : jumps) {
        const SparseCMatrix ldl = SparseCMatrix(l.adjoint()) * l;
        const SparseCMatrix ldl_t = SparseCMatrix(ldl.transpose());
        gen += SparseCMatrix(Eigen::kroneckerProduct(SparseCMatrix(l.conjugate()), l));
        gen -= 0.5 * SparseCMatrix(Eigen::kroneckerProduct(id, ldl));
        gen -= 0.5 * SparseCMatrix(Eigen::kroneckerProduct(ldl_t, id));
    }
    gen.makeCompressed();
    return gen;
}

/// exp(A) v by scaled Taylor series, converged to double precision.
inline CVector expm_action(const SparseCMatrix& a, CVector v) {
    double norm1 = 0.0;
    for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
        double col = 0.0;
        for (SparseCMatrix::InnerIterator it(a, c); it; ++it) col += std::abs(it.value());
        norm1 = std::max(norm1, col);
    }
    const int substeps = std::max(1, static_cast<int>(std::ceil(norm1 / 0.5)));
    for (int s = 0; s < substeps; ++s) {
        CVector term = v;
        CVector acc = v;
        for (int k = 1; k < 200; ++k) {
            term = (a * term) / (static_cast<double>(k) * substeps);
            acc += term;
            if (term.cwiseAbs().maxCoeff() <= 1e-18 * std::max(acc.cwiseAbs().maxCoeff(), 1e-300)) break;
        }
        v = std::move(acc);
    }
    return v;
}

/// Piecewise-constant reference propagator: each timed segment is cut into
/// `n_steps` slices, the drive is frozen at slice midpoints, and the exact
/// exponential of the vectorized generator is applied per slice.
inline QuantumState propagate_oracle(const QuantumState& rho0, const PulseSchedule& schedule, const InteractionMatrix& v,
                                     const LevelScheme& scheme, const LindbladChannelSet& channels, int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("propagate_oracle: n_steps must be >= 1");
    detail::check_model(rho0, v, scheme);
    const int n = rho0.n_atoms(), d = rho0.dim_local();
    const auto dim = rho0.dim();

    std::vector<SparseCMatrix> jumps;
    for (const auto& op : channels.jump_operators()) jumps.push_back(op.matrix().sparseView());
    const Operator pig = pi_g_unitary(n, d);

    // The generator is affine in (Delta, Omega): G = G0 + Delta G_delta + Omega G_omega.
    const std::vector<SparseCMatrix> none;
    const CMatrix h0 = hamiltonian_from_drive({0.0, 0.0}, Level::g1, v, scheme).matrix();
    const CMatrix h_delta = hamiltonian_from_drive({0.0, 1.0}, Level::g1, v, scheme).matrix() - h0;
    const SparseCMatrix g0 = vectorized_generator(h0, jumps);
    const SparseCMatrix g_delta = vectorized_generator(h_delta, none);
    std::array<SparseCMatrix, 2> g_omega;
    for (Level g : {Level::g0, Level::g1})
        g_omega[static_cast<std::size_t>(level_index(g))] =
            vectorized_generator(hamiltonian_from_drive({1.0, 0.0}, g, v, scheme).matrix() - h0, none);

    CMatrix rho = rho0.to_density_matrix();
    for (const auto& seg : schedule.segments()) {
        if (is_instant(seg)) {
            rho = pig.matrix() * rho * pig.matrix().adjoint();
            continue;
        }
        const double dur = segment_duration(seg);
        if (dur == 0.0) continue;
        const double dt = dur / n_steps;
        const auto& g_om = g_omega[static_cast<std::size_t>(level_index(segment_coupling(seg)))];
        CVector vec = Eigen::Map<const CVector>(rho.data(), dim * dim);
        for (int k = 0; k < n_steps; ++k) {
            const Drive drive = segment_drive(seg, (k + 0.5) * dt);
            const SparseCMatrix gen = (g0 + drive.delta * g_delta + drive.omega * g_om) * Complex(dt);
            vec = expm_action(gen, std::move(vec));
        }
        rho = Eigen::Map<const CMatrix>(vec.data(), dim, dim);
    }
    return QuantumState::unchecked_density(n, d, std::move(rho));
}

}  // namespace rydrap
