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

/// Tensor-product Hilbert space over n atoms with 3 or 4 local levels.
///
/// Basis ordering: atom 0 is the slowest-varying digit, local levels are
/// ordered g0 = 0, g1 = 1, ryd = 2, dump = 3. A basis index is therefore the
/// base-d number formed by the per-atom level digits.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rydrap {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class Level : int { g0 = 0, g1 = 1, ryd = 2, dump = 3 };

inline int level_index(Level l) { return static_cast<int>(l); }

inline char level_symbol(Level l) {
    switch (l) {
        case Level::g0: return '0';
        case Level::g1: return '1';
        case Level::ryd: return 'r';
        case Level::dump: return 'd';
    }
    return '?';
}

inline Level level_from_symbol(char c) {
    switch (c) {
        case '0': return Level::g0;
        case '1': return Level::g1;
        case 'r': return Level::ryd;
        case 'd': return Level::dump;
        default: throw std::invalid_argument(std::string("unknown level symbol '") + c + "'");
    }
}

/// A single-atom decay channel. `to == from` encodes pure dephasing
/// (jump operator sqrt(rate)|from><from|).
struct DecayChannel {
    Level from = Level::ryd;
    Level to = Level::ryd;
    double rate = 0.0;

    bool operator==(const DecayChannel&) const = default;
};

class LevelScheme {
public:
    /// Three levels {g0, g1, ryd} with no dissipation.
    static LevelScheme closed() { return LevelScheme({Level::g0, Level::g1, Level::ryd}, {}, 0.0); }

    /// Cs-style branching: gamma/16 into each ground level plus 7 gamma/8 dephasing.
    static LevelScheme cesium(double gamma_r) {
        return LevelScheme({Level::g0, Level::g1, Level::ryd},
                           {{Level::ryd, Level::g0, gamma_r / 16.0},
                            {Level::ryd, Level::g1, gamma_r / 16.0},
                            {Level::ryd, Level::ryd, 7.0 * gamma_r / 8.0}},
                           gamma_r);
    }

    /// All Rydberg decay collected in a fictitious dump level.
    static LevelScheme rubidium_dump(double gamma_r) {
        return LevelScheme({Level::g0, Level::g1, Level::ryd, Level::dump},
                           {{Level::ryd, Level::dump, gamma_r}}, gamma_r);
    }

    /// Closed system that still carries the dump level, so Hilbert spaces
    /// match the dissipative relay protocol.
    static LevelScheme closed_with_dump() {
        return LevelScheme({Level::g0, Level::g1, Level::ryd, Level::dump}, {}, 0.0);
    }

    LevelScheme(std::vector<Level> levels, std::vector<DecayChannel> channels, double gamma_r)
        : levels_(std::move(levels)), channels_(std::move(channels)), gamma_r_(gamma_r) {
        validate();
    }

    int dim_local() const { return static_cast<int>(levels_.size()); }
    const std::vector<Level>& levels() const { return levels_; }
    const std::vector<DecayChannel>& channels() const { return channels_; }
    double gamma_r() const { return gamma_r_; }
    bool has_dump() const { return dim_local() == 4; }
    bool dissipative() const {
        return std::any_of(channels_.begin(), channels_.end(),
                           [](const DecayChannel& c) { return c.rate > 0.0; });
    }

    bool operator==(const LevelScheme&) const = default;

private:
    void validate() const {
        const auto n = levels_.size();
        if (n != 3 && n != 4) throw std::invalid_argument("LevelScheme: dim_local must be 3 or 4");
        for (std::size_t i = 0; i < n; ++i) {
            if (levels_[i] != static_cast<Level>(i))
                throw std::invalid_argument("LevelScheme: levels must be ordered g0, g1, ryd[, dump]");
        }
        bool targets_dump = false;
        for (const auto& c : channels_) {
            if (c.rate < 0.0) throw std::invalid_argument("LevelScheme: negative decay rate");
            if (level_index(c.from) >= dim_local() || level_index(c.to) >= dim_local())
                throw std::invalid_argument("LevelScheme: channel references a missing level");
            targets_dump = targets_dump || c.to == Level::dump;
        }
        if (gamma_r_ < 0.0) throw std::invalid_argument("LevelScheme: negative gamma_r");
        // A dump level without a channel into it is allowed only for closed runs.
        if (n == 4 && !targets_dump && !channels_.empty())
            throw std::invalid_argument("LevelScheme: dump level present but no channel targets it");
    }

    std::vector<Level> levels_;
    std::vector<DecayChannel> channels_;
    double gamma_r_ = 0.0;
};

inline std::size_t hilbert_dim(int n_atoms, int dim_local) {
    std::size_t d = 1;
    for (int i = 0; i < n_atoms; ++i) d *= static_cast<std::size_t>(dim_local);
    return d;
}

/// Level digit of `atom` in basis index `index`.
inline int digit_of(std::size_t index, int atom, int n_atoms, int dim_local) {
    for (int k = n_atoms - 1; k > atom; --k) index /= static_cast<std::size_t>(dim_local);
    return static_cast<int>(index % static_cast<std::size_t>(dim_local));
}

/// Stride of `atom`'s digit in the flat basis index.
inline std::size_t digit_stride(int atom, int n_atoms, int dim_local) {
    return hilbert_dim(n_atoms - atom - 1, dim_local);
}

inline std::size_t basis_index(std::span<const Level> digits, int dim_local) {
    std::size_t idx = 0;
    for (Level l : digits) {
        if (level_index(l) >= dim_local) throw std::invalid_argument("basis_index: level outside local space");
        idx = idx * static_cast<std::size_t>(dim_local) + static_cast<std::size_t>(level_index(l));
    }
    return idx;
}

inline std::vector<Level> parse_basis_label(const std::string& label) {
    std::vector<Level> out;
    out.reserve(label.size());
    for (char c : label) out.push_back(level_from_symbol(c));
    return out;
}

inline std::string basis_label(std::size_t index, int n_atoms, int dim_local) {
    std::string s(static_cast<std::size_t>(n_atoms), '?');
    for (int a = 0; a < n_atoms; ++a) s[static_cast<std::size_t>(a)] = level_symbol(static_cast<Level>(digit_of(index, a, n_atoms, dim_local)));
    return s;
}

/// Dense operator on the n-atom space.
class Operator {
public:
    Operator(int n_atoms, int dim_local, CMatrix matrix) : n_atoms_(n_atoms), dim_local_(dim_local), matrix_(std::move(matrix)) {
        const auto d = static_cast<Eigen::Index>(hilbert_dim(n_atoms_, dim_local_));
        if (n_atoms_ < 1 || matrix_.rows() != d || matrix_.cols() != d)
            throw std::invalid_argument("Operator: matrix dimension does not match (n_atoms, dim_local)");
    }

    static Operator identity(int n_atoms, int dim_local) {
        const auto d = static_cast<Eigen::Index>(hilbert_dim(n_atoms, dim_local));
        return Operator(n_atoms, dim_local, CMatrix::Identity(d, d));
    }

    int n_atoms() const { return n_atoms_; }
    int dim_local() const { return dim_local_; }
    Eigen::Index dim() const { return matrix_.rows(); }
    const CMatrix& matrix() const { return matrix_; }

    Operator adjoint() const { return Operator(n_atoms_, dim_local_, matrix_.adjoint()); }

    friend Operator operator*(const Operator& a, const Operator& b) {
        a.check_compatible(b);
        return Operator(a.n_atoms_, a.dim_local_, a.matrix_ * b.matrix_);
    }
    friend Operator operator+(const Operator& a, const Operator& b) {
        a.check_compatible(b);
        return Operator(a.n_atoms_, a.dim_local_, a.matrix_ + b.matrix_);
    }
    friend Operator operator-(const Operator& a, const Operator& b) {
        a.check_compatible(b);
        return Operator(a.n_atoms_, a.dim_local_, a.matrix_ - b.matrix_);
    }
    friend Operator operator*(Complex s, const Operator& a) { return Operator(a.n_atoms_, a.dim_local_, s * a.matrix_); }

    void check_compatible(const Operator& o) const {
        if (o.n_atoms_ != n_atoms_ || o.dim_local_ != dim_local_)
            throw std::invalid_argument("Operator: incompatible operand dimensions");
    }

private:
    int n_atoms_;
    int dim_local_;
    CMatrix matrix_;
};

/// Single-atom matrix |row><col| of size dim_local.
inline CMatrix local_transition(Level row, Level col, int dim_local) {
    CMatrix m = CMatrix::Zero(dim_local, dim_local);
    m(level_index(row), level_index(col)) = 1.0;
    return m;
}

inline CMatrix local_projector(Level l, int dim_local) { return local_transition(l, l, dim_local); }

/// identity x ... x local_op x ... x identity, local_op at `atom_index`.
inline Operator embed_single(const CMatrix& local_op, int atom_index, int n_atoms, int dim_local) {
    if (n_atoms < 1) throw std::invalid_argument("embed_single: n_atoms must be positive");
    if (atom_index < 0 || atom_index >= n_atoms) throw std::invalid_argument("embed_single: atom index out of range");
    if (local_op.rows() != dim_local || local_op.cols() != dim_local)
        throw std::invalid_argument("embed_single: local operator is not dim_local x dim_local");
    const std::size_t inner = digit_stride(atom_index, n_atoms, dim_local);
    const std::size_t outer = hilbert_dim(atom_index, dim_local);
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(n_atoms, dim_local));
    CMatrix m = CMatrix::Zero(dim, dim);
    const auto dl = static_cast<std::size_t>(dim_local);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t r = 0; r < dl; ++r) {
            for (std::size_t c = 0; c < dl; ++c) {
                const Complex v = local_op(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                if (v == Complex{}) continue;
                for (std::size_t i = 0; i < inner; ++i) {
                    const auto row = static_cast<Eigen::Index>((o * dl + r) * inner + i);
                    const auto col = static_cast<Eigen::Index>((o * dl + c) * inner + i);
                    m(row, col) = v;
                }
            }
        }
    }
    return Operator(n_atoms, dim_local, std::move(m));
}

/// Projector onto basis states where atoms i and j both sit in `level`.
inline Operator two_site_projector(int atom_i, int atom_j, Level level, int n_atoms, int dim_local) {
    if (atom_i == atom_j) throw std::invalid_argument("two_site_projector: atoms must differ");
    if (atom_i < 0 || atom_j < 0 || atom_i >= n_atoms || atom_j >= n_atoms)
        throw std::invalid_argument("two_site_projector: atom index out of range");
    if (level_index(level) >= dim_local) throw std::invalid_argument("two_site_projector: level outside local space");
    const std::size_t dim = hilbert_dim(n_atoms, dim_local);
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    const int l = level_index(level);
    for (std::size_t s = 0; s < dim; ++s) {
        if (digit_of(s, atom_i, n_atoms, dim_local) == l && digit_of(s, atom_j, n_atoms, dim_local) == l)
            m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = 1.0;
    }
    return Operator(n_atoms, dim_local, std::move(m));
}

/// Tolerances used by QuantumState::validate.
struct StateTolerances {
    double norm = 1e-9;
    double hermiticity = 1e-10;
    double trace = 1e-9;
    double min_eigenvalue = -1e-8;
};

enum class StateKind { pure, density };

/// Pure state vector or density matrix over the n-atom tensor space.
class QuantumState {
public:
    static QuantumState pure(int n_atoms, int dim_local, CVector amplitudes) {
        QuantumState s(StateKind::pure, n_atoms, dim_local);
        if (amplitudes.size() != static_cast<Eigen::Index>(hilbert_dim(n_atoms, dim_local)))
            throw std::invalid_argument("QuantumState: amplitude vector has wrong length");
        s.vec_ = std::move(amplitudes);
        s.checked();
        return s;
    }

    static QuantumState density(int n_atoms, int dim_local, CMatrix rho) {
        QuantumState s(StateKind::density, n_atoms, dim_local);
        const auto d = static_cast<Eigen::Index>(hilbert_dim(n_atoms, dim_local));
        if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("QuantumState: density matrix has wrong shape");
        s.mat_ = std::move(rho);
        s.checked();
        return s;
    }

    /// Skip the invariant checks; for propagator output whose invariants
    /// are verified separately.
    static QuantumState unchecked_pure(int n_atoms, int dim_local, CVector amplitudes) {
        QuantumState s(StateKind::pure, n_atoms, dim_local);
        if (amplitudes.size() != static_cast<Eigen::Index>(hilbert_dim(n_atoms, dim_local)))
            throw std::invalid_argument("QuantumState: amplitude vector has wrong length");
        s.vec_ = std::move(amplitudes);
        return s;
    }
    static QuantumState unchecked_density(int n_atoms, int dim_local, CMatrix rho) {
        QuantumState s(StateKind::density, n_atoms, dim_local);
        const auto d = static_cast<Eigen::Index>(hilbert_dim(n_atoms, dim_local));
        if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("QuantumState: density matrix has wrong shape");
        s.mat_ = std::move(rho);
        return s;
    }

    /// Computational-basis product state from a label such as "1r0".
    static QuantumState basis(const std::string& label, int dim_local) {
        const auto digits = parse_basis_label(label);
        const int n = static_cast<int>(digits.size());
        if (n < 1) throw std::invalid_argument("QuantumState: empty basis label");
        CVector v = CVector::Zero(static_cast<Eigen::Index>(hilbert_dim(n, dim_local)));
        v(static_cast<Eigen::Index>(basis_index(digits, dim_local))) = 1.0;
        return pure(n, dim_local, std::move(v));
    }

    /// Normalized equal-weight superposition of the given basis labels.
    static QuantumState superposition(std::span<const std::string> labels, int dim_local) {
        if (labels.empty()) throw std::invalid_argument("QuantumState: empty superposition");
        QuantumState acc = basis(labels.front(), dim_local);
        for (std::size_t i = 1; i < labels.size(); ++i) {
            const auto b = basis(labels[i], dim_local);
            if (b.n_atoms() != acc.n_atoms()) throw std::invalid_argument("QuantumState: labels differ in length");
            acc.vec_ += b.vec_;
        }
        acc.vec_ /= acc.vec_.norm();
        return acc;
    }

    static QuantumState maximally_mixed(int n_atoms, int dim_local) {
        const auto d = static_cast<Eigen::Index>(hilbert_dim(n_atoms, dim_local));
        return density(n_atoms, dim_local, CMatrix::Identity(d, d) / static_cast<double>(d));
    }

    StateKind kind() const { return kind_; }
    bool is_pure() const { return kind_ == StateKind::pure; }
    int n_atoms() const { return n_atoms_; }
    int dim_local() const { return dim_local_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(hilbert_dim(n_atoms_, dim_local_)); }

    const CVector& amplitudes() const {
        if (kind_ != StateKind::pure) throw std::logic_error("QuantumState: not a pure state");
        return vec_;
    }
    const CMatrix& density_matrix() const {
        if (kind_ != StateKind::density) throw std::logic_error("QuantumState: not a density state");
        return mat_;
    }

    /// Density-matrix view; outer product for pure states.
    CMatrix to_density_matrix() const { return is_pure() ? CMatrix(vec_ * vec_.adjoint()) : mat_; }
    QuantumState as_density() const { return density(n_atoms_, dim_local_, to_density_matrix()); }

    /// Diagonal of the density matrix.
    Eigen::VectorXd populations() const {
        if (is_pure()) return vec_.cwiseAbs2();
        return mat_.diagonal().real();
    }

    /// Throws std::domain_error naming the violated invariant.
    void validate(const StateTolerances& tol = {}) const {
        if (is_pure()) {
            const double dev = std::abs(vec_.norm() - 1.0);
            if (dev > tol.norm) throw std::domain_error("QuantumState: norm deviates from 1 by " + std::to_string(dev));
            return;
        }
        const double herm = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
        if (herm > tol.hermiticity) throw std::domain_error("QuantumState: not Hermitian (" + std::to_string(herm) + ")");
        const double tr = std::abs(mat_.trace() - Complex(1.0));
        if (tr > tol.trace) throw std::domain_error("QuantumState: trace deviates from 1 by " + std::to_string(tr));
        const double lmin = min_eigenvalue();
        if (lmin < tol.min_eigenvalue) throw std::domain_error("QuantumState: negative eigenvalue " + std::to_string(lmin));
    }

    double min_eigenvalue() const {
        const CMatrix h = 0.5 * (to_density_matrix() + to_density_matrix().adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    double purity() const {
        if (is_pure()) return std::pow(vec_.squaredNorm(), 2);
        return (mat_ * mat_).trace().real();
    }

private:
    void checked() const {
        try {
            validate();
        } catch (const std::domain_error& e) {
            throw std::invalid_argument(e.what());
        }
    }

    QuantumState(StateKind kind, int n_atoms, int dim_local) : kind_(kind), n_atoms_(n_atoms), dim_local_(dim_local) {
        if (n_atoms < 1) throw std::invalid_argument("QuantumState: n_atoms must be positive");
        if (dim_local < 2) throw std::invalid_argument("QuantumState: dim_local must be at least 2");
    }

    StateKind kind_;
    int n_atoms_;
    int dim_local_;
    CVector vec_;
    CMatrix mat_;
};

/// <psi|O|psi> or tr(rho O).
inline Complex expectation(const QuantumState& state, const Operator& op) {
    if (state.n_atoms() != op.n_atoms() || state.dim_local() != op.dim_local())
        throw std::invalid_argument("expectation: state and operator dimensions differ");
    if (state.is_pure()) return state.amplitudes().dot(op.matrix() * state.amplitudes());
    return (state.density_matrix() * op.matrix()).trace();
}

/// Reduced density matrix over the atoms in `keep` (kept in ascending order).
inline QuantumState partial_trace(const QuantumState& state, std::vector<int> keep) {
    if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
    std::sort(keep.begin(), keep.end());
    if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
        throw std::invalid_argument("partial_trace: duplicate atom in keep set");
    const int n = state.n_atoms();
    const int d = state.dim_local();
    if (keep.front() < 0 || keep.back() >= n) throw std::invalid_argument("partial_trace: atom index out of range");

    std::vector<int> traced;
    for (int a = 0; a < n; ++a)
        if (!std::binary_search(keep.begin(), keep.end(), a)) traced.push_back(a);

    const int nk = static_cast<int>(keep.size());
    const std::size_t dk = hilbert_dim(nk, d);
    const std::size_t dt = hilbert_dim(static_cast<int>(traced.size()), d);

    // Full index for (kept digits index, traced digits index).
    auto compose = [&](std::size_t ki, std::size_t ti) {
        std::vector<int> digits(static_cast<std::size_t>(n));
        for (int p = nk - 1; p >= 0; --p) {
            digits[static_cast<std::size_t>(keep[static_cast<std::size_t>(p)])] = static_cast<int>(ki % static_cast<std::size_t>(d));
            ki /= static_cast<std::size_t>(d);
        }
        for (int p = static_cast<int>(traced.size()) - 1; p >= 0; --p) {
            digits[static_cast<std::size_t>(traced[static_cast<std::size_t>(p)])] = static_cast<int>(ti % static_cast<std::size_t>(d));
            ti /= static_cast<std::size_t>(d);
        }
        std::size_t idx = 0;
        for (int v : digits) idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(v);
        return static_cast<Eigen::Index>(idx);
    };

    std::vector<Eigen::Index> table(dk * dt);
    for (std::size_t ki = 0; ki < dk; ++ki)
        for (std::size_t ti = 0; ti < dt; ++ti) table[ki * dt + ti] = compose(ki, ti);

    const CMatrix rho = state.to_density_matrix();
    CMatrix red = CMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    for (std::size_t a = 0; a < dk; ++a)
        for (std::size_t b = 0; b < dk; ++b) {
            Complex acc{};
            for (std::size_t t = 0; t < dt; ++t) acc += rho(table[a * dt + t], table[b * dt + t]);
            red(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
        }
    return QuantumState::unchecked_density(nk, d, std::move(red));
}

}  // namespace rydrap
