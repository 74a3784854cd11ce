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

// Atom layouts and van-der-Waals interaction matrices.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rydrap {

using Position = Eigen::Vector3d;

enum class LayoutShape { line, triangle, square, pyramid };

inline std::string to_string(LayoutShape s) {
    switch (s) {
        case LayoutShape::line: return "line";
        case LayoutShape::triangle: return "triangle";
        case LayoutShape::square: return "square";
        case LayoutShape::pyramid: return "pyramid";
    }
    return "?";
}

inline LayoutShape layout_shape_from_string(const std::string& s) {
    if (s == "line") return LayoutShape::line;
    if (s == "triangle") return LayoutShape::triangle;
    if (s == "square") return LayoutShape::square;
    if (s == "pyramid") return LayoutShape::pyramid;
    throw std::invalid_argument("unknown layout shape '" + s + "'");
}

/// Atom positions plus the calibration point of the C6/r^6 law: the
/// interaction equals `v_ref` at distance `d_ref`.
struct AtomLayout {
    std::vector<Position> positions;
    std::pair<int, int> reference_pair{0, 1};
    double d_ref = 1.0;
    double v_ref = 1.0;

    int size() const { return static_cast<int>(positions.size()); }

    double distance(int i, int j) const {
        return (positions[static_cast<std::size_t>(i)] - positions[static_cast<std::size_t>(j)]).norm();
    }

    void validate() const {
        if (positions.size() < 2) throw std::invalid_argument("AtomLayout: need at least two atoms");
        const auto [a, b] = reference_pair;
        if (a == b || a < 0 || b < 0 || a >= size() || b >= size())
            throw std::invalid_argument("AtomLayout: invalid reference pair");
        if (!(d_ref > 0.0)) throw std::invalid_argument("AtomLayout: reference distance must be positive");
        if (v_ref < 0.0) throw std::invalid_argument("AtomLayout: negative reference interaction");
        for (int i = 0; i < size(); ++i)
            for (int j = i + 1; j < size(); ++j)
                if (!(distance(i, j) > 0.0)) throw std::invalid_argument("AtomLayout: coincident atoms");
    }
};

/// Symmetric, zero-diagonal pairwise interaction strengths in units of Omega0.
using InteractionMatrix = Eigen::MatrixXd;

/// Regular layouts with nearest-neighbour distance `spacing`. The reference
/// pair is (0, 1), a nearest-neighbour pair in every shape.
inline AtomLayout build_layout(LayoutShape shape, int n_atoms, double spacing, double v_ref) {
    if (!(spacing > 0.0)) throw std::invalid_argument("build_layout: spacing must be positive");
    AtomLayout layout;
    switch (shape) {
        case LayoutShape::line:
            if (n_atoms < 2) throw std::invalid_argument("build_layout: line needs at least two atoms");
            for (int i = 0; i < n_atoms; ++i) layout.positions.emplace_back(i * spacing, 0.0, 0.0);
            break;
        case LayoutShape::triangle:
            if (n_atoms != 3) throw std::invalid_argument("build_layout: triangle requires exactly 3 atoms");
            layout.positions = {Position(0, 0, 0), Position(spacing, 0, 0),
                                Position(spacing / 2, spacing * std::sqrt(3.0) / 2, 0)};
            break;
        case LayoutShape::square:
            if (n_atoms != 4) throw std::invalid_argument("build_layout: square requires exactly 4 atoms");
            // Cyclic order, so atoms (0,2) and (1,3) are the diagonals.
            layout.positions = {Position(0, 0, 0), Position(spacing, 0, 0), Position(spacing, spacing, 0),
                                Position(0, spacing, 0)};
            break;
        case LayoutShape::pyramid: {
            if (n_atoms != 4) throw std::invalid_argument("build_layout: pyramid requires exactly 4 atoms");
            const double h = spacing * std::sqrt(2.0 / 3.0);
            layout.positions = {Position(0, 0, 0), Position(spacing, 0, 0),
                                Position(spacing / 2, spacing * std::sqrt(3.0) / 2, 0),
                                Position(spacing / 2, spacing * std::sqrt(3.0) / 6, h)};
            break;
        }
    }
    layout.reference_pair = {0, 1};
    layout.d_ref = spacing;
    layout.v_ref = v_ref;
    layout.validate();
    return layout;
}

/// V_ij = v_ref * (d_ref / d_ij)^6.
inline InteractionMatrix interaction_matrix(const AtomLayout& layout) {
    layout.validate();
    const int n = layout.size();
    InteractionMatrix v = InteractionMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double ratio = layout.d_ref / layout.distance(i, j);
            const double r2 = ratio * ratio;
            v(i, j) = v(j, i) = layout.v_ref * r2 * r2 * r2;
        }
    return v;
}

/// Interaction matrix with every off-diagonal entry equal to `v`.
inline InteractionMatrix uniform_interaction(int n_atoms, double v) {
    InteractionMatrix m = InteractionMatrix::Constant(n_atoms, n_atoms, v);
    m.diagonal().setZero();
    return m;
}

/// Displaces every atom by independent N(0, sigma^2) along the first `dims`
/// axes. d_ref and v_ref stay pinned to the unperturbed calibration.
template <class Rng>
AtomLayout perturb_positions(const AtomLayout& layout, double sigma, int dims, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("perturb_positions: sigma must be non-negative");
    if (dims < 1 || dims > 3) throw std::invalid_argument("perturb_positions: dims must be 1, 2 or 3");
    AtomLayout out = layout;
    if (sigma == 0.0) return out;
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& p : out.positions)
        for (int k = 0; k < dims; ++k) p[k] += normal(rng);
    return out;
}

}  // namespace rydrap
