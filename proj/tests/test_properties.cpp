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


// Randomized and structural invariants of the dynamics.

#include "rydrap/protocols.hpp"

#include <gtest/gtest.h>

#include <array>
#include <random>

using namespace rydrap;

namespace {

CMatrix random_density(int dim, std::mt19937_64& rng, double coherence) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, coherence);
    CMatrix rho = CMatrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) rho(i, i) = u(rng) + 0.05;
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            rho(i, j) = Complex(n(rng), n(rng));
            rho(j, i) = std::conj(rho(i, j));
        }
    const double lo = Eigen::SelfAdjointEigenSolver<CMatrix>(rho).eigenvalues().minCoeff();
    if (lo < 0.0) rho += CMatrix::Identity(dim, dim) * (1e-3 - lo);
    return rho / rho.trace().real();
}

struct RandomCase {
    PulseSchedule schedule;
    InteractionMatrix v;
    LevelScheme scheme = LevelScheme::closed();
    QuantumState rho0 = QuantumState::maximally_mixed(1, 3);
};

RandomCase random_case(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> atoms(1, 3), kind(0, 3), preset(0, 2), count(1, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = atoms(rng);
    RandomCase c;
    switch (preset(rng)) {
        case 0: c.scheme = LevelScheme::closed(); break;
        case 1: c.scheme = LevelScheme::cesium(0.002 + 0.05 * u(rng)); break;
        default: c.scheme = LevelScheme::rubidium_dump(0.002 + 0.05 * u(rng)); break;
    }
    std::vector<StepDescriptor> steps;
    // RAPs share delta_max so consecutive sweeps stay continuous.
    const double delta_max = 0.1 + 0.5 * u(rng);
    const int segs = count(rng);
    for (int k = 0; k < segs; ++k) {
        switch (kind(rng)) {
            case 0: steps.emplace_back(RapStep{0.05 + 0.4 * u(rng), delta_max, 5.0 + 40.0 * u(rng), 0.25 + 0.2 * u(rng), 1.0}); break;
            case 1: steps.emplace_back(PiGStep{}); break;
            case 2: steps.emplace_back(SquareStep{0.05 + 0.5 * u(rng), 20.0 * u(rng)}); break;
            default: steps.emplace_back(IdleStep{10.0 * u(rng)}); break;
        }
    }
    // tau_D = T_p keeps consecutive sweeps continuous; the fallback is defensive.
    try {
        c.schedule = build_schedule(steps);
    } catch (const ScheduleError&) {
        c.schedule = build_schedule({SquareStep{0.3, 5.0}, PiGStep{}, IdleStep{2.0}});
    }
    c.v = InteractionMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) c.v(i, j) = c.v(j, i) = 2.0 * u(rng);
    const int d = c.scheme.dim_local();
    c.rho0 = QuantumState::density(n, d, random_density(static_cast<int>(hilbert_dim(n, d)), rng, 0.05));
    return c;
}

}  // namespace

TEST(Properties, RandomSchedulesPreserveStateInvariants) {
    std::mt19937_64 rng(20260101);
    const StateTolerances tol;
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = random_case(rng);
        const auto channels = LindbladChannelSet::from_scheme(c.scheme, static_cast<int>(c.v.rows()));
        int samples = 0;
        double worst_trace = 0.0, worst_herm = 0.0, worst_eig = 0.0;
        auto cps = Checkpoints::uniform(c.schedule.total_duration(), 11, [&](double, const QuantumState& s) {
            const CMatrix& r = s.density_matrix();
            worst_trace = std::max(worst_trace, std::abs(r.trace().real() - 1.0));
            worst_herm = std::max(worst_herm, (r - r.adjoint()).cwiseAbs().maxCoeff());
            worst_eig = std::min(worst_eig, s.min_eigenvalue());
            ++samples;
        });
        const auto out = evolve_density(c.rho0, c.schedule, c.v, c.scheme, channels, {}, &cps);
        EXPECT_EQ(samples, 11) << "trial " << trial;
        EXPECT_LE(worst_trace, tol.trace) << "trial " << trial;
        EXPECT_LE(worst_herm, tol.hermiticity) << "trial " << trial;
        EXPECT_GE(worst_eig, tol.min_eigenvalue) << "trial " << trial;
        EXPECT_NO_THROW(out.validate());
    }
}

TEST(Properties, PurityNonIncreasingUnderDephasing) {
    std::mt19937_64 rng(99);
    // Pure Rydberg dephasing is unital, so purity can only fall.
    const LevelScheme dephasing({Level::g0, Level::g1, Level::ryd}, {{Level::ryd, Level::ryd, 0.05}}, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rho0 = QuantumState::density(2, 3, random_density(9, rng, 0.03));
        double prev = rho0.purity();
        bool monotone = true;
        auto cps = Checkpoints::uniform(30.0, 16, [&](double, const QuantumState& s) {
            monotone = monotone && s.purity() <= prev + 1e-12;
            prev = s.purity();
        });
        evolve_density(rho0, build_schedule({IdleStep{30.0}}), InteractionMatrix::Zero(2, 2), dephasing,
                       LindbladChannelSet::from_scheme(dephasing, 2), {}, &cps);
        EXPECT_TRUE(monotone) << "trial " << trial;
    }
}

TEST(Properties, DecayIntoGroundCanRaisePurity) {
    // Non-unital decay concentrates weight: diag(0.6, 0, 0.4) -> diag(1, 0, 0).
    const auto scheme = LevelScheme::rubidium_dump(0.1);
    CMatrix rho = CMatrix::Zero(4, 4);
    rho(3, 3) = 0.6;
    rho(2, 2) = 0.4;
    const auto r0 = QuantumState::density(1, 4, rho);
    const auto out = evolve_density(r0, build_schedule({IdleStep{40.0}}), InteractionMatrix::Zero(1, 1), scheme,
                                    LindbladChannelSet::from_scheme(scheme, 1));
    EXPECT_GT(out.purity(), r0.purity());
}

TEST(Properties, PulseContinuityInProtocols) {
    for (auto name : kAllProtocols) {
        const auto inst = build_protocol(default_spec(name));
        const auto& segs = inst.schedule.segments();
        const RapParams* prev = nullptr;
        for (const auto& seg : segs) {
            if (const auto* r = std::get_if<RapSegment>(&seg)) {
                EXPECT_EQ(rap_waveform(0.0, r->params).omega, 0.0);
                EXPECT_EQ(rap_waveform(r->params.sweep_width, r->params).omega, 0.0);
                if (prev)
                    EXPECT_NEAR(rap_waveform(prev->sweep_width, *prev).delta, rap_waveform(0.0, r->params).delta, 1e-14)
                        << to_string(name);
                prev = &r->params;
            } else if (!is_instant(seg)) {
                prev = nullptr;
            }
        }
    }
}

TEST(Properties, BlockadeLimitCollectiveRabi) {
    const double omega = 1e-4;
    for (int n : {2, 3}) {
        const auto step = square_pi_segment(n, omega);
        const auto schedule = build_schedule({step});
        const auto v = uniform_interaction(n, 1e4 * omega);
        std::string init(static_cast<std::size_t>(n), '1');
        const auto out = evolve_pure(QuantumState::basis(init, 3), schedule, v, LevelScheme::closed());
        std::vector<std::string> labels;
        for (int k = 0; k < n; ++k) {
            std::string s = init;
            s[static_cast<std::size_t>(k)] = 'r';
            labels.push_back(s);
        }
        const auto symmetric = QuantumState::superposition(labels, 3);
        const double pop = std::norm(symmetric.amplitudes().dot(out.amplitudes()));
        EXPECT_GE(pop, 0.999) << "n = " << n;
    }
}

TEST(Properties, W3PermutationSymmetry) {
    const auto inst = build_protocol(default_spec(ProtocolName::w3));
    const auto out = simulate_protocol(inst).final_state.density_matrix();
    const int d = inst.scheme.dim_local();
    const std::array<std::array<int, 3>, 5> perms{{{1, 0, 2}, {0, 2, 1}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}}};
    const auto dim = out.rows();
    double worst = 0.0;
    for (const auto& p : perms) {
        std::vector<Eigen::Index> map(static_cast<std::size_t>(dim));
        for (Eigen::Index s = 0; s < dim; ++s) {
            std::array<int, 3> dg{};
            for (int a = 0; a < 3; ++a) dg[a] = digit_of(static_cast<std::size_t>(s), a, 3, d);
            Eigen::Index img = 0;
            for (int a = 0; a < 3; ++a) img = img * d + dg[p[a]];
            map[static_cast<std::size_t>(s)] = img;
        }
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < dim; ++j)
                worst = std::max(worst, std::abs(out(map[i], map[j]) - out(i, j)));
    }
    EXPECT_LE(worst, 1e-7);
}
