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


#include "rydrap/dynamics.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <numbers>
#include <random>

using namespace rydrap;

namespace {

constexpr double kPi = std::numbers::pi;

IntegratorSettings tight() { return IntegratorSettings{1e-10, 1e-12}; }

PulseSchedule bell_schedule() {
    return build_schedule({RapStep{0.17, 0.24, 250.0}, PiGStep{}, RapStep{0.17, 0.24, 250.0}});
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Lindblad right-hand side from dense operators, independent of the fast path.
CMatrix dense_lindblad(const CMatrix& h, const std::vector<Operator>& jumps, const CMatrix& rho) {
    const Complex i(0.0, 1.0);
    CMatrix out = -i * (h * rho - rho * h);
    for (const auto& op : jumps) {
        const CMatrix& l = op.matrix();
        const CMatrix ldl = l.adjoint() * l;
        out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
    }
    return out;
}

}  // namespace

TEST(Hamiltonian, InteractionOnlyIsDiagonal) {
    const auto v = uniform_interaction(3, 0.7);
    const auto h = hamiltonian_from_drive({0.0, 0.0}, Level::g1, v, LevelScheme::closed()).matrix();
    CMatrix off = h;
    off.diagonal().setZero();
    EXPECT_EQ(max_abs(off), 0.0);
    EXPECT_NEAR(h(26, 26).real(), 3 * 0.7, 1e-15);
}

TEST(Hamiltonian, DoublyExcitedEnergy) {
    const double delta = 0.13, v0 = 0.7;
    const auto h = hamiltonian_from_drive({0.0, delta}, Level::g1, uniform_interaction(2, v0), LevelScheme::closed()).matrix();
    EXPECT_NEAR(h(8, 8).real(), 2 * delta + v0, 1e-15);
    EXPECT_NEAR(h(5, 5).real(), delta, 1e-15);
}

TEST(Hamiltonian, HermitianAlongSchedule) {
    const auto s = bell_schedule();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, s.total_duration());
    const auto v = uniform_interaction(2, 0.7);
    for (int k = 0; k < 100; ++k) {
        const auto h = hamiltonian_at(u(rng), s, v, LevelScheme::cesium(1e-3)).matrix();
        EXPECT_LE(max_abs(h - h.adjoint()), 1e-12);
    }
}

TEST(LindbladChannels, OneAtomPerJump) {
    const auto set = LindbladChannelSet::from_scheme(LevelScheme::cesium(0.1), 3);
    EXPECT_EQ(set.size(), 9u);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto op = set.jump_operator(k).matrix();
        const int atom = set.jumps()[k].atom;
        // Acts trivially on the other atoms: commutes with their local operators.
        for (int other = 0; other < 3; ++other) {
            if (other == atom) continue;
            const auto probe = embed_single(local_transition(Level::g0, Level::ryd, 3), other, 3, 3).matrix();
            EXPECT_EQ(max_abs(op * probe - probe * op), 0.0);
        }
    }
    EXPECT_TRUE(LindbladChannelSet::from_scheme(LevelScheme::closed(), 2).empty());
}

TEST(EvolvePure, ZeroLengthScheduleIsIdentity) {
    const auto s = build_schedule({IdleStep{0.0}});
    const auto psi0 = QuantumState::basis("10", 3);
    const auto out = evolve_pure(psi0, s, uniform_interaction(2, 0.7), LevelScheme::closed());
    EXPECT_EQ((out.amplitudes() - psi0.amplitudes()).norm(), 0.0);
}

TEST(EvolvePure, ResonantPiPulse) {
    const auto s = build_schedule({SquareStep{0.3, kPi / 0.3}});
    InteractionMatrix v = InteractionMatrix::Zero(1, 1);
    const auto out = evolve_pure(QuantumState::basis("1", 3), s, v, LevelScheme::closed(), tight());
    EXPECT_GE(out.populations()(2), 1.0 - 1e-8);
}

TEST(EvolvePure, RabiOscillationTrajectory) {
    const double omega = 0.4;
    const auto s = build_schedule({SquareStep{omega, 20.0}});
    InteractionMatrix v = InteractionMatrix::Zero(1, 1);
    double worst = 0.0;
    auto cps = Checkpoints::uniform(20.0, 41, [&](double t, const QuantumState& st) {
        worst = std::max(worst, std::abs(st.populations()(2) - std::pow(std::sin(omega * t / 2), 2)));
    });
    evolve_pure(QuantumState::basis("1", 3), s, v, LevelScheme::closed(), tight(), &cps);
    EXPECT_LE(worst, 1e-8);
}

TEST(EvolvePure, MatchesMatrixExponentialWithDetuning) {
    // Two interacting atoms under a constant detuned drive.
    SquareSegment seg{0.3, 7.0, 0.11, Level::g1};
    const auto s = PulseSchedule({Segment(seg)});
    const auto v = uniform_interaction(2, 0.9);
    const auto psi0 = QuantumState::basis("11", 3);
    const auto out = evolve_pure(psi0, s, v, LevelScheme::closed(), tight());
    const CMatrix h = hamiltonian_from_drive({0.3, 0.11}, Level::g1, v, LevelScheme::closed()).matrix();
    const CMatrix u = (Complex(0.0, -7.0) * h).exp();
    EXPECT_LE((out.amplitudes() - u * psi0.amplitudes()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EvolveDensity, ClosedLimitMatchesPure) {
    const auto s = bell_schedule();
    const auto v = uniform_interaction(2, 0.7);
    const auto psi0 = QuantumState::basis("10", 3);
    const auto pure = evolve_pure(psi0, s, v, LevelScheme::closed(), tight());
    const auto rho = evolve_density(psi0.as_density(), s, v, LevelScheme::closed(), {}, tight());
    EXPECT_LE(max_abs(rho.density_matrix() - pure.to_density_matrix()), 1e-7);
}

TEST(EvolveDensity, DumpDecayIsExponential) {
    const double gamma = 0.05;
    const auto scheme = LevelScheme::rubidium_dump(gamma);
    const auto s = build_schedule({IdleStep{30.0}});
    InteractionMatrix v = InteractionMatrix::Zero(1, 1);
    double worst = 0.0;
    auto cps = Checkpoints::uniform(30.0, 16, [&](double t, const QuantumState& st) {
        worst = std::max(worst, std::abs(st.populations()(2) - std::exp(-gamma * t)));
        worst = std::max(worst, std::abs(st.populations()(3) - (1 - std::exp(-gamma * t))));
    });
    evolve_density(QuantumState::basis("r", 4).as_density(), s, v, scheme, LindbladChannelSet::from_scheme(scheme, 1),
                   tight(), &cps);
    EXPECT_LE(worst, 1e-9);
}

TEST(EvolveDensity, CesiumBranchingShortTime) {
    const double gamma = 2.947e-6 * 1000;  // exaggerated so the growth is resolvable
    const auto scheme = LevelScheme::cesium(gamma);
    InteractionMatrix v = InteractionMatrix::Zero(1, 1);
    for (double t : {0.1, 1.0, 5.0}) {
        const auto out = evolve_density(QuantumState::basis("r", 3).as_density(), build_schedule({IdleStep{t}}), v, scheme,
                                        LindbladChannelSet::from_scheme(scheme, 1), tight());
        const auto p = out.populations();
        // First order in gamma t: each ground level gains gamma/16 per unit time.
        EXPECT_NEAR(p(0), gamma / 16 * t, 1e-3 * gamma / 16 * t + 1e-13);
        EXPECT_NEAR(p(1), gamma / 16 * t, 1e-3 * gamma / 16 * t + 1e-13);
        EXPECT_NEAR(p(0) + p(1) + p(2), 1.0, 1e-10);
    }
}

TEST(EvolveDensity, FastPathMatchesDenseLindblad) {
    // A single short step checked against the dense generator derivative.
    const auto scheme = LevelScheme::cesium(0.02);
    const auto v = uniform_interaction(2, 0.5);
    const auto channels = LindbladChannelSet::from_scheme(scheme, 2);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix a(9, 9);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) a(i, j) = Complex(n(rng), n(rng));
    CMatrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    const double dt = 1e-3;
    SquareSegment seg{0.3, dt, 0.2, Level::g0};
    const auto out = evolve_density(QuantumState::density(2, 3, rho), PulseSchedule({Segment(seg)}), v, scheme, channels,
                                    IntegratorSettings{1e-12, 1e-14});
    const CMatrix h = hamiltonian_from_drive({0.3, 0.2}, Level::g0, v, scheme).matrix();
    const CMatrix deriv = (out.density_matrix() - rho) / dt;
    EXPECT_LE(max_abs(deriv - dense_lindblad(h, channels.jump_operators(), rho)), 1e-2 * dt * 50);
}

TEST(VectorizedGenerator, MatchesDenseLindblad) {
    const auto scheme = LevelScheme::rubidium_dump(0.07);
    const auto v = uniform_interaction(2, 0.5);
    const auto channels = LindbladChannelSet::from_scheme(scheme, 2);
    const CMatrix h = hamiltonian_from_drive({0.2, -0.1}, Level::g1, v, scheme).matrix();
    std::vector<SparseCMatrix> jumps;
    for (const auto& op : channels.jump_operators()) jumps.push_back(op.matrix().sparseView());
    const SparseCMatrix g = vectorized_generator(h, jumps);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix rho(16, 16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) rho(i, j) = Complex(n(rng), n(rng));
    const CVector vec = Eigen::Map<const CVector>(rho.data(), 256);
    const CVector gv = g * vec;
    const CMatrix back = Eigen::Map<const CMatrix>(gv.data(), 16, 16);
    EXPECT_LE(max_abs(back - dense_lindblad(h, channels.jump_operators(), rho)), 1e-12);
}

TEST(ExpmAction, MatchesDenseExponential) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix a(12, 12);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) a(i, j) = Complex(n(rng), n(rng));
    a *= 0.8;
    CVector x(12);
    for (int i = 0; i < 12; ++i) x(i) = Complex(n(rng), n(rng));
    const SparseCMatrix as = a.sparseView();
    const CVector got = expm_action(as, x);
    const CVector ref = a.exp() * x;
    EXPECT_LE((got - ref).cwiseAbs().maxCoeff(), 1e-11 * ref.cwiseAbs().maxCoeff());
}

TEST(Oracle, SingleSliceExactOnConstantGenerator) {
    const auto scheme = LevelScheme::cesium(0.01);
    const auto v = uniform_interaction(2, 0.6);
    SquareSegment seg{0.35, 4.0, 0.05, Level::g1};
    const auto schedule = PulseSchedule({Segment(seg)});
    const auto channels = LindbladChannelSet::from_scheme(scheme, 2);
    const auto rho0 = QuantumState::basis("11", 3).as_density();
    const auto out = propagate_oracle(rho0, schedule, v, scheme, channels, 1);
    // Reference: dense exponential of the column-stacked generator.
    const CMatrix h = hamiltonian_from_drive({0.35, 0.05}, Level::g1, v, scheme).matrix();
    CMatrix gen = CMatrix::Zero(81, 81);
    for (int c = 0; c < 81; ++c) {
        CMatrix e = CMatrix::Zero(9, 9);
        e(c % 9, c / 9) = 1.0;
        const CMatrix col = dense_lindblad(h, channels.jump_operators(), e);
        gen.col(c) = Eigen::Map<const CVector>(col.data(), 81);
    }
    const CMatrix rho0m = rho0.density_matrix();
    const CVector ref = (gen * 4.0).exp() * Eigen::Map<const CVector>(rho0m.data(), 81);
    const CMatrix refm = Eigen::Map<const CMatrix>(ref.data(), 9, 9);
    EXPECT_LE(max_abs(out.density_matrix() - refm), 1e-12);
}

TEST(Oracle, AgreesWithAdaptiveSolverOnBellProtocol) {
    const auto scheme = LevelScheme::cesium(2.947e-6);
    const auto channels = LindbladChannelSet::from_scheme(scheme, 2);
    const auto v = uniform_interaction(2, 0.7);
    const auto rho0 = QuantumState::basis("11", 3).as_density();
    const auto s = bell_schedule();
    const auto ref = evolve_density(rho0, s, v, scheme, channels, tight());
    const auto o = propagate_oracle(rho0, s, v, scheme, channels, 2000);
    EXPECT_LE(max_abs(o.density_matrix() - ref.density_matrix()), 1e-6);
}

TEST(Oracle, SecondOrderConvergence) {
    const auto scheme = LevelScheme::cesium(2.947e-6);
    const auto channels = LindbladChannelSet::from_scheme(scheme, 2);
    const auto v = uniform_interaction(2, 0.7);
    const auto rho0 = QuantumState::basis("10", 3).as_density();
    const auto s = bell_schedule();
    const auto ref = evolve_density(rho0, s, v, scheme, channels, IntegratorSettings{1e-12, 1e-14});
    const double e1 = max_abs(propagate_oracle(rho0, s, v, scheme, channels, 200).density_matrix() - ref.density_matrix());
    const double e2 = max_abs(propagate_oracle(rho0, s, v, scheme, channels, 400).density_matrix() - ref.density_matrix());
    EXPECT_NEAR(e1 / e2, 4.0, 0.6) << e1 << " " << e2;
}

TEST(Evolve, ErrorsCarrySegmentAndTime) {
    IntegratorSettings s;
    s.max_steps = 10;
    try {
        evolve_pure(QuantumState::basis("10", 3), bell_schedule(), uniform_interaction(2, 0.7), LevelScheme::closed(), s);
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError& e) {
        EXPECT_NE(std::string(e.what()).find("segment"), std::string::npos) << e.what();
        EXPECT_GT(e.time(), 0.0);
    }
    EXPECT_THROW(evolve_pure(QuantumState::basis("10", 3), bell_schedule(), uniform_interaction(3, 0.7), LevelScheme::closed()),
                 std::invalid_argument);
}
