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

// Adaptive Dormand-Prince 5(4) integrator for Eigen-valued states.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rydrap {

struct IntegratorSettings {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    /// Upper bound on the step size; 0 means unbounded.
    double max_step = 0.0;
    double min_step = 1e-10;
    long max_steps = 50'000'000;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("IntegratorSettings: tolerances must be positive");
        if (max_step < 0.0 || !(min_step > 0.0)) throw std::invalid_argument("IntegratorSettings: invalid step bounds");
    }

    bool operator==(const IntegratorSettings&) const = default;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t) : std::runtime_error(what), time_(t) {}
    double time() const { return time_; }

private:
    double time_;
};

struct IntegrationStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

namespace detail {

template <class State>
double scaled_error(const State& err, const State& y0, const State& y1, double atol, double rtol) {
    const auto scale = (y0.array().abs().max(y1.array().abs()) * rtol + atol).eval();
    const double ms = (err.array().abs() / scale).square().mean();
    return std::sqrt(ms);
}

}  // namespace detail

/// Integrates dy/dt = f(t, y) from t0 to t1. `f(t, y, dy)` writes the
/// derivative into `dy`, which is pre-sized like `y`.
template <class State, class Rhs>
State integrate_dopri5(Rhs&& f, State y, double t0, double t1, const IntegratorSettings& s,
                       IntegrationStats* stats = nullptr) {
    if (t1 < t0) throw std::invalid_argument("integrate_dopri5: t1 < t0");
    if (t1 == t0) return y;
    s.validate();

    // Butcher tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = t1 - t0;
    const double hmax = s.max_step > 0.0 ? std::min(s.max_step, span) : span;

    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, tmp = y, ynew = y;
    long evals = 0;
    f(t0, y, k1);
    ++evals;

    // Initial step guess (Hairer, Norsett & Wanner II.4).
    double h;
    {
        const double d0 = detail::scaled_error(y, y, y, s.abs_tol, s.rel_tol);
        const double d1 = detail::scaled_error(k1, y, y, s.abs_tol, s.rel_tol);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, hmax);
        tmp = y + h0 * k1;
        f(t0 + h0, tmp, k2);
        ++evals;
        const double d2 = detail::scaled_error(State(k2 - k1), y, y, s.abs_tol, s.rel_tol) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
        h = std::min({100 * h0, h1, hmax});
    }

    double t = t0;
    long accepted = 0, rejected = 0;
    while (t < t1) {
        if (accepted + rejected >= s.max_steps)
            throw IntegrationError("integrate_dopri5: step budget exhausted", t);
        bool last = false;
        if (t + h >= t1 || (t1 - (t + h)) < 1e-12 * span) {
            h = t1 - t;
            last = true;
        }

        tmp = y + h * (a21 * k1);
        f(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t + h, tmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        f(t + h, ynew, k7);
        evals += 6;

        tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = detail::scaled_error(tmp, y, ynew, s.abs_tol, s.rel_tol);

        if (err <= 1.0) {
            t = last ? t1 : t + h;
            y.swap(ynew);
            k1.swap(k7);
            ++accepted;
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h = std::min(h * fac, hmax);
        } else {
            ++rejected;
            if (!std::isfinite(err)) h *= 0.2;
            else h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            if (h < s.min_step) throw IntegrationError("integrate_dopri5: step size fell below min_step", t);
        }
    }
    if (stats) {
        stats->accepted += accepted;
        stats->rejected += rejected;
        stats->rhs_evals += evals;
    }
    return y;
}

}  // namespace rydrap
