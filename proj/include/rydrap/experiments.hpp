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

// Experiment battery: saturation scans, total-time scans, robustness grids,
// positional Monte Carlo and derivative-free pulse optimisation.
//
// Grid points and samples are evaluated in parallel. Each point writes only
// its own slot and draws from a generator seeded by (seed, point, sample), so
// results are bit-identical for any worker count.

#include "rydrap/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace rydrap {

/// Worker count: RYDRAP_WORKERS if set, else the hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("RYDRAP_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned workers = worker_count()) {
    workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct Axis {
    std::string name;
    std::vector<double> values;

    bool operator==(const Axis&) const = default;
};

/// One long-format row: a grid point (flat index, row-major over the axes)
/// and one sample at that point.
struct SweepRow {
    std::size_t point = 0;
    std::size_t sample = 0;
    double fidelity = 0.0;

    bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
    std::string experiment;
    std::vector<Axis> axes;
    /// Mean fidelity per grid point.
    std::vector<double> mean;
    /// Sample standard deviation per grid point; empty when n_samples == 1.
    std::vector<double> stddev;
    std::vector<SweepRow> rows;
    std::size_t n_samples = 1;
    std::uint64_t seed = 0;
    ProtocolSpec protocol;
    std::map<std::string, double> scalars;

    std::size_t point_count() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.values.size();
        return n;
    }

    /// Per-axis indices of a flat point index.
    std::vector<std::size_t> unravel(std::size_t point) const {
        std::vector<std::size_t> idx(axes.size());
        for (std::size_t k = axes.size(); k-- > 0;) {
            idx[k] = point % axes[k].values.size();
            point /= axes[k].values.size();
        }
        return idx;
    }

    void validate() const {
        if (mean.size() != point_count()) throw std::logic_error("SweepResult: mean size does not match the axes");
        if ((n_samples > 1) != !stddev.empty()) throw std::logic_error("SweepResult: stddev present iff n_samples > 1");
        if (!stddev.empty() && stddev.size() != point_count()) throw std::logic_error("SweepResult: stddev size mismatch");
        if (rows.size() != point_count() * n_samples) throw std::logic_error("SweepResult: row count mismatch");
    }
};

namespace detail {

inline void finalize_single(SweepResult& r, const std::vector<double>& values) {
    r.mean = values;
    r.rows.clear();
    for (std::size_t i = 0; i < values.size(); ++i) r.rows.push_back({i, 0, values[i]});
    r.validate();
}

inline ProtocolSpec closed_copy(ProtocolSpec spec) {
    spec.params.preset = DissipationPreset::none;
    return spec;
}

}  // namespace detail

/// Smallest grid value whose infidelity lies within `plateau_eps` (relative)
/// of the plateau, taken as the mean infidelity of the three largest grid values.
inline double detect_saturation(const std::vector<double>& grid, const std::vector<double>& infidelity, double plateau_eps) {
    if (grid.size() != infidelity.size() || grid.size() < 3) throw std::invalid_argument("detect_saturation: bad input");
    const std::size_t n = grid.size();
    const double plateau = (infidelity[n - 1] + infidelity[n - 2] + infidelity[n - 3]) / 3.0;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(infidelity[i] - plateau) <= plateau_eps * plateau) return grid[i];
    return grid.back();
}

/// Dissipation-free fidelity versus V0. Returns the sweep and V_sat.
inline std::pair<SweepResult, double> saturation_scan(const ProtocolSpec& spec, const std::vector<double>& v_grid,
                                                      double plateau_eps = 0.1, const IntegratorSettings& settings = {}) {
    if (v_grid.size() < 5) throw std::invalid_argument("saturation_scan: grid needs at least 5 points");
    for (std::size_t i = 1; i < v_grid.size(); ++i)
        if (!(v_grid[i] > v_grid[i - 1])) throw std::invalid_argument("saturation_scan: grid must be strictly ascending");
    if (!(plateau_eps > 0.0)) throw std::invalid_argument("saturation_scan: plateau_eps must be positive");

    const ProtocolSpec closed = detail::closed_copy(spec);
    std::vector<double> fid(v_grid.size());
    parallel_for(v_grid.size(), [&](std::size_t i) {
        ProtocolSpec s = closed;
        s.params.v0 = v_grid[i];
        fid[i] = simulate_protocol(build_protocol(s), settings).fidelity;
    });

    SweepResult r;
    r.experiment = "saturation";
    r.axes = {{"V0", v_grid}};
    r.protocol = spec;
    detail::finalize_single(r, fid);
    std::vector<double> infid(fid.size());
    std::transform(fid.begin(), fid.end(), infid.begin(), [](double f) { return 1.0 - f; });
    const double v_sat = detect_saturation(v_grid, infid, plateau_eps);
    r.scalars["V_sat"] = v_sat;
    r.scalars["plateau_eps"] = plateau_eps;
    return {std::move(r), v_sat};
}

enum class TimeScanBaseline { rap, pi_pulse };

inline std::string to_string(TimeScanBaseline b) { return b == TimeScanBaseline::rap ? "rap" : "pi_pulse"; }

inline ProtocolName pi_pulse_variant(ProtocolName n) {
    switch (n) {
        case ProtocolName::bell2:
        case ProtocolName::pi_pulse_bell2: return ProtocolName::pi_pulse_bell2;
        case ProtocolName::w3:
        case ProtocolName::pi_pulse_w3: return ProtocolName::pi_pulse_w3;
        default: throw std::invalid_argument("time_scan: no pi-pulse variant for protocol " + to_string(n));
    }
}

/// Fidelity versus total physical duration (us). The dimensionless protocol
/// is held fixed and Omega0 is chosen so that it lasts exactly T; the
/// preset's physical decay rate then enters as gamma_r / Omega0.
inline SweepResult time_scan(const ProtocolSpec& spec, const std::vector<double>& total_time_us, TimeScanBaseline baseline,
                             const IntegratorSettings& settings = {}) {
    for (double t : total_time_us)
        if (!(t > 0.0)) throw std::invalid_argument("time_scan: total times must be positive");
    ProtocolSpec base = spec;
    if (baseline == TimeScanBaseline::pi_pulse) base.name = pi_pulse_variant(spec.name);
    const double tau_tot = schedule_for(base).total_duration();

    std::vector<double> fid(total_time_us.size());
    parallel_for(total_time_us.size(), [&](std::size_t i) {
        ProtocolSpec s = base;
        s.params.omega0_over_2pi_mhz = tau_tot / (2.0 * std::numbers::pi * total_time_us[i]);
        fid[i] = simulate_protocol(build_protocol(s), settings).fidelity;
    });

    SweepResult r;
    r.experiment = "timescan_" + to_string(baseline);
    r.axes = {{"total_time_us", total_time_us}};
    r.protocol = base;
    r.scalars["tau_tot"] = tau_tot;
    detail::finalize_single(r, fid);
    return r;
}

/// Fidelity with omega_max and delta_max multiplied by the grid factors.
inline SweepResult robustness_grid(const ProtocolSpec& spec, const std::vector<double>& omega_scales,
                                   const std::vector<double>& delta_scales, const IntegratorSettings& settings = {}) {
    auto contains_one = [](const std::vector<double>& g) {
        return std::any_of(g.begin(), g.end(), [](double x) { return x == 1.0; });
    };
    if (omega_scales.empty() || delta_scales.empty()) throw std::invalid_argument("robustness_grid: empty grid");
    if (!contains_one(omega_scales) || !contains_one(delta_scales))
        throw std::invalid_argument("robustness_grid: grids must contain 1.0");

    const double omega = spec.params.effective_omega_max();
    const double delta = spec.params.effective_delta_max();
    const std::size_t nd = delta_scales.size();
    std::vector<double> fid(omega_scales.size() * nd);
    parallel_for(fid.size(), [&](std::size_t k) {
        ProtocolSpec s = spec;
        s.params.v0_over_omega.reset();
        s.params.v0_over_delta.reset();
        s.params.omega_max = omega * omega_scales[k / nd];
        s.params.delta_max = delta * delta_scales[k % nd];
        fid[k] = simulate_protocol(build_protocol(s), settings).fidelity;
    });

    SweepResult r;
    r.experiment = "robustness";
    r.axes = {{"omega_scale", omega_scales}, {"delta_scale", delta_scales}};
    r.protocol = spec;
    detail::finalize_single(r, fid);
    return r;
}

/// Generator for sample `sample` of grid point `point`.
inline std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t point, std::size_t sample) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(point), static_cast<std::uint32_t>(sample)};
    return std::mt19937_64(seq);
}

/// Mean and sample standard deviation of the fidelity over `n_samples`
/// Gaussian-perturbed layouts per sigma (in units of the lattice spacing).
inline SweepResult montecarlo_positions(const ProtocolSpec& spec, const std::vector<double>& sigma_grid,
                                        std::size_t n_samples, int dims, std::uint64_t seed,
                                        const IntegratorSettings& settings = {}) {
    if (n_samples < 2) throw std::invalid_argument("montecarlo_positions: n_samples must be >= 2");
    if (sigma_grid.empty()) throw std::invalid_argument("montecarlo_positions: empty sigma grid");
    const ProtocolInstance base = build_protocol(spec);

    std::vector<double> fid(sigma_grid.size() * n_samples);
    parallel_for(fid.size(), [&](std::size_t k) {
        const std::size_t point = k / n_samples, sample = k % n_samples;
        auto rng = sample_rng(seed, point, sample);
        auto layout = perturb_positions(base.layout, sigma_grid[point], dims, rng);
        fid[k] = simulate_protocol(with_layout(base, std::move(layout)), settings).fidelity;
    });

    SweepResult r;
    r.experiment = "montecarlo";
    r.axes = {{"sigma", sigma_grid}};
    r.protocol = spec;
    r.seed = seed;
    r.n_samples = n_samples;
    r.scalars["dims"] = dims;
    for (std::size_t p = 0; p < sigma_grid.size(); ++p) {
        const auto first = fid.begin() + static_cast<std::ptrdiff_t>(p * n_samples);
        const auto last = first + static_cast<std::ptrdiff_t>(n_samples);
        const double m = std::accumulate(first, last, 0.0) / static_cast<double>(n_samples);
        double ss = 0.0;
        for (auto it = first; it != last; ++it) ss += (*it - m) * (*it - m);
        r.mean.push_back(m);
        r.stddev.push_back(std::sqrt(ss / static_cast<double>(n_samples - 1)));
        for (std::size_t s = 0; s < n_samples; ++s) r.rows.push_back({p, s, fid[p * n_samples + s]});
    }
    r.validate();
    return r;
}

struct OptimizeOptions {
    /// Also optimise tau_R/T_p and tau_D/T_p.
    bool shape_params = false;
    double ftol = 1e-10;
    double xtol = 1e-6;
};

struct OptimizeEvaluation {
    std::vector<double> params;
    double fidelity = 0.0;
};

struct OptimizeResult {
    /// (omega_max, delta_max[, tau_r_ratio, tau_d_ratio])
    std::vector<double> best_params;
    double best_fidelity = 0.0;
    std::vector<OptimizeEvaluation> trace;
    bool budget_exhausted = false;
};

/// Protocol spec with the optimiser's parameter vector applied.
inline ProtocolSpec apply_pulse_params(ProtocolSpec spec, const std::vector<double>& x) {
    spec.params.v0_over_omega.reset();
    spec.params.v0_over_delta.reset();
    spec.params.omega_max = x.at(0);
    spec.params.delta_max = x.at(1);
    if (x.size() == 4) {
        spec.params.tau_r_ratio = x[2];
        spec.params.tau_d_ratio = x[3];
    }
    return spec;
}

/// Nelder-Mead simplex maximising the dissipation-free fidelity inside a box.
inline OptimizeResult optimize_pulse(const ProtocolSpec& spec, const std::vector<double>& init,
                                     const std::vector<std::pair<double, double>>& bounds, int max_evals,
                                     const OptimizeOptions& options = {}, const IntegratorSettings& settings = {}) {
    const std::size_t dim = options.shape_params ? 4 : 2;
    if (init.size() != dim || bounds.size() != dim) throw std::invalid_argument("optimize_pulse: expected " + std::to_string(dim) + " parameters");
    for (std::size_t k = 0; k < dim; ++k) {
        const auto [lo, hi] = bounds[k];
        if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("optimize_pulse: bounds must be positive and ordered");
        if (init[k] < lo || init[k] > hi) throw std::invalid_argument("optimize_pulse: init outside bounds");
    }
    if (max_evals < 1) throw std::invalid_argument("optimize_pulse: max_evals must be positive");

    const ProtocolSpec closed = detail::closed_copy(spec);
    OptimizeResult result;
    auto clamp = [&](std::vector<double> x) {
        for (std::size_t k = 0; k < dim; ++k) x[k] = std::clamp(x[k], bounds[k].first, bounds[k].second);
        return x;
    };
    // Objective to minimise: infidelity.
    auto evaluate = [&](const std::vector<double>& x) {
        const double f = simulate_protocol(build_protocol(apply_pulse_params(closed, x)), settings).fidelity;
        result.trace.push_back({x, f});
        if (result.trace.size() == 1 || f > result.best_fidelity) {
            result.best_fidelity = f;
            result.best_params = x;
        }
        return 1.0 - f;
    };
    auto budget_left = [&] { return static_cast<int>(result.trace.size()) < max_evals; };

    std::vector<std::vector<double>> simplex{init};
    std::vector<double> values{evaluate(init)};
    for (std::size_t k = 0; k < dim && budget_left(); ++k) {
        auto x = init;
        const double step = 0.1 * x[k];
        x[k] = (x[k] + step <= bounds[k].second) ? x[k] + step : x[k] - step;
        x = clamp(x);
        simplex.push_back(x);
        values.push_back(evaluate(x));
    }

    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    while (simplex.size() == dim + 1) {
        std::vector<std::size_t> order(simplex.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        {
            std::vector<std::vector<double>> s2;
            std::vector<double> v2;
            for (auto i : order) {
                s2.push_back(simplex[i]);
                v2.push_back(values[i]);
            }
            simplex = std::move(s2);
            values = std::move(v2);
        }
        double size = 0.0;
        for (std::size_t i = 1; i <= dim; ++i)
            for (std::size_t k = 0; k < dim; ++k)
                size = std::max(size, std::abs(simplex[i][k] - simplex[0][k]) / std::max(std::abs(simplex[0][k]), 1e-12));
        if (values[dim] - values[0] <= options.ftol && size <= options.xtol) break;
        if (!budget_left()) {
            result.budget_exhausted = true;
            break;
        }

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[i][k] / static_cast<double>(dim);
        auto along = [&](double t) {
            std::vector<double> x(dim);
            for (std::size_t k = 0; k < dim; ++k) x[k] = centroid[k] + t * (simplex[dim][k] - centroid[k]);
            return clamp(x);
        };

        const auto xr = along(-alpha);
        const double fr = evaluate(xr);
        if (fr < values[0]) {
            if (!budget_left()) {
                simplex[dim] = xr;
                values[dim] = fr;
                continue;
            }
            const auto xe = along(-alpha * gamma);
            const double fe = evaluate(xe);
            simplex[dim] = fe < fr ? xe : xr;
            values[dim] = std::min(fe, fr);
        } else if (fr < values[dim - 1]) {
            simplex[dim] = xr;
            values[dim] = fr;
        } else {
            if (!budget_left()) continue;
            const bool outside = fr < values[dim];
            const auto xc = outside ? along(-alpha * rho) : along(rho);
            const double fc = evaluate(xc);
            if (fc < std::min(fr, values[dim])) {
                simplex[dim] = xc;
                values[dim] = fc;
            } else {
                for (std::size_t i = 1; i <= dim && budget_left(); ++i) {
                    for (std::size_t k = 0; k < dim; ++k) simplex[i][k] = simplex[0][k] + sigma * (simplex[i][k] - simplex[0][k]);
                    simplex[i] = clamp(simplex[i]);
                    values[i] = evaluate(simplex[i]);
                }
            }
        }
    }
    if (simplex.size() < dim + 1) result.budget_exhausted = true;
    return result;
}

}  // namespace rydrap
