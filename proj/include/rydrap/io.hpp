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

// Batch front-end: JSON run configs, unit conversion at the boundary,
// experiment dispatch and CSV/JSON artifacts.
//
// Every artifact is written to a temporary file and renamed into place.

#include "rydrap/experiments.hpp"
#include "rydrap/protocols.hpp"
#include "rydrap/units.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rydrap {

inline constexpr const char* kToolName = "rydrap";
inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr int kSchemaVersion = 1;

/// Exit codes of `run`.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfigError = 2, kExitIntegrationError = 3 };

/// Invalid configuration; `what()` starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class ExperimentKind { simulate, saturation, timescan, robustness, montecarlo, optimize };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::simulate: return "simulate";
        case ExperimentKind::saturation: return "saturation";
        case ExperimentKind::timescan: return "timescan";
        case ExperimentKind::robustness: return "robustness";
        case ExperimentKind::montecarlo: return "montecarlo";
        case ExperimentKind::optimize: return "optimize";
    }
    return "?";
}

inline ExperimentKind experiment_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::simulate, ExperimentKind::saturation, ExperimentKind::timescan,
                   ExperimentKind::robustness, ExperimentKind::montecarlo, ExperimentKind::optimize})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown experiment '" + s + "'");
}

/// Physical calibration applied at the config boundary.
struct PhysicalConfig {
    double omega0_over_2pi_mhz = 100.0;
    /// Rydberg lifetime 1/gamma_r in us; preset default when absent.
    std::optional<double> gamma_inverse_us;
    /// Whole-protocol duration in us; overrides protocol.sweep_width.
    std::optional<double> total_time_us;

    bool operator==(const PhysicalConfig&) const = default;
};

struct ExperimentOptions {
    std::vector<double> v_grid;
    double plateau_eps = 0.1;
    std::vector<double> total_time_us;
    std::vector<std::string> baselines{"rap", "pi_pulse"};
    std::vector<double> omega_scales;
    std::vector<double> delta_scales;
    std::vector<double> sigma_grid;
    std::size_t n_samples = 30;
    int dims = 2;
    std::vector<double> init;
    std::vector<std::pair<double, double>> bounds;
    int max_evals = 200;
    bool shape_params = false;
    int checkpoints = 400;

    bool operator==(const ExperimentOptions&) const = default;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    ExperimentKind experiment = ExperimentKind::simulate;
    ProtocolSpec protocol = default_spec(ProtocolName::bell2);
    std::optional<PhysicalConfig> physical_units;
    std::string output_dir = "out";
    std::optional<std::uint64_t> seed;
    IntegratorSettings integrator;
    FidelityConvention convention = FidelityConvention::standard;
    ExperimentOptions options;

    bool operator==(const RunConfig&) const = default;
};

inline int sweep_count(ProtocolName n) { return n == ProtocolName::relay_bell3 ? 3 : 2; }

/// Protocol spec with the physical calibration folded in.
inline ProtocolSpec resolved_protocol(const RunConfig& cfg) {
    ProtocolSpec spec = cfg.protocol;
    if (cfg.physical_units) {
        const auto& pu = *cfg.physical_units;
        spec.params.omega0_over_2pi_mhz = pu.omega0_over_2pi_mhz;
        if (pu.gamma_inverse_us) spec.params.lifetime_us = *pu.gamma_inverse_us;
        if (pu.total_time_us) {
            const double tau = to_dimensionless(PhysicalUnits{pu.omega0_over_2pi_mhz}, Quantity::time, *pu.total_time_us);
            spec.params.sweep_width = tau / sweep_count(spec.name);
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

template <class T>
T field_as(const json& j, const std::string& key, const std::string& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + key, e.what());
    }
}

template <class T>
void read_optional(const json& j, const std::string& key, const std::string& path, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = field_as<T>(j, key, path);
}

template <class T>
void read_optional(const json& j, const std::string& key, const std::string& path, std::optional<T>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = field_as<T>(j, key, path);
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path.substr(0, path.size() - 1), "expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(path + key, "unknown field");
    }
}

template <class Fn>
auto parse_enum(const json& j, const std::string& key, const std::string& path, Fn&& fn) {
    const auto s = field_as<std::string>(j, key, path);
    try {
        return fn(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + key, e.what());
    }
}

inline json to_json(const ProtocolSpec& spec) {
    const auto& p = spec.params;
    json j{{"name", to_string(spec.name)},
           {"omega_max", p.omega_max},
           {"delta_max", p.delta_max},
           {"V0", p.v0},
           {"sweep_width", p.sweep_width},
           {"tau_r_ratio", p.tau_r_ratio},
           {"tau_d_ratio", p.tau_d_ratio},
           {"preset", to_string(p.preset)},
           {"ground_coupling", to_string(p.ground_coupling)},
           {"omega0_over_2pi_MHz", p.omega0_over_2pi_mhz}};
    j["lifetime_us"] = p.lifetime_us ? json(*p.lifetime_us) : json(nullptr);
    j["v0_over_omega"] = p.v0_over_omega ? json(*p.v0_over_omega) : json(nullptr);
    j["v0_over_delta"] = p.v0_over_delta ? json(*p.v0_over_delta) : json(nullptr);
    return j;
}

inline ProtocolSpec protocol_from_json(const json& j, const std::string& path) {
    check_keys(j, path,
               {"name", "omega_max", "delta_max", "V0", "sweep_width", "tau_r_ratio", "tau_d_ratio", "preset",
                "ground_coupling", "omega0_over_2pi_MHz", "lifetime_us", "v0_over_omega", "v0_over_delta"});
    if (!j.contains("name")) throw ConfigError(path + "name", "missing required field");
    ProtocolSpec spec = default_spec(parse_enum(j, "name", path, protocol_from_string));
    auto& p = spec.params;
    const bool explicit_omega = j.contains("omega_max") && !j.at("omega_max").is_null();
    const bool explicit_delta = j.contains("delta_max") && !j.at("delta_max").is_null();
    read_optional(j, "omega_max", path, p.omega_max);
    read_optional(j, "delta_max", path, p.delta_max);
    read_optional(j, "V0", path, p.v0);
    read_optional(j, "sweep_width", path, p.sweep_width);
    read_optional(j, "tau_r_ratio", path, p.tau_r_ratio);
    read_optional(j, "tau_d_ratio", path, p.tau_d_ratio);
    if (j.contains("preset")) p.preset = parse_enum(j, "preset", path, preset_from_string);
    if (j.contains("ground_coupling")) p.ground_coupling = parse_enum(j, "ground_coupling", path, coupling_mode_from_string);
    read_optional(j, "omega0_over_2pi_MHz", path, p.omega0_over_2pi_mhz);
    // Explicit amplitudes switch off the V0-proportional defaults unless
    // ratios are given as well.
    if (explicit_omega) p.v0_over_omega.reset();
    if (explicit_delta) p.v0_over_delta.reset();
    if (j.contains("v0_over_omega")) {
        p.v0_over_omega.reset();
        read_optional(j, "v0_over_omega", path, p.v0_over_omega);
    }
    if (j.contains("v0_over_delta")) {
        p.v0_over_delta.reset();
        read_optional(j, "v0_over_delta", path, p.v0_over_delta);
    }
    if (j.contains("lifetime_us")) {
        p.lifetime_us.reset();
        read_optional(j, "lifetime_us", path, p.lifetime_us);
    }
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        // Messages look like "protocol.<field> <reason>".
        const std::string msg = e.what();
        const auto sp = msg.find(' ');
        if (sp != std::string::npos && msg.rfind("protocol.", 0) == 0)
            throw ConfigError(msg.substr(0, sp), msg.substr(sp + 1));
        throw ConfigError(path.substr(0, path.size() - 1), msg);
    }
    return spec;
}

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& cfg) {
    using nlohmann::json;
    json j;
    j["schema_version"] = cfg.schema_version;
    j["experiment"] = to_string(cfg.experiment);
    j["protocol"] = detail::to_json(cfg.protocol);
    if (cfg.physical_units) {
        const auto& pu = *cfg.physical_units;
        json p{{"omega0_over_2pi_MHz", pu.omega0_over_2pi_mhz}};
        p["gamma_inverse_us"] = pu.gamma_inverse_us ? json(*pu.gamma_inverse_us) : json(nullptr);
        p["total_time_us"] = pu.total_time_us ? json(*pu.total_time_us) : json(nullptr);
        j["physical_units"] = p;
    } else {
        j["physical_units"] = nullptr;
    }
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    j["integrator"] = {{"rel_tol", cfg.integrator.rel_tol},
                       {"abs_tol", cfg.integrator.abs_tol},
                       {"max_step", cfg.integrator.max_step},
                       {"min_step", cfg.integrator.min_step},
                       {"max_steps", cfg.integrator.max_steps}};
    j["convention"] = cfg.convention == FidelityConvention::standard ? "standard" : "paper";
    const auto& o = cfg.options;
    json bounds = json::array();
    for (const auto& [lo, hi] : o.bounds) bounds.push_back({lo, hi});
    j["options"] = {{"v_grid", o.v_grid},
                    {"plateau_eps", o.plateau_eps},
                    {"total_time_us", o.total_time_us},
                    {"baselines", o.baselines},
                    {"omega_scales", o.omega_scales},
                    {"delta_scales", o.delta_scales},
                    {"sigma_grid", o.sigma_grid},
                    {"n_samples", o.n_samples},
                    {"dims", o.dims},
                    {"init", o.init},
                    {"bounds", bounds},
                    {"max_evals", o.max_evals},
                    {"shape_params", o.shape_params},
                    {"checkpoints", o.checkpoints}};
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    using detail::field_as;
    using detail::read_optional;
    detail::check_keys(j, "", {"schema_version", "experiment", "protocol", "physical_units", "output_dir", "seed",
                               "integrator", "convention", "options"});
    RunConfig cfg;
    if (!j.contains("schema_version")) throw ConfigError("schema_version", "missing required field");
    cfg.schema_version = field_as<int>(j, "schema_version", "");
    if (cfg.schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(cfg.schema_version));
    if (j.contains("experiment")) cfg.experiment = detail::parse_enum(j, "experiment", "", experiment_from_string);
    if (!j.contains("protocol")) throw ConfigError("protocol", "missing required field");
    cfg.protocol = detail::protocol_from_json(j.at("protocol"), "protocol.");

    if (j.contains("physical_units") && !j.at("physical_units").is_null()) {
        const auto& pj = j.at("physical_units");
        detail::check_keys(pj, "physical_units.", {"omega0_over_2pi_MHz", "gamma_inverse_us", "total_time_us"});
        PhysicalConfig pu;
        read_optional(pj, "omega0_over_2pi_MHz", "physical_units.", pu.omega0_over_2pi_mhz);
        read_optional(pj, "gamma_inverse_us", "physical_units.", pu.gamma_inverse_us);
        read_optional(pj, "total_time_us", "physical_units.", pu.total_time_us);
        if (!(pu.omega0_over_2pi_mhz > 0.0)) throw ConfigError("physical_units.omega0_over_2pi_MHz", "must be positive");
        if (pu.gamma_inverse_us && !(*pu.gamma_inverse_us > 0.0))
            throw ConfigError("physical_units.gamma_inverse_us", "must be positive");
        if (pu.total_time_us && !(*pu.total_time_us > 0.0)) throw ConfigError("physical_units.total_time_us", "must be positive");
        cfg.physical_units = pu;
    }
    read_optional(j, "output_dir", "", cfg.output_dir);
    read_optional(j, "seed", "", cfg.seed);
    if (j.contains("integrator")) {
        const auto& ij = j.at("integrator");
        detail::check_keys(ij, "integrator.", {"rel_tol", "abs_tol", "max_step", "min_step", "max_steps"});
        read_optional(ij, "rel_tol", "integrator.", cfg.integrator.rel_tol);
        read_optional(ij, "abs_tol", "integrator.", cfg.integrator.abs_tol);
        read_optional(ij, "max_step", "integrator.", cfg.integrator.max_step);
        read_optional(ij, "min_step", "integrator.", cfg.integrator.min_step);
        read_optional(ij, "max_steps", "integrator.", cfg.integrator.max_steps);
        try {
            cfg.integrator.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("integrator", e.what());
        }
    }
    if (j.contains("convention")) cfg.convention = detail::parse_enum(j, "convention", "", convention_from_string);
    if (j.contains("options")) {
        const auto& oj = j.at("options");
        const std::string p = "options.";
        detail::check_keys(oj, p,
                           {"v_grid", "plateau_eps", "total_time_us", "baselines", "omega_scales", "delta_scales",
                            "sigma_grid", "n_samples", "dims", "init", "bounds", "max_evals", "shape_params",
                            "checkpoints"});
        auto& o = cfg.options;
        read_optional(oj, "v_grid", p, o.v_grid);
        read_optional(oj, "plateau_eps", p, o.plateau_eps);
        read_optional(oj, "total_time_us", p, o.total_time_us);
        read_optional(oj, "baselines", p, o.baselines);
        read_optional(oj, "omega_scales", p, o.omega_scales);
        read_optional(oj, "delta_scales", p, o.delta_scales);
        read_optional(oj, "sigma_grid", p, o.sigma_grid);
        read_optional(oj, "n_samples", p, o.n_samples);
        read_optional(oj, "dims", p, o.dims);
        read_optional(oj, "init", p, o.init);
        if (oj.contains("bounds")) {
            o.bounds.clear();
            for (const auto& b : field_as<std::vector<std::vector<double>>>(oj, "bounds", p)) {
                if (b.size() != 2) throw ConfigError("options.bounds", "each bound must be [lo, hi]");
                o.bounds.emplace_back(b[0], b[1]);
            }
        }
        read_optional(oj, "max_evals", p, o.max_evals);
        read_optional(oj, "shape_params", p, o.shape_params);
        read_optional(oj, "checkpoints", p, o.checkpoints);
        for (const auto& b : o.baselines)
            if (b != "rap" && b != "pi_pulse") throw ConfigError("options.baselines", "unknown baseline '" + b + "'");
        if (o.dims < 1 || o.dims > 3) throw ConfigError("options.dims", "must be 1, 2 or 3");
        if (o.checkpoints < 2) throw ConfigError("options.checkpoints", "must be >= 2");
    }
    return cfg;
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Defaults for experiment grids not given in the config.
inline ExperimentOptions with_default_grids(ExperimentOptions o, ExperimentKind kind) {
    auto linspace = [](double a, double b, int n) {
        std::vector<double> v;
        for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
        return v;
    };
    if (kind == ExperimentKind::saturation && o.v_grid.empty()) o.v_grid = linspace(0.2, 1.5, 20);
    if (kind == ExperimentKind::timescan && o.total_time_us.empty()) o.total_time_us = linspace(0.3, 1.0, 8);
    if (kind == ExperimentKind::robustness) {
        if (o.omega_scales.empty()) o.omega_scales = linspace(0.9, 1.1, 11);
        if (o.delta_scales.empty()) o.delta_scales = linspace(0.9, 1.1, 11);
        // linspace can miss 1.0 by rounding.
        for (auto* g : {&o.omega_scales, &o.delta_scales})
            for (double& x : *g)
                if (std::abs(x - 1.0) < 1e-12) x = 1.0;
    }
    if (kind == ExperimentKind::montecarlo && o.sigma_grid.empty()) o.sigma_grid = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
    return o;
}

// ---------------------------------------------------------------------------
// Artifacts

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Writes `content` to `path` via a temporary sibling and rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline double apply_convention(double f, FidelityConvention c) { return c == FidelityConvention::standard ? f : f * f; }

/// Long format: one column per axis, then sample_index and fidelity.
inline std::string sweep_csv(const SweepResult& r, FidelityConvention c = FidelityConvention::standard) {
    std::ostringstream os;
    for (const auto& a : r.axes) os << a.name << ',';
    os << "sample_index,fidelity\n";
    for (const auto& row : r.rows) {
        const auto idx = r.unravel(row.point);
        for (std::size_t k = 0; k < r.axes.size(); ++k) os << format_double(r.axes[k].values[idx[k]]) << ',';
        os << row.sample << ',' << format_double(apply_convention(row.fidelity, c)) << '\n';
    }
    return os.str();
}

inline nlohmann::json sweep_summary(const SweepResult& r, FidelityConvention c = FidelityConvention::standard) {
    using nlohmann::json;
    json axes = json::array();
    for (const auto& a : r.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
    std::vector<double> mean;
    for (double m : r.mean) mean.push_back(apply_convention(m, c));
    json j{{"experiment", r.experiment}, {"axes", axes},   {"mean", mean},
           {"n_samples", r.n_samples},   {"seed", r.seed}, {"protocol", detail::to_json(r.protocol)},
           {"convention", to_string(c)}};
    j["std"] = r.stddev.empty() ? json(nullptr) : json(r.stddev);
    json scalars = json::object();
    for (const auto& [k, v] : r.scalars) scalars[k] = v;
    j["scalars"] = scalars;
    return j;
}

/// Long-format populations: one row per (time, basis state).
inline std::string population_csv(const std::vector<std::pair<double, Eigen::VectorXd>>& samples, int n_atoms, int dim_local) {
    std::ostringstream os;
    os << "t,basis,ryd_count,population\n";
    for (const auto& [t, pops] : samples)
        for (Eigen::Index s = 0; s < pops.size(); ++s) {
            const auto label = basis_label(static_cast<std::size_t>(s), n_atoms, dim_local);
            const auto ryd = std::count(label.begin(), label.end(), 'r');
            os << format_double(t) << ',' << label << ',' << ryd << ',' << format_double(pops(s)) << '\n';
        }
    return os.str();
}

inline std::string waveform_csv(const PulseSchedule& schedule, int n_points) {
    std::ostringstream os;
    os << "t,omega,delta\n";
    for (const auto& s : sample_waveform(schedule, n_points))
        os << format_double(s.t) << ',' << format_double(s.omega) << ',' << format_double(s.delta) << '\n';
    return os.str();
}

struct RunReport {
    std::vector<std::string> outputs;
    nlohmann::json summary;
};

namespace detail {

inline std::uint64_t require_seed(const RunConfig& cfg) {
    if (!cfg.seed) throw ConfigError("seed", "required for sampling experiments");
    return *cfg.seed;
}

inline RunReport execute(const RunConfig& cfg, const std::filesystem::path& out) {
    using nlohmann::json;
    const ProtocolSpec spec = resolved_protocol(cfg);
    const auto opts = with_default_grids(cfg.options, cfg.experiment);
    const auto conv = cfg.convention;
    RunReport rep;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_atomic(out / name, content);
        rep.outputs.push_back(name);
    };

    switch (cfg.experiment) {
        case ExperimentKind::simulate: {
            const auto inst = build_protocol(spec);
            std::vector<std::pair<double, Eigen::VectorXd>> samples;
            auto cps = Checkpoints::uniform(inst.schedule.total_duration(), opts.checkpoints,
                                            [&](double t, const QuantumState& s) { samples.emplace_back(t, s.populations()); });
            const auto outcome = simulate_protocol(inst, cfg.integrator, FidelityConvention::standard, &cps);
            json r{{"protocol", to_json(spec)},
                   {"fidelity", apply_convention(outcome.fidelity, conv)},
                   {"fidelity_standard", outcome.fidelity},
                   {"fidelity_paper_squared", outcome.fidelity * outcome.fidelity},
                   {"convention", to_string(conv)},
                   {"total_duration", inst.schedule.total_duration()},
                   {"total_time_us", inst.schedule.total_duration() / PhysicalUnits{spec.params.omega0_over_2pi_mhz}.omega0_rad_per_us()},
                   {"gamma_r", spec.params.gamma_r()}};
            if (spec.name == ProtocolName::ghz4) {
                const std::vector<std::string> canon{"0000", "1111"};
                const auto target = QuantumState::superposition(canon, inst.scheme.dim_local());
                r["fidelity_canonical_ghz"] =
                    apply_convention(fidelity(ghz_canonicalize(outcome.final_state), target), conv);
            }
            emit("result.json", r.dump(2) + "\n");
            emit("populations.csv", population_csv(samples, inst.initial.n_atoms(), inst.initial.dim_local()));
            emit("waveform.csv", waveform_csv(inst.schedule, opts.checkpoints));
            rep.summary = r;
            break;
        }
        case ExperimentKind::saturation: {
            auto [r, v_sat] = saturation_scan(spec, opts.v_grid, opts.plateau_eps, cfg.integrator);
            emit("saturation.csv", sweep_csv(r, conv));
            rep.summary = sweep_summary(r, conv);
            emit("summary.json", rep.summary.dump(2) + "\n");
            break;
        }
        case ExperimentKind::timescan: {
            rep.summary = json::object();
            for (const auto& b : opts.baselines) {
                const auto base = b == "rap" ? TimeScanBaseline::rap : TimeScanBaseline::pi_pulse;
                const auto r = time_scan(spec, opts.total_time_us, base, cfg.integrator);
                emit("timescan_" + b + ".csv", sweep_csv(r, conv));
                rep.summary[b] = sweep_summary(r, conv);
            }
            emit("summary.json", rep.summary.dump(2) + "\n");
            break;
        }
        case ExperimentKind::robustness: {
            const auto r = robustness_grid(spec, opts.omega_scales, opts.delta_scales, cfg.integrator);
            emit("robustness.csv", sweep_csv(r, conv));
            rep.summary = sweep_summary(r, conv);
            emit("summary.json", rep.summary.dump(2) + "\n");
            break;
        }
        case ExperimentKind::montecarlo: {
            const auto seed = require_seed(cfg);
            const auto r = montecarlo_positions(spec, opts.sigma_grid, opts.n_samples, opts.dims, seed, cfg.integrator);
            emit("montecarlo.csv", sweep_csv(r, conv));
            rep.summary = sweep_summary(r, conv);
            emit("summary.json", rep.summary.dump(2) + "\n");
            break;
        }
        case ExperimentKind::optimize: {
            std::vector<double> init = opts.init;
            if (init.empty()) {
                init = {spec.params.effective_omega_max(), spec.params.effective_delta_max()};
                if (opts.shape_params) init.insert(init.end(), {spec.params.tau_r_ratio, spec.params.tau_d_ratio});
            }
            auto bounds = opts.bounds;
            if (bounds.empty())
                for (double x : init) bounds.emplace_back(0.25 * x, 4.0 * x);
            const auto res = optimize_pulse(spec, init, bounds, opts.max_evals, {opts.shape_params}, cfg.integrator);
            std::ostringstream os;
            os << "eval,omega_max,delta_max";
            if (opts.shape_params) os << ",tau_r_ratio,tau_d_ratio";
            os << ",fidelity\n";
            for (std::size_t i = 0; i < res.trace.size(); ++i) {
                os << i;
                for (double x : res.trace[i].params) os << ',' << format_double(x);
                os << ',' << format_double(apply_convention(res.trace[i].fidelity, conv)) << '\n';
            }
            emit("optimize_trace.csv", os.str());
            rep.summary = {{"protocol", to_json(spec)},
                           {"best_params", res.best_params},
                           {"best_fidelity", apply_convention(res.best_fidelity, conv)},
                           {"evaluations", res.trace.size()},
                           {"budget_exhausted", res.budget_exhausted},
                           {"convention", to_string(conv)}};
            emit("summary.json", rep.summary.dump(2) + "\n");
            break;
        }
    }
    return rep;
}

}  // namespace detail

/// Runs one configured experiment, writing artifacts and a manifest into
/// cfg.output_dir. Diagnostics go to `err`; the return value is an ExitCode.
inline int run(const RunConfig& cfg, std::ostream& err = std::cerr) {
    const auto started = std::chrono::steady_clock::now();
    try {
        const std::filesystem::path out(cfg.output_dir);
        std::filesystem::create_directories(out);
        auto report = detail::execute(cfg, out);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        nlohmann::json manifest{{"tool", kToolName},
                                {"version", kToolVersion},
                                {"config", to_json(cfg)},
                                {"seed", cfg.seed ? nlohmann::json(*cfg.seed) : nlohmann::json(nullptr)},
                                {"wall_time_s", wall},
                                {"outputs", report.outputs}};
        write_atomic(out / "manifest.json", manifest.dump(2) + "\n");
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const IntegrationError& e) {
        err << "integration error at t=" << e.time() << ": " << e.what() << '\n';
        return kExitIntegrationError;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace rydrap
