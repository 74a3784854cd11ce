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


// rydrap command-line front-end.
//
//   rydrap simulate --protocol w3 --out runs/w3
//   rydrap montecarlo --config mc.json --seed 11
//   rydrap waveform --protocol ghz4 --out wf.csv

#include "rydrap/io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct CommonFlags {
    std::string config_path;
    std::string protocol;
    std::string out;
    std::string convention;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--protocol", f.protocol, "protocol name when no config is given");
    sub->add_option("--out", f.out, "output directory (overrides config)");
    sub->add_option("--seed", f.seed, "RNG seed (overrides config)");
    sub->add_option("--convention", f.convention, "fidelity convention")->check(CLI::IsMember({"standard", "paper"}));
}

rydrap::RunConfig assemble(const CommonFlags& f, rydrap::ExperimentKind kind) {
    rydrap::RunConfig cfg;
    if (!f.config_path.empty()) cfg = rydrap::load_config(f.config_path);
    else if (!f.protocol.empty()) {
        try {
            cfg.protocol = rydrap::default_spec(rydrap::protocol_from_string(f.protocol));
        } catch (const std::invalid_argument& e) {
            throw rydrap::ConfigError("--protocol", e.what());
        }
    }
    if (!f.config_path.empty() && cfg.experiment != kind)
        std::cerr << "note: config experiment '" << rydrap::to_string(cfg.experiment) << "' overridden by subcommand\n";
    cfg.experiment = kind;
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (f.seed) cfg.seed = f.seed;
    if (!f.convention.empty()) cfg.convention = rydrap::convention_from_string(f.convention);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rydberg RAP entanglement simulator"};
    app.set_version_flag("--version", rydrap::kToolVersion);
    app.require_subcommand(1);

    struct Entry {
        const char* name;
        const char* help;
        rydrap::ExperimentKind kind;
    };
    const Entry entries[] = {
        {"simulate", "run one protocol and write populations and fidelity", rydrap::ExperimentKind::simulate},
        {"saturation", "scan V0 and locate the saturation interaction", rydrap::ExperimentKind::saturation},
        {"timescan", "fidelity versus total protocol time", rydrap::ExperimentKind::timescan},
        {"robustness", "fidelity over an (Omega_max, Delta_max) scaling grid", rydrap::ExperimentKind::robustness},
        {"montecarlo", "positional disorder sampling", rydrap::ExperimentKind::montecarlo},
        {"optimize", "Nelder-Mead search over pulse parameters", rydrap::ExperimentKind::optimize},
    };
    CommonFlags flags;
    std::vector<std::pair<CLI::App*, rydrap::ExperimentKind>> subs;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        add_common(sub, flags);
        subs.emplace_back(sub, e.kind);
    }

    std::string wf_protocol = "bell2";
    std::string wf_out = "waveform.csv";
    int wf_points = 2001;
    auto* wf = app.add_subcommand("waveform", "export Omega(t), Delta(t) of a protocol as CSV");
    wf->add_option("--protocol", wf_protocol, "protocol name");
    wf->add_option("--out", wf_out, "output CSV path");
    wf->add_option("--points", wf_points, "number of samples")->check(CLI::Range(2, 10000000));

    CLI11_PARSE(app, argc, argv);

    if (wf->parsed()) {
        try {
            const auto inst = rydrap::build_protocol(rydrap::default_spec(rydrap::protocol_from_string(wf_protocol)));
            rydrap::write_atomic(wf_out, rydrap::waveform_csv(inst.schedule, wf_points));
            return rydrap::kExitOk;
        } catch (const std::invalid_argument& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return rydrap::kExitConfigError;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return rydrap::kExitFailure;
        }
    }
    for (const auto& [sub, kind] : subs) {
        if (!sub->parsed()) continue;
        try {
            return rydrap::run(assemble(flags, kind));
        } catch (const rydrap::ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return rydrap::kExitConfigError;
        }
    }
    return rydrap::kExitFailure;
}
