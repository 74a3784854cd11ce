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


#include "rydrap/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace rydrap;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("rydrap_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error_field(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

}  // namespace

TEST(Units, Conversions) {
    const PhysicalUnits u{100.0};
    EXPECT_NEAR(to_dimensionless(u, Quantity::rate, 1.0 / 540.0), 2.947e-6, 1e-9);
    EXPECT_NEAR(to_dimensionless(u, Quantity::rate, 1.0 / 147.0), 1.083e-5, 1e-8);
    EXPECT_NEAR(to_dimensionless(u, Quantity::time, 1.0) / (2 * std::numbers::pi), 100.0, 1e-12);
    EXPECT_NEAR(to_dimensionless(u, Quantity::frequency, 200.0), 2.0, 1e-15);
    EXPECT_THROW(to_dimensionless(u, Quantity::time, 0.0), std::invalid_argument);
    EXPECT_THROW(to_dimensionless(PhysicalUnits{-1.0}, Quantity::time, 1.0), std::invalid_argument);
}

TEST(Config, DefaultRoundTrip) {
    RunConfig c;
    EXPECT_EQ(config_from_json(to_json(c)), c);
}

TEST(Config, FullRoundTrip) {
    RunConfig c;
    c.experiment = ExperimentKind::optimize;
    c.protocol = default_spec(ProtocolName::ghz4);
    c.protocol.params.ground_coupling = GroundCouplingMode::retarget;
    c.protocol.params.lifetime_us = 300.0;
    c.physical_units = PhysicalConfig{50.0, 200.0, 0.7};
    c.output_dir = "somewhere";
    c.seed = 0xffffffffffffull;
    c.integrator.rel_tol = 1e-8;
    c.integrator.max_step = 3.0;
    c.convention = FidelityConvention::paper_squared;
    c.options.v_grid = {0.1, 0.3};
    c.options.bounds = {{0.1, 0.4}, {0.2, 0.5}};
    c.options.init = {0.2, 0.3};
    c.options.shape_params = false;
    c.options.baselines = {"pi_pulse"};
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Config, MinimalDocumentUsesProtocolDefaults) {
    const auto c = parse_config(R"({"schema_version": 1, "protocol": {"name": "relay_bell3"}})");
    EXPECT_EQ(c.protocol, default_spec(ProtocolName::relay_bell3));
    EXPECT_EQ(c.experiment, ExperimentKind::simulate);
    EXPECT_FALSE(c.seed.has_value());
}

TEST(Config, ExplicitAmplitudeOverridesRatio) {
    const auto c = parse_config(R"({"schema_version": 1, "protocol": {"name": "ghz4", "omega_max": 0.2}})");
    EXPECT_EQ(c.protocol.params.effective_omega_max(), 0.2);
    EXPECT_NEAR(c.protocol.params.effective_delta_max(), 1.13 / 4.05, 1e-15);
}

TEST(Config, ErrorsNameTheField) {
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell9"}})"), "protocol.name");
    EXPECT_EQ(config_error_field(R"({"protocol": {"name": "bell2"}})"), "schema_version");
    EXPECT_EQ(config_error_field(R"({"schema_version": 2, "protocol": {"name": "bell2"}})"), "schema_version");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1})"), "protocol");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {}})"), "protocol.name");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell2", "V0": "big"}})"), "protocol.V0");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell2", "V0": -2}})"), "protocol.V0");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell2", "preset": "K"}})"), "protocol.preset");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell2"}, "bogus": 1})"), "bogus");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell2"}, "experiment": "fly"})"), "experiment");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell2"}, "physical_units": {"omega0_over_2pi_MHz": 0}})"),
              "physical_units.omega0_over_2pi_MHz");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell2"}, "options": {"bounds": [[1]]}})"),
              "options.bounds");
    EXPECT_EQ(config_error_field(R"({"schema_version": 1, "protocol": {"name": "bell2"}, "integrator": {"rel_tol": -1}})"),
              "integrator");
    EXPECT_EQ(config_error_field("{not json"), "<root>");
}

TEST(Config, PhysicalUnitsResolve) {
    RunConfig c;
    c.physical_units = PhysicalConfig{100.0, 200.0, 0.5};
    const auto spec = resolved_protocol(c);
    EXPECT_NEAR(spec.params.sweep_width, 2 * std::numbers::pi * 100.0 * 0.5 / 2, 1e-12);
    EXPECT_EQ(spec.params.lifetime_us, 200.0);
    c.protocol = default_spec(ProtocolName::relay_bell3);
    c.physical_units = PhysicalConfig{100.0, std::nullopt, 81.0 / 100.0};
    EXPECT_NEAR(resolved_protocol(c).params.sweep_width, kRelaySweepWidth, 1e-9);
}

TEST(Artifacts, AtomicWriteLeavesNoTemporary) {
    const auto dir = scratch("atomic");
    fs::create_directories(dir);
    write_atomic(dir / "a.txt", "hello\n");
    write_atomic(dir / "a.txt", "again\n");
    EXPECT_EQ(slurp(dir / "a.txt"), "again\n");
    EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
    EXPECT_THROW(write_atomic(dir / "missing" / "b.txt", "x"), std::runtime_error);
}

TEST(Artifacts, SweepCsvLongFormat) {
    SweepResult r;
    r.axes = {{"omega_scale", {0.9, 1.0}}, {"delta_scale", {1.0, 1.1, 1.2}}};
    r.mean = {1, 2, 3, 4, 5, 6};
    for (std::size_t i = 0; i < 6; ++i) r.rows.push_back({i, 0, 0.5 + 0.01 * static_cast<double>(i)});
    const auto csv = sweep_csv(r);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "omega_scale,delta_scale,sample_index,fidelity");
    std::getline(in, line);
    EXPECT_EQ(line, "0.90000000000000002,1,0,0.5");
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 6);
    // Paper convention squares the reported value.
    EXPECT_NE(sweep_csv(r, FidelityConvention::paper_squared).find(",0,0.25\n"), std::string::npos);
}

TEST(Run, SimulateWritesArtifacts) {
    RunConfig c;
    c.output_dir = scratch("simulate").string();
    c.options.checkpoints = 11;
    std::ostringstream err;
    ASSERT_EQ(run(c, err), kExitOk) << err.str();
    const fs::path out(c.output_dir);
    for (const char* f : {"manifest.json", "result.json", "populations.csv", "waveform.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto result = nlohmann::json::parse(slurp(out / "result.json"));
    EXPECT_GE(result.at("fidelity").get<double>(), 0.999);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest.at("tool"), "rydrap");
    EXPECT_EQ(config_from_json(manifest.at("config")), c);
    const auto pops = slurp(out / "populations.csv");
    EXPECT_EQ(pops.substr(0, pops.find('\n')), "t,basis,ryd_count,population");
    EXPECT_EQ(std::count(pops.begin(), pops.end(), '\n'), 1 + 11 * 9);
}

TEST(Run, GhzReportsCanonicalFidelity) {
    RunConfig c;
    c.protocol = default_spec(ProtocolName::ghz4);
    c.protocol.params.preset = DissipationPreset::none;
    c.output_dir = scratch("ghz").string();
    c.options.checkpoints = 3;
    ASSERT_EQ(run(c), kExitOk);
    const auto result = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "result.json"));
    EXPECT_NEAR(result.at("fidelity_canonical_ghz").get<double>(), result.at("fidelity").get<double>(), 1e-12);
}

TEST(Run, ExitCodes) {
    RunConfig c;
    c.experiment = ExperimentKind::montecarlo;
    c.output_dir = scratch("noseed").string();
    std::ostringstream err;
    EXPECT_EQ(run(c, err), kExitConfigError);
    EXPECT_NE(err.str().find("seed"), std::string::npos);

    RunConfig tight;
    tight.output_dir = scratch("budget").string();
    tight.integrator.max_steps = 5;
    std::ostringstream err2;
    EXPECT_EQ(run(tight, err2), kExitIntegrationError);
    EXPECT_NE(err2.str().find("integration error"), std::string::npos);
}

TEST(Run, MontecarloIsByteReproducible) {
    RunConfig c;
    c.experiment = ExperimentKind::montecarlo;
    c.protocol = default_spec(ProtocolName::w3);
    c.seed = 12345;
    c.options.sigma_grid = {0.0, 0.05};
    c.options.n_samples = 3;
    c.output_dir = scratch("mc_a").string();
    ASSERT_EQ(run(c), kExitOk);
    const auto a = slurp(fs::path(c.output_dir) / "montecarlo.csv");
    c.output_dir = scratch("mc_b").string();
    ASSERT_EQ(run(c), kExitOk);
    EXPECT_EQ(a, slurp(fs::path(c.output_dir) / "montecarlo.csv"));
    EXPECT_EQ(a.substr(0, a.find('\n')), "sigma,sample_index,fidelity");
}

#ifdef RYDRAP_CLI_PATH
TEST(Cli, DeterministicCsvAndConfigErrors) {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "mc.json");
        cfg << R"({"schema_version": 1, "experiment": "montecarlo", "protocol": {"name": "bell2"},
                  "options": {"sigma_grid": [0.03], "n_samples": 3}})";
    }
    const std::string cli = RYDRAP_CLI_PATH;
    auto invoke = [&](const std::string& args) { return std::system((cli + " " + args + " 2>/dev/null").c_str()); };
    const std::string cfg = (dir / "mc.json").string();
    ASSERT_EQ(invoke("montecarlo --config " + cfg + " --seed 9 --out " + (dir / "a").string()), 0);
    ASSERT_EQ(invoke("montecarlo --config " + cfg + " --seed 9 --out " + (dir / "b").string()), 0);
    EXPECT_EQ(slurp(dir / "a" / "montecarlo.csv"), slurp(dir / "b" / "montecarlo.csv"));

    const int bad = invoke("simulate --protocol nonsense --out " + (dir / "c").string());
    ASSERT_TRUE(WIFEXITED(bad));
    EXPECT_EQ(WEXITSTATUS(bad), kExitConfigError);
    const int noseed = invoke("montecarlo --config " + cfg + " --out " + (dir / "d").string());
    EXPECT_EQ(WEXITSTATUS(noseed), kExitConfigError);

    ASSERT_EQ(invoke("waveform --protocol ghz4 --points 11 --out " + (dir / "wf.csv").string()), 0);
    const auto wf = slurp(dir / "wf.csv");
    EXPECT_EQ(std::count(wf.begin(), wf.end(), '\n'), 12);
}
#endif
