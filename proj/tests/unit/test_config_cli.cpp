#include "rbsde/cli.hpp"
#include "rbsde/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rbsde;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("rbsde_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

int run_command(const std::string& command, const std::string& config, std::string* err_text = nullptr,
                std::optional<int> threads = std::nullopt, std::optional<std::string> out = std::nullopt) {
    CliArgs a;
    a.command = command;
    a.config_path = config;
    a.threads = threads;
    a.out_dir = out;
    std::ostringstream os, es;
    int code = run(a, os, es);
    if (err_text) *err_text = es.str();
    return code;
}

}  // namespace

TEST(Config, MinimalConfigTakesDefaults) {
    RunConfig c = parse_config("problem:\n  preset: constant_linear\n");
    EXPECT_EQ(c.preset, "constant_linear");
    EXPECT_EQ(c.route, Route::automatic);
    EXPECT_EQ(c.solver.kappa_L, -2.0);
    EXPECT_EQ(c.out_dir, "out");
}

TEST(Config, UnknownKeysAreRejectedAtEveryLevel) {
    EXPECT_THROW(parse_config("problem: {preset: zero_linear}\nsolvr: {}\n"), ConfigError);
    EXPECT_THROW(parse_config("problem: {preset: zero_linear, colour: red}\n"), ConfigError);
    EXPECT_THROW(parse_config("problem: {preset: zero_linear}\nsolver: {mesh: {m: 3}}\n"), ConfigError);
    EXPECT_THROW(parse_config("problem: {preset: zero_linear}\nsolver: {bsde: {mode: L3}}\n"), ConfigError);
    EXPECT_THROW(parse_config("problem: {preset: zero_linear}\nsolver: {route: sideways}\n"), ConfigError);
}

TEST(Config, InvalidValuesAreRejected) {
    EXPECT_THROW(parse_config("problem: {preset: zero_linear}\nsolver: {n_paths: 0}\n"), ConfigError);
    EXPECT_THROW(parse_config("problem: {preset: zero_linear}\nsolver: {dt: abc}\n"), ConfigError);
    EXPECT_THROW(parse_config("problem: {preset: zero_linear}\nsolver: {bsde: {horizons: [10, 5]}}\n"), ConfigError);
    EXPECT_THROW(parse_config("solver: {n_paths: 10}\n"), ConfigError);
    EXPECT_THROW(parse_config("problem: [1, 2"), ConfigError);
}

TEST(Config, JsonRoundTripIsExact) {
    RunConfig c = parse_config(
        "command: solve\n"
        "problem:\n  preset: singular_bhat\n  params: {amplitude: 0.04}\n  points: [[0.1, 0.2]]\n"
        "  domain: {kind: box, lo: [-1, -1], hi: [1, 2]}\n  coefficients: {a: 2.0, Q: -0.5}\n"
        "solver:\n  route: mixed\n  n_paths: 123\n  dt: 0.00123456789\n  seed: 9\n"
        "  bsde: {horizons: [3, 6], mode: L1}\n  mesh: {n: 17}\n"
        "convergence: {dt_values: [0.01, 0.005]}\n");
    std::string j = config_to_json(c);
    RunConfig back = parse_config(j);
    EXPECT_EQ(config_to_json(back), j);
    EXPECT_EQ(back.solver.mc.dt, 0.00123456789);
    EXPECT_EQ(back.route, Route::mixed);
    ASSERT_TRUE(back.bsde_mode.has_value());
    EXPECT_EQ(*back.bsde_mode, BsdeMode::L1);
    ASSERT_TRUE(back.domain.has_value());
    EXPECT_EQ(back.domain->kind, DomainKind::box);
}

TEST(Config, ManifestEmbedsAReplayableConfig) {
    RunConfig c = parse_config("problem: {preset: quadratic_linear}\nsolver: {n_paths: 77}\n");
    std::string manifest = "{\"manifest_version\": 1, \"command\": \"solve\", \"config\": " + config_to_json(c) + "}";
    RunConfig back = parse_config(manifest);
    EXPECT_EQ(back.solver.mc.n_paths, 77);
    EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, ShippedExampleConfigsParse) {
    for (const auto& entry : fs::directory_iterator(RBSDE_SOURCE_DIR "/configs")) {
        if (entry.path().extension() != ".yaml") continue;
        EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    }
}

TEST(Cli, CommandLineOverridesPropagate) {
    RunConfig c = parse_config("problem: {preset: zero_linear}\n");
    CliArgs a;
    a.command = "solve";
    a.seed = 99;
    a.threads = 3;
    a.out_dir = "elsewhere";
    RunConfig e = effective_config(c, a);
    EXPECT_EQ(e.solver.mc.seed, 99u);
    EXPECT_EQ(e.solver.bsde.mc.seed, 99u);
    EXPECT_EQ(e.solver.gauge_mc.threads, 3);
    EXPECT_EQ(e.out_dir, "elsewhere");
}

TEST(Cli, ProblemOverridesReplaceDomainAndCoefficients) {
    RunConfig c = parse_config(
        "problem: {preset: constant_linear, domain: {kind: ball, center: [0, 0], radius: 2}, "
        "coefficients: {a: 2.0, Q: -3.0}}\n");
    Preset p = build_problem(c);
    EXPECT_NEAR(p.spec.dom.radius, 2.0, 1e-15);
    EXPECT_NEAR(p.spec.coeffs.Q(make_vec({0.0, 0.0})), -3.0, 1e-15);
    EXPECT_NEAR(p.spec.coeffs.A(make_vec({0.0, 0.0}))(0, 0), 2.0, 1e-15);
    EXPECT_FALSE(p.exact.has_value());
}

TEST(Cli, SelftestPasses) { EXPECT_EQ(run_command("selftest", ""), kExitOk); }

TEST(Cli, MissingOrBrokenConfigExitsWithConfigCode) {
    fs::path d = scratch_dir("bad");
    std::string err;
    EXPECT_EQ(run_command("solve", (d / "absent.yaml").string(), &err), kExitConfig);
    EXPECT_NE(err.find("ConfigError"), std::string::npos);
    fs::path bad = write_file(d / "bad.yaml", "problem: {preset: constant_linear}\nsolver: {npaths: 3}\n");
    EXPECT_EQ(run_command("solve", bad.string()), kExitConfig);
    EXPECT_EQ(run_command("solve", ""), kExitConfig);
}

TEST(Cli, DivergentGaugeExitsWithHypothesisCode) {
    fs::path d = scratch_dir("qzero");
    std::string err;
    EXPECT_EQ(run_command("diagnose", RBSDE_SOURCE_DIR "/configs/q_zero.yaml", &err, 1, d.string()), kExitHypothesis);
    EXPECT_NE(err.find("GaugeDiverges"), std::string::npos);
    EXPECT_TRUE(fs::exists(d / "manifest.json"));
}

TEST(Cli, SolveOutputsAreIndependentOfWorkerCount) {
    fs::path d = scratch_dir("threads");
    fs::path cfg = write_file(d / "c.yaml",
                              "problem: {preset: quadratic_linear, points: [[0.0, 0.0], [0.5, 0.0]]}\n"
                              "solver: {route: linear, n_paths: 300, dt: 0.004, T_max: 4, "
                              "gauge: {n_paths: 200, dt: 0.004, T_max: 4}}\n");
    ASSERT_EQ(run_command("solve", cfg.string(), nullptr, 1, (d / "t1").string()), kExitOk);
    ASSERT_EQ(run_command("solve", cfg.string(), nullptr, 4, (d / "t4").string()), kExitOk);
    std::string one = slurp(d / "t1" / "solution.csv");
    EXPECT_FALSE(one.empty());
    EXPECT_EQ(one, slurp(d / "t4" / "solution.csv"));
    EXPECT_EQ(slurp(d / "t1" / "diagnostics.csv"), slurp(d / "t4" / "diagnostics.csv"));
    // Replaying the manifest reproduces the run.
    ASSERT_EQ(run_command("solve", (d / "t1" / "manifest.json").string(), nullptr, 2, (d / "replay").string()),
              kExitOk);
    EXPECT_EQ(one, slurp(d / "replay" / "solution.csv"));
}
