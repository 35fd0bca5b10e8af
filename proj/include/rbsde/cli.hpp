#pragma once

#include "rbsde/config.hpp"
#include "rbsde/presets.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace rbsde {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // selftest failures, unexpected errors
inline constexpr int kExitConfig = 2;
inline constexpr int kExitHypothesis = 3;
inline constexpr int kExitNumerical = 4;

struct CliArgs {
    std::string command;
    std::string config_path;  // optional for calibrate and selftest
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
};

// Preset with the config's domain, coefficient and point overrides applied.
Preset build_problem(const RunConfig& c);

// Applies command-line overrides and propagates seed and worker count to every Monte-Carlo stage.
RunConfig effective_config(RunConfig c, const CliArgs& a);

// Runs one command; exceptions are mapped to exit codes with the error named on `err`.
int run(const CliArgs& a, std::ostream& out, std::ostream& err);

// `<binary> <command> --config <path> [--seed S] [--out DIR] [--threads T]`
int run_cli(int argc, char** argv);

}  // namespace rbsde
