#pragma once

#include "rbsde/pde.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rbsde {

enum class Route { automatic, linear, semilinear, bsde, mixed };

struct DomainOverride {
    DomainKind kind = DomainKind::ball;
    std::vector<double> center, lo, hi;
    double radius = 1.0;
};

struct RunConfig {
    std::string command;  // solve, convergence, diagnose, calibrate, selftest
    std::string preset;
    std::map<std::string, double> params;
    std::optional<DomainOverride> domain;
    std::optional<double> a_scale;  // A = a I
    std::optional<double> q_constant;
    std::vector<std::vector<double>> points;  // empty: the preset's stencil
    Route route = Route::automatic;
    std::optional<BsdeMode> bsde_mode;  // empty: the preset's choice
    SolverSettings solver;
    std::vector<double> conv_dt = {4e-3, 2e-3, 1e-3};
    std::vector<long> conv_n = {2500, 10000, 40000};
    std::string out_dir = "out";
};

// Strict YAML parsing: unknown keys and nonpositive numeric settings throw ConfigError.
// A run manifest is accepted too; its embedded "config" object is used.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

void validate(const RunConfig& c);

// Effective configuration as JSON text; parse_config reads it back unchanged.
std::string config_to_json(const RunConfig& c);

std::string route_name(Route r);

}  // namespace rbsde
