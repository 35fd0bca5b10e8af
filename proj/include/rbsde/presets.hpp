#pragma once

#include "rbsde/bsde.hpp"
#include "rbsde/pde.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rbsde {

struct Preset {
    std::string name;
    std::string description;
    ProblemSpec spec;
    std::optional<SmoothField> exact;  // known solution, when available
    std::vector<Vec> points;           // default evaluation points
    BsdeMode bsde_mode = BsdeMode::L2;
    bool pde_route = true;             // false: the shifted potential Q - d1 does not decay; BSDE route only
};

// Named problem instances on the unit disk. `params` overrides documented numeric knobs; unknown keys
// throw ConfigError.
Preset make_preset(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> preset_names();

// Center plus the four points at distance 0.5 along the axes.
std::vector<Vec> five_point_stencil(const Vec& center, double r);

}  // namespace rbsde
