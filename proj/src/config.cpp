#include "rbsde/config.hpp"

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace rbsde {

namespace {

void check_keys(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed) {
    if (!n.IsMap()) throw ConfigError("'" + where + "' must be a mapping");
    for (const auto& kv : n) {
        auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in '" + where + "'");
    }
}

template <class T>
T get(const YAML::Node& n, const std::string& key, const std::string& where) {
    try {
        return n[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("bad value for '" + where + "." + key + "'");
    }
}

template <class T>
void read(const YAML::Node& n, const std::string& key, const std::string& where, T& out) {
    if (n[key]) out = get<T>(n, key, where);
}

void read_mc(const YAML::Node& n, const std::string& where, McSettings& mc) {
    read(n, "n_paths", where, mc.n_paths);
    read(n, "dt", where, mc.dt);
    read(n, "seed", where, mc.seed);
    if (n["threads"]) read(n, "threads", where, mc.threads);
}

BsdeMode parse_mode(const std::string& s) {
    if (s == "L1") return BsdeMode::L1;
    if (s == "L2") return BsdeMode::L2;
    throw ConfigError("bsde mode must be L1 or L2, got '" + s + "'");
}

Route parse_route(const std::string& s) {
    if (s == "auto") return Route::automatic;
    if (s == "linear") return Route::linear;
    if (s == "semilinear") return Route::semilinear;
    if (s == "bsde") return Route::bsde;
    if (s == "mixed") return Route::mixed;
    throw ConfigError("unknown route '" + s + "'");
}

void parse_problem(const YAML::Node& p, RunConfig& c) {
    check_keys(p, "problem", {"preset", "params", "points", "domain", "coefficients"});
    if (!p["preset"]) throw ConfigError("problem.preset is required");
    c.preset = get<std::string>(p, "preset", "problem");
    if (p["params"]) {
        if (!p["params"].IsMap()) throw ConfigError("'problem.params' must be a mapping");
        for (const auto& kv : p["params"]) c.params[kv.first.as<std::string>()] = get<double>(p["params"], kv.first.as<std::string>(), "problem.params");
    }
    if (p["points"]) {
        c.points.clear();
        for (const auto& pt : p["points"]) {
            try {
                c.points.push_back(pt.as<std::vector<double>>());
            } catch (const YAML::Exception&) {
                throw ConfigError("problem.points must be a list of coordinate lists");
            }
        }
    }
    if (p["domain"]) {
        const YAML::Node& d = p["domain"];
        check_keys(d, "problem.domain", {"kind", "center", "radius", "lo", "hi"});
        DomainOverride o;
        std::string kind = d["kind"] ? get<std::string>(d, "kind", "problem.domain") : "ball";
        if (kind == "ball") o.kind = DomainKind::ball;
        else if (kind == "box") o.kind = DomainKind::box;
        else throw ConfigError("problem.domain.kind must be ball or box");
        read(d, "center", "problem.domain", o.center);
        read(d, "radius", "problem.domain", o.radius);
        read(d, "lo", "problem.domain", o.lo);
        read(d, "hi", "problem.domain", o.hi);
        c.domain = o;
    }
    if (p["coefficients"]) {
        const YAML::Node& k = p["coefficients"];
        check_keys(k, "problem.coefficients", {"a", "Q"});
        if (k["a"]) c.a_scale = get<double>(k, "a", "problem.coefficients");
        if (k["Q"]) c.q_constant = get<double>(k, "Q", "problem.coefficients");
    }
}

void parse_solver(const YAML::Node& n, RunConfig& c) {
    const std::string w = "solver";
    check_keys(n, w, {"route", "n_paths", "dt", "seed", "threads", "T_max", "kappa_L", "u1_sign", "check_gauge",
                      "gauge", "mesh", "picard", "eps_cfg", "v_resolution", "bsde"});
    SolverSettings& s = c.solver;
    if (n["route"]) c.route = parse_route(get<std::string>(n, "route", w));
    read_mc(n, w, s.mc);
    read(n, "T_max", w, s.T_max);
    read(n, "kappa_L", w, s.kappa_L);
    read(n, "u1_sign", w, s.u1_sign);
    read(n, "check_gauge", w, s.check_gauge);
    read(n, "eps_cfg", w, s.eps_cfg);
    if (n["gauge"]) {
        const YAML::Node& g = n["gauge"];
        check_keys(g, "solver.gauge", {"n_paths", "dt", "seed", "T_max"});
        read(g, "n_paths", "solver.gauge", s.gauge_mc.n_paths);
        read(g, "dt", "solver.gauge", s.gauge_mc.dt);
        read(g, "seed", "solver.gauge", s.gauge_mc.seed);
        read(g, "T_max", "solver.gauge", s.gauge_T_max);
    }
    if (n["mesh"]) {
        const YAML::Node& m = n["mesh"];
        check_keys(m, "solver.mesh", {"n", "paths", "dt", "T_max"});
        read(m, "n", "solver.mesh", s.mesh_n);
        read(m, "paths", "solver.mesh", s.mesh_paths);
        read(m, "dt", "solver.mesh", s.mesh_dt);
        read(m, "T_max", "solver.mesh", s.mesh_T_max);
    }
    if (n["picard"]) {
        const YAML::Node& p = n["picard"];
        check_keys(p, "solver.picard", {"tol", "max_iterations"});
        read(p, "tol", "solver.picard", s.picard_tol);
        read(p, "max_iterations", "solver.picard", s.picard_max);
    }
    if (n["v_resolution"]) {
        const YAML::Node& v = n["v_resolution"];
        check_keys(v, "solver.v_resolution", {"nr", "nt", "n"});
        read(v, "nr", "solver.v_resolution", s.v_resolution.nr);
        read(v, "nt", "solver.v_resolution", s.v_resolution.nt);
        read(v, "n", "solver.v_resolution", s.v_resolution.n);
    }
    if (n["bsde"]) {
        const YAML::Node& b = n["bsde"];
        const std::string wb = "solver.bsde";
        check_keys(b, wb, {"n_paths", "dt", "seed", "stride", "basis_size", "horizons", "tol", "mode"});
        read_mc(b, wb, s.bsde.mc);
        read(b, "stride", wb, s.bsde.stride);
        read(b, "basis_size", wb, s.bsde.basis_size);
        read(b, "horizons", wb, s.bsde.horizons);
        read(b, "tol", wb, s.bsde.tol);
        if (b["mode"]) c.bsde_mode = parse_mode(get<std::string>(b, "mode", wb));
    }
}

void positive(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what + " must be positive");
}

}  // namespace

std::string route_name(Route r) {
    switch (r) {
        case Route::automatic: return "auto";
        case Route::linear: return "linear";
        case Route::semilinear: return "semilinear";
        case Route::bsde: return "bsde";
        case Route::mixed: return "mixed";
    }
    return "auto";
}

RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.what());
    }
    if (root.IsMap() && root["manifest_version"]) {
        if (!root["config"]) throw ConfigError("manifest without a config object");
        YAML::Node inner = root["config"];
        root.reset(inner);
    }
    check_keys(root, "config", {"command", "problem", "solver", "convergence", "output"});
    RunConfig c;
    if (root["command"]) c.command = get<std::string>(root, "command", "config");
    if (!root["problem"]) throw ConfigError("config needs a 'problem' section");
    parse_problem(root["problem"], c);
    if (root["solver"]) parse_solver(root["solver"], c);
    if (root["convergence"]) {
        const YAML::Node& v = root["convergence"];
        check_keys(v, "convergence", {"dt_values", "n_paths_values"});
        read(v, "dt_values", "convergence", c.conv_dt);
        read(v, "n_paths_values", "convergence", c.conv_n);
    }
    if (root["output"]) {
        const YAML::Node& o = root["output"];
        check_keys(o, "output", {"dir"});
        read(o, "dir", "output", c.out_dir);
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate(const RunConfig& c) {
    const SolverSettings& s = c.solver;
    positive(s.mc.n_paths > 0, "solver.n_paths");
    positive(s.mc.dt > 0.0, "solver.dt");
    positive(s.T_max > 0.0, "solver.T_max");
    if (s.mc.threads < 0) throw ConfigError("solver.threads must be nonnegative");
    positive(s.gauge_mc.n_paths > 0, "solver.gauge.n_paths");
    positive(s.gauge_mc.dt > 0.0, "solver.gauge.dt");
    if (!(s.gauge_T_max >= 1.0)) throw ConfigError("solver.gauge.T_max must be at least 1");
    if (s.mesh_n < 3) throw ConfigError("solver.mesh.n must be at least 3");
    positive(s.mesh_paths > 0, "solver.mesh.paths");
    positive(s.mesh_dt > 0.0, "solver.mesh.dt");
    positive(s.mesh_T_max > 0.0, "solver.mesh.T_max");
    positive(s.picard_tol > 0.0, "solver.picard.tol");
    positive(s.picard_max > 0, "solver.picard.max_iterations");
    positive(s.eps_cfg > 0.0, "solver.eps_cfg");
    if (s.v_resolution.nr < 2 || s.v_resolution.nt < 4 || s.v_resolution.n < 3)
        throw ConfigError("solver.v_resolution is too coarse");
    positive(s.bsde.mc.n_paths > 0, "solver.bsde.n_paths");
    positive(s.bsde.mc.dt > 0.0, "solver.bsde.dt");
    positive(s.bsde.stride > 0, "solver.bsde.stride");
    positive(s.bsde.basis_size > 0, "solver.bsde.basis_size");
    positive(s.bsde.tol > 0.0, "solver.bsde.tol");
    if (s.bsde.horizons.empty()) throw ConfigError("solver.bsde.horizons is empty");
    for (double h : s.bsde.horizons) positive(h > 0.0, "solver.bsde.horizons entries");
    if (!std::is_sorted(s.bsde.horizons.begin(), s.bsde.horizons.end()))
        throw ConfigError("solver.bsde.horizons must increase");
    for (double d : c.conv_dt) positive(d > 0.0, "convergence.dt_values entries");
    for (long n : c.conv_n) positive(n > 0, "convergence.n_paths_values entries");
    if (c.a_scale) positive(*c.a_scale > 0.0, "problem.coefficients.a");
    if (c.domain) {
        const DomainOverride& d = *c.domain;
        if (d.kind == DomainKind::ball) {
            positive(d.radius > 0.0, "problem.domain.radius");
            if (d.center.empty() || d.center.size() > kMaxDim) throw ConfigError("problem.domain.center has bad size");
        } else {
            if (d.lo.size() != d.hi.size() || d.lo.empty() || d.lo.size() > kMaxDim)
                throw ConfigError("problem.domain.lo/hi have bad sizes");
            for (std::size_t a = 0; a < d.lo.size(); ++a)
                if (!(d.hi[a] > d.lo[a])) throw ConfigError("problem.domain.hi must exceed lo");
        }
    }
}

std::string config_to_json(const RunConfig& c) {
    using nlohmann::json;
    const SolverSettings& s = c.solver;
    json problem = {{"preset", c.preset}};
    if (!c.params.empty()) problem["params"] = c.params;
    if (!c.points.empty()) problem["points"] = c.points;
    if (c.domain) {
        const DomainOverride& d = *c.domain;
        json dj = {{"kind", d.kind == DomainKind::box ? "box" : "ball"}};
        if (d.kind == DomainKind::box) {
            dj["lo"] = d.lo;
            dj["hi"] = d.hi;
        } else {
            dj["center"] = d.center;
            dj["radius"] = d.radius;
        }
        problem["domain"] = dj;
    }
    if (c.a_scale || c.q_constant) {
        json k = json::object();
        if (c.a_scale) k["a"] = *c.a_scale;
        if (c.q_constant) k["Q"] = *c.q_constant;
        problem["coefficients"] = k;
    }
    json bsde = {{"n_paths", s.bsde.mc.n_paths}, {"dt", s.bsde.mc.dt},         {"seed", s.bsde.mc.seed},
                 {"stride", s.bsde.stride},      {"basis_size", s.bsde.basis_size},
                 {"horizons", s.bsde.horizons},  {"tol", s.bsde.tol}};
    if (c.bsde_mode) bsde["mode"] = *c.bsde_mode == BsdeMode::L1 ? "L1" : "L2";
    json solver = {
        {"route", route_name(c.route)},
        {"n_paths", s.mc.n_paths},
        {"dt", s.mc.dt},
        {"seed", s.mc.seed},
        {"threads", s.mc.threads},
        {"T_max", s.T_max},
        {"kappa_L", s.kappa_L},
        {"u1_sign", s.u1_sign},
        {"check_gauge", s.check_gauge},
        {"gauge", {{"n_paths", s.gauge_mc.n_paths}, {"dt", s.gauge_mc.dt}, {"seed", s.gauge_mc.seed}, {"T_max", s.gauge_T_max}}},
        {"mesh", {{"n", s.mesh_n}, {"paths", s.mesh_paths}, {"dt", s.mesh_dt}, {"T_max", s.mesh_T_max}}},
        {"picard", {{"tol", s.picard_tol}, {"max_iterations", s.picard_max}}},
        {"eps_cfg", s.eps_cfg},
        {"v_resolution", {{"nr", s.v_resolution.nr}, {"nt", s.v_resolution.nt}, {"n", s.v_resolution.n}}},
        {"bsde", bsde},
    };
    json root = {{"problem", problem},
                 {"solver", solver},
                 {"convergence", {{"dt_values", c.conv_dt}, {"n_paths_values", c.conv_n}}},
                 {"output", {{"dir", c.out_dir}}}};
    if (!c.command.empty()) root["command"] = c.command;
    return root.dump(2);
}

}  // namespace rbsde
