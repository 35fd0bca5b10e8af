#include "rbsde/cli.hpp"

#include "rbsde/parallel.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace rbsde {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Vec to_vec(const std::vector<double>& v) {
    Vec x(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<int>(i)) = v[i];
    return x;
}

struct Outcome {
    std::vector<Vec> points;
    std::vector<Estimate> values;
    std::vector<std::pair<std::string, double>> diagnostics;
};

void write_solution_csv(const fs::path& path, const Outcome& o) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    const int d = o.points.empty() ? 0 : static_cast<int>(o.points.front().size());
    for (int a = 0; a < d; ++a) f << "point_x" << a << ',';
    f << "value,stderr,n_paths,t_max\n";
    for (std::size_t p = 0; p < o.points.size(); ++p) {
        for (int a = 0; a < d; ++a) f << fmt(o.points[p](a)) << ',';
        const Estimate& e = o.values[p];
        f << fmt(e.value) << ',' << fmt(e.std_error) << ',' << e.n_paths << ',' << fmt(e.t_max) << '\n';
    }
}

void write_diagnostics_csv(const fs::path& path, const std::vector<std::pair<std::string, double>>& diags) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << "key,value\n";
    for (const auto& [k, v] : diags) f << k << ',' << fmt(v) << '\n';
}

void write_manifest(const fs::path& dir, const RunConfig& c, const std::string& command,
                    const std::vector<std::pair<std::string, double>>& diags, double wall, int exit_code,
                    const std::vector<std::string>& outputs, const std::string& error = {},
                    const std::vector<std::pair<std::string, double>>& timings = {}) {
    json d = json::object();
    for (const auto& [k, v] : diags) d[k] = std::isfinite(v) ? json(v) : json(fmt(v));
    json t = json::object();
    for (const auto& [k, v] : timings) t[k] = v;
    json m = {{"manifest_version", 1},
              {"command", command},
              {"config", json::parse(config_to_json(c))},
              {"seed", c.solver.mc.seed},
              {"kappa_L", c.solver.kappa_L},
              {"u1_sign", c.solver.u1_sign},
              {"diagnostics", d},
              {"outputs", outputs},
              {"exit_code", exit_code},
              {"wall_time_s", wall},
              {"timings_s", t}};
    if (!error.empty()) m["error"] = error;
    std::ofstream f(dir / "manifest.json");
    f << m.dump(2) << '\n';
}

BsdeMode mode_for(const RunConfig& c, const Preset& p) { return c.bsde_mode ? *c.bsde_mode : p.bsde_mode; }

Route resolve_route(const RunConfig& c, const Preset& p) {
    if (c.route != Route::automatic) return c.route;
    switch (p.spec.form) {
        case ProblemForm::linear: return Route::linear;
        case ProblemForm::semilinear: return p.pde_route ? Route::semilinear : Route::bsde;
        case ProblemForm::mixed_full: return Route::mixed;
    }
    return Route::linear;
}

void append(std::vector<std::pair<std::string, double>>& to, const std::vector<std::pair<std::string, double>>& from) {
    to.insert(to.end(), from.begin(), from.end());
}

Outcome solve_problem(const RunConfig& c, const Preset& p, const std::vector<Vec>& points) {
    Outcome o;
    o.points = points;
    const Route route = resolve_route(c, p);
    const ProblemForm form = p.spec.form;
    auto form_error = [&](const char* r) {
        throw ConfigError(std::string("route '") + r + "' does not apply to preset '" + p.name + "'");
    };
    o.diagnostics.emplace_back("route", static_cast<double>(route));
    if (route == Route::linear) {
        if (form != ProblemForm::linear) form_error("linear");
        SolutionField f = solve_linear(p.spec, points, c.solver);
        o.values = f.values;
        append(o.diagnostics, f.diagnostics);
    } else if (route == Route::semilinear) {
        if (form != ProblemForm::semilinear) form_error("semilinear");
        SolutionField f = solve_semilinear(p.spec, points, c.solver);
        o.values = f.values;
        append(o.diagnostics, f.diagnostics);
        for (std::size_t m = 0; m < f.picard_history.size(); ++m)
            o.diagnostics.emplace_back("picard_change_" + std::to_string(m + 1), f.picard_history[m]);
    } else if (route == Route::bsde) {
        if (form == ProblemForm::linear) form_error("bsde");
        if (form == ProblemForm::mixed_full) {
            SolverSettings s = c.solver;
            s.use_bsde_route = true;
            SolutionField f = solve_mixed_full(p.spec, points, s);
            o.values = f.values;
            append(o.diagnostics, f.diagnostics);
            return o;
        }
        BsdeProblem bp = semilinear_bsde(p.spec, c.solver, mode_for(c, p));
        BsdeSettings bs = c.solver.bsde;
        o.diagnostics.emplace_back("bsde_mode_L1", bp.mode == BsdeMode::L1 ? 1.0 : 0.0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            bs.mc.seed = c.solver.bsde.mc.seed + i;
            BsdeSolution sol = solve_infinite_horizon(bp, p.spec.dom, p.spec.coeffs, points[i], bs);
            o.values.push_back(sol.y0);
            std::string tag = "p" + std::to_string(i) + "_";
            o.diagnostics.emplace_back(tag + "horizon", sol.horizon);
            o.diagnostics.emplace_back(tag + "converged", sol.converged ? 1.0 : 0.0);
            o.diagnostics.emplace_back(tag + "decay_residual", sol.decay_residual);
            o.diagnostics.emplace_back(tag + "discount_rate", sol.discount_rate);
        }
    } else {
        if (form != ProblemForm::mixed_full) form_error("mixed");
        SolutionField f = solve_mixed_full(p.spec, points, c.solver);
        o.values = f.values;
        append(o.diagnostics, f.diagnostics);
    }
    return o;
}

int cmd_solve(const RunConfig& c, const fs::path& out, std::ostream& os,
              std::vector<std::pair<std::string, double>>& diags) {
    Preset p = build_problem(c);
    Outcome o = solve_problem(c, p, p.points);
    diags = o.diagnostics;
    write_solution_csv(out / "solution.csv", o);
    write_diagnostics_csv(out / "diagnostics.csv", o.diagnostics);
    for (std::size_t i = 0; i < o.points.size(); ++i) {
        os << "u(";
        for (int a = 0; a < o.points[i].size(); ++a) os << (a ? ", " : "") << o.points[i](a);
        os << ") = " << o.values[i].value << " +- " << o.values[i].std_error;
        if (p.exact) os << "   (exact " << p.exact->value(o.points[i]) << ")";
        os << '\n';
    }
    return kExitOk;
}

// Wall times go to the manifest only, so the CSVs stay independent of the machine and worker count.
int cmd_convergence(const RunConfig& c, const fs::path& out, std::ostream& os,
                    std::vector<std::pair<std::string, double>>& timings) {
    Preset p = build_problem(c);
    std::vector<Vec> pt = {p.points.front()};
    std::ofstream f(out / "convergence.csv");
    f << "sweep,dt,n_paths,value,stderr,abs_error,cost_steps\n";
    std::vector<std::pair<std::string, double>> diags;
    auto run_one = [&](const std::string& sweep, double dt, long n) {
        RunConfig r = c;
        r.solver.mc.dt = dt;
        r.solver.mc.n_paths = n;
        r.solver.bsde.mc.dt = dt;
        r.solver.bsde.mc.n_paths = n;
        auto t0 = Clock::now();
        Outcome o = solve_problem(r, p, pt);
        double wall = std::chrono::duration<double>(Clock::now() - t0).count();
        const Estimate& e = o.values.front();
        double err = p.exact ? std::abs(e.value - p.exact->value(pt.front())) : std::nan("");
        double cost = static_cast<double>(n) * static_cast<double>(step_count(e.t_max > 0 ? e.t_max : r.solver.T_max, dt));
        f << sweep << ',' << fmt(dt) << ',' << n << ',' << fmt(e.value) << ',' << fmt(e.std_error) << ',' << fmt(err)
          << ',' << fmt(cost) << '\n';
        timings.emplace_back(sweep + "_dt" + fmt(dt) + "_n" + std::to_string(n), wall);
        os << sweep << " dt=" << dt << " N=" << n << ": " << e.value << " +- " << e.std_error << " error " << err
           << '\n';
    };
    for (double dt : c.conv_dt) run_one("dt", dt, c.solver.mc.n_paths);
    for (long n : c.conv_n) run_one("n_paths", c.solver.mc.dt, n);
    write_diagnostics_csv(out / "diagnostics.csv", diags);
    return kExitOk;
}

// Gauge, decay, local-time and Girsanov diagnostics. Exits 3 when the gauge diverges.
int cmd_diagnose(const RunConfig& c, const fs::path& out, std::ostream& os, std::ostream& err,
                 std::vector<std::pair<std::string, double>>& diags) {
    Preset p = build_problem(c);
    const ProblemSpec& spec = p.spec;
    const SolverSettings& s = c.solver;
    std::vector<Vec> pts = p.points;
    const Vec& x0 = pts.front();

    ScalarField q = spec.coeffs.Q;
    if (spec.form == ProblemForm::semilinear && spec.G.d1) {
        ScalarField Q = spec.coeffs.Q, d1 = spec.G.d1;
        q = [Q, d1](const Vec& x) { return Q(x) - d1(x); };
    }
    WeightFields w;
    if (!spec.coeffs.B_zero) w.b = spec.coeffs.B;
    w.q = q;
    GaugeResult g = gauge_estimate(spec.dom, spec.coeffs, w, x0, s.gauge_T_max, s.gauge_mc);
    diags.emplace_back("gauge", g.value.value);
    diags.emplace_back("gauge_stderr", g.value.std_error);
    diags.emplace_back("gauge_divergent", g.divergent ? 1.0 : 0.0);
    diags.emplace_back("beta_hat", g.decay.beta_hat);
    diags.emplace_back("K_hat", g.decay.K_hat);
    diags.emplace_back("decay_fit_residual", g.decay.residual);
    diags.emplace_back("boundary_rate", g.boundary_rate);
    for (std::size_t k = 0; k < g.partial_sums.size(); ++k)
        diags.emplace_back("gauge_partial_T" + fmt(g.checkpoints[k]), g.partial_sums[k].value);

    McSettings mc = s.gauge_mc;
    Vec xb = boundary_samples(spec.dom, 1).front();
    Estimate lt = estimate_local_time_moment(spec.dom, spec.coeffs, xb, 1, 0.04, mc);
    diags.emplace_back("local_time_mean_t0.04", lt.value);
    diags.emplace_back("local_time_mean_t0.04_stderr", lt.std_error);
    diags.emplace_back("local_time_ratio_to_sqrt(2t/pi)", lt.value / std::sqrt(2.0 * 0.04 / std::numbers::pi));

    const int d = spec.dom.dim;
    VectorField e1 = [d](const Vec&) {
        Vec b = Vec::Zero(d);
        b(0) = 1.0;
        return b;
    };
    GirsanovReport gr = girsanov_consistency(spec.dom, spec.coeffs, e1, x0, [](const Vec& x) { return x(0); }, 0.5, mc);
    diags.emplace_back("girsanov_lhs", gr.lhs.value);
    diags.emplace_back("girsanov_rhs", gr.rhs.value);
    diags.emplace_back("girsanov_z", gr.z);

    SandwichResult sw = weighted_localtime_sandwich(spec.dom, spec.coeffs, w, pts, 1.0, mc);
    diags.emplace_back("weighted_local_time_min_t1", sw.min.value);
    diags.emplace_back("weighted_local_time_max_t1", sw.max.value);

    write_diagnostics_csv(out / "diagnostics.csv", diags);
    for (const auto& [k, v] : diags) os << k << " = " << v << '\n';
    if (g.divergent) {
        err << "GaugeDiverges: gauge diagnostic E0[int Z dL] flagged divergent (beta_hat " << g.decay.beta_hat
            << ", estimate " << g.value.value << " at T " << s.gauge_T_max << ")\n";
        return kExitHypothesis;
    }
    return kExitOk;
}

int cmd_calibrate(const RunConfig& c, const fs::path& out, std::ostream& os,
                  std::vector<std::pair<std::string, double>>& diags) {
    CalibrationResult r = calibrate(c.solver);
    std::ofstream f(out / "calibration.csv");
    f << "kappa_L,u1_sign,max_error\n";
    for (const auto& [k, sgn, e] : r.table) f << fmt(k) << ',' << fmt(sgn) << ',' << fmt(e) << '\n';
    for (const auto& e : r.entries)
        os << e.family << " at (" << e.point(0) << ", " << e.point(1) << "): oracle " << e.oracle << ", volume "
           << e.volume.value << " +- " << e.volume.std_error << ", boundary " << e.boundary.value << " +- "
           << e.boundary.std_error << '\n';
    os << "kappa_L = " << r.kappa_L << ", u1_sign = " << r.u1_sign << " (max error " << r.max_error << ")\n";
    const SolverSettings frozen;
    if (r.kappa_L != frozen.kappa_L || r.u1_sign != frozen.u1_sign)
        os << "warning: differs from the frozen defaults kappa_L = " << frozen.kappa_L << ", u1_sign = " << frozen.u1_sign
           << '\n';
    diags = {{"kappa_L", r.kappa_L}, {"u1_sign", r.u1_sign}, {"max_error", r.max_error}};
    write_diagnostics_csv(out / "diagnostics.csv", diags);
    return kExitOk;
}

// Zero-data and identity examples; every check is exact or deterministic.
int cmd_selftest(std::ostream& os) {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        os << (ok ? "PASS " : "FAIL ") << name << '\n';
        if (!ok) ++failures;
    };
    auto guarded = [&](const std::string& name, const std::function<bool()>& f) {
        try {
            check(name, f());
        } catch (const std::exception& e) {
            os << "FAIL " << name << " (" << e.what() << ")\n";
            ++failures;
        }
    };
    SolverSettings s;
    s.mc = {400, 1e-2, 11, 0};
    s.T_max = 4.0;
    s.gauge_mc = {400, 1e-2, 7, 0};
    s.mesh_n = 9;
    s.mesh_paths = 8;
    s.mesh_T_max = 2.0;
    const Preset zero = make_preset("zero_linear");
    const std::vector<Vec> pts = zero.points;

    guarded("linear solve with zero data is 0", [&] {
        SolutionField f = solve_linear(zero.spec, pts, s);
        for (const auto& e : f.values)
            if (e.value != 0.0) return false;
        return true;
    });
    guarded("linear solve doubles with doubled data", [&] {
        Preset q = make_preset("quadratic_linear");
        ProblemSpec twice = q.spec;
        ScalarField F = q.spec.F_data, phi = q.spec.phi;
        twice.F_data = [F](const Vec& x) { return 2.0 * F(x); };
        twice.phi = [phi](const Vec& x) { return 2.0 * phi(x); };
        SolverSettings t = s;
        t.check_gauge = false;
        SolutionField a = solve_linear(q.spec, {pts[0]}, t), b = solve_linear(twice, {pts[0]}, t);
        return std::abs(b.values[0].value - 2.0 * a.values[0].value) <= 1e-12 * (1.0 + std::abs(a.values[0].value));
    });
    guarded("semilinear solve with G = 0 is 0 after one iteration", [&] {
        ProblemSpec sp = zero.spec;
        sp.form = ProblemForm::semilinear;
        sp.G = Nonlinearity::from_source([](const Vec&) { return 0.0; });
        SolutionField f = solve_semilinear(sp, pts, s);
        bool ok = f.picard_history.size() == 1;
        for (const auto& e : f.values) ok = ok && e.value == 0.0;
        return ok;
    });
    guarded("BSDE with zero data gives y0 = 0, z0 = 0", [&] {
        BsdeProblem bp;
        bp.generator = Nonlinearity::from_source([](const Vec&) { return 0.0; });
        BsdeSettings bs;
        bs.mc = {500, 1e-2, 3, 0};
        bs.horizons = {1.0, 2.0};
        BsdeSolution sol = solve_infinite_horizon(bp, zero.spec.dom, zero.spec.coeffs, pts[0], bs);
        return sol.y0.value == 0.0 && sol.z0.isZero(0.0);
    });
    guarded("y0 bound scan with zero data is 0", [&] {
        BsdeProblem bp;
        bp.generator = Nonlinearity::from_source([](const Vec&) { return 0.0; });
        BsdeSettings bs;
        bs.mc = {300, 1e-2, 3, 0};
        bs.horizons = {1.0, 2.0};
        return y0_bound_scan(bp, zero.spec.dom, zero.spec.coeffs, pts, bs).max_abs_y0 == 0.0;
    });
    guarded("beta norms of Y = 0 and of Y = 1, Z = 0", [&] {
        BetaNorms a = beta_norm_diagnostic(std::vector<double>(10, 0.0), std::vector<double>(10, 0.0), 0.5);
        BetaNorms b = beta_norm_diagnostic(std::vector<double>(10, 1.0), std::vector<double>(10, 0.0), 0.5);
        return a.sup_y.value == 0.0 && a.z_int.value == 0.0 && b.sup_y.value == 1.0 && b.z_int.value == 0.0;
    });
    guarded("smallness of Bhat = 0 is 0 and passes", [&] {
        SmallnessReport r = smallness_check(zero.spec.dom, zero.spec.coeffs, 0.5);
        return r.norm == 0.0 && r.pass;
    });
    guarded("v for Bhat = 0 is 0", [&] {
        VSolution v = solve_v(zero.spec.dom, zero.spec.coeffs, zero.spec.coeffs.Bhat, {8, 16, 9});
        for (double x : v.v.values())
            if (std::abs(x) > 1e-14) return false;
        return true;
    });
    guarded("finite differences with zero data give 0", [&] {
        FdResult r = fd_solve(to_fd_problem(zero.spec), {8, 16, 9});
        for (double x : r.u.values())
            if (std::abs(x) > 1e-12) return false;
        return true;
    });
    guarded("mixed pipeline with Bhat = 0 equals the semilinear solve", [&] {
        Preset m = make_preset("mixed_zero_bhat");
        ProblemSpec sp = m.spec;
        sp.form = ProblemForm::semilinear;
        sp.phi = m.spec.Phi;
        SolutionField a = solve_mixed_full(m.spec, {pts[0]}, s), b = solve_semilinear(sp, {pts[0]}, s);
        return a.values[0].value == b.values[0].value && a.values[0].std_error == b.values[0].std_error;
    });
    guarded("Markov check with zero data has zero discrepancy", [&] {
        BsdeProblem bp;
        bp.generator = Nonlinearity::from_source([](const Vec&) { return 0.0; });
        BsdeSettings bs;
        bs.mc = {300, 1e-2, 3, 0};
        bs.horizons = {1.0};
        BsdeSolution sol = solve_truncated(bp, zero.spec.dom, zero.spec.coeffs, pts[0], 1.0, bs);
        GridFunction u0(Mesh::cartesian_for(zero.spec.dom, 5), 0.0);
        MarkovReport r = markov_consistency_check(zero.spec, u0, sol, bp, pts[0], 0.5, {200, 1e-2, 5, 0}, 0.0);
        return r.mean_abs.value == 0.0 && r.pass;
    });
    os << (failures == 0 ? "selftest passed\n" : "selftest FAILED: " + std::to_string(failures) + " check(s)\n");
    return failures == 0 ? kExitOk : kExitFailure;
}

int exit_code_for(const Error& e) {
    switch (e.error_class()) {
        case ErrorClass::config: return kExitConfig;
        case ErrorClass::hypothesis: return kExitHypothesis;
        case ErrorClass::numerical: return kExitNumerical;
        case ErrorClass::other: return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace

Preset build_problem(const RunConfig& c) {
    Preset p = make_preset(c.preset, c.params);
    bool changed = false;
    if (c.domain) {
        const DomainOverride& d = *c.domain;
        if (d.kind == DomainKind::ball) {
            p.spec.dom = DomainGeometry::ball(to_vec(d.center), d.radius);
            p.points = five_point_stencil(p.spec.dom.center, 0.5 * d.radius);
        } else {
            p.spec.dom = DomainGeometry::box(to_vec(d.lo), to_vec(d.hi));
            Vec lo = to_vec(d.lo), hi = to_vec(d.hi);
            p.points = five_point_stencil(0.5 * (lo + hi), 0.25 * (hi - lo).minCoeff());
        }
        if (p.spec.dom.dim != p.spec.coeffs.dim) {
            CoefficientSet iso = CoefficientSet::isotropic(p.spec.dom.dim, 1.0, 0.0);
            ScalarField Q = p.spec.coeffs.Q;
            iso.Q = Q;
            if (!p.spec.coeffs.Bhat_zero) throw ConfigError("domain dimension change is not supported for this preset");
            p.spec.coeffs = iso;
        }
        changed = true;
    }
    if (c.a_scale) {
        const int d = p.spec.coeffs.dim;
        Mat A = *c.a_scale * Mat::Identity(d, d);
        p.spec.coeffs.A = [A](const Vec&) { return A; };
        p.spec.coeffs.A_constant = A;
        p.spec.coeffs.lambda = std::max(*c.a_scale, 1.0 / *c.a_scale) + 1e-9;
        changed = true;
    }
    if (c.q_constant) {
        double q = *c.q_constant;
        p.spec.coeffs.Q = [q](const Vec&) { return q; };
        changed = true;
    }
    if (changed) p.exact.reset();
    if (!c.points.empty()) {
        p.points.clear();
        for (const auto& v : c.points) {
            if (static_cast<int>(v.size()) != p.spec.dom.dim)
                throw ConfigError("evaluation point dimension does not match the domain");
            Vec x = to_vec(v);
            if (classify(p.spec.dom, x) == Location::exterior) throw ConfigError("evaluation point outside the domain");
            p.points.push_back(x);
        }
    }
    return p;
}

RunConfig effective_config(RunConfig c, const CliArgs& a) {
    c.command = a.command;
    if (a.seed) {
        c.solver.mc.seed = *a.seed;
        c.solver.bsde.mc.seed = *a.seed;
    }
    if (a.threads) c.solver.mc.threads = *a.threads;
    if (a.out_dir) c.out_dir = *a.out_dir;
    c.solver.gauge_mc.threads = c.solver.mc.threads;
    c.solver.bsde.mc.threads = c.solver.mc.threads;
    validate(c);
    return c;
}

int run(const CliArgs& a, std::ostream& os, std::ostream& err) {
    const auto t0 = Clock::now();
    RunConfig c;
    fs::path out;
    std::vector<std::pair<std::string, double>> diags;
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, double>> timings;
    bool have_config = false;
    try {
        if (a.command == "selftest") return cmd_selftest(os);
        if (a.config_path.empty()) {
            if (a.command != "calibrate") throw ConfigError("--config is required for '" + a.command + "'");
            c.preset = "constant_linear";
            c.solver.mc = {20000, 1e-3, 42, 0};
        } else {
            c = load_config(a.config_path);
        }
        c = effective_config(std::move(c), a);
        have_config = true;
        out = c.out_dir;
        fs::create_directories(out);
        int code = kExitOk;
        if (a.command == "solve") {
            code = cmd_solve(c, out, os, diags);
            outputs = {"solution.csv", "diagnostics.csv"};
        } else if (a.command == "convergence") {
            code = cmd_convergence(c, out, os, timings);
            outputs = {"convergence.csv", "diagnostics.csv"};
        } else if (a.command == "diagnose") {
            code = cmd_diagnose(c, out, os, err, diags);
            outputs = {"diagnostics.csv"};
        } else if (a.command == "calibrate") {
            code = cmd_calibrate(c, out, os, diags);
            outputs = {"calibration.csv", "diagnostics.csv"};
        } else {
            throw ConfigError("unknown command '" + a.command + "'");
        }
        write_manifest(out, c, a.command, diags, std::chrono::duration<double>(Clock::now() - t0).count(), code,
                       outputs, {}, timings);
        return code;
    } catch (const Error& e) {
        err << e.what() << '\n';
        int code = exit_code_for(e);
        if (have_config)
            write_manifest(out, c, a.command, diags, std::chrono::duration<double>(Clock::now() - t0).count(), code,
                           outputs, e.what());
        return code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Monte-Carlo and BSDE solvers for elliptic problems with reflecting boundaries"};
    app.require_subcommand(1, 1);
    CliArgs a;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 0;
    for (const char* name : {"solve", "convergence", "diagnose", "calibrate", "selftest"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", a.config_path, "YAML config or a run manifest");
        sub->add_option("--seed", seed, "base seed (overrides the config)");
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--threads", threads, "worker count, 0 = all cores (results do not depend on it)")
            ->check(CLI::NonNegativeNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    CLI::App* sub = app.get_subcommands().front();
    a.command = sub->get_name();
    if (sub->count("--seed")) a.seed = seed;
    if (sub->count("--out")) a.out_dir = out_dir;
    if (sub->count("--threads")) a.threads = threads;
    return run(a, std::cout, std::cerr);
}

}  // namespace rbsde
