// Acceptance run: one PASS/FAIL line per criterion. Exit status 0 only if every criterion passes.
#include "rbsde/bsde.hpp"
#include "rbsde/cli.hpp"
#include "rbsde/functionals.hpp"
#include "rbsde/parallel.hpp"
#include "rbsde/pde.hpp"
#include "rbsde/presets.hpp"
#include "rbsde/reference.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace rbsde;
namespace fs = std::filesystem;

namespace {

// Deterministic estimates carry SE ~ 1e-16; comparisons "within k SE" get this round-off floor.
constexpr double kFloor = 1e-9;

struct Outcome {
    bool pass = true;
    std::string detail;
    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [FAILED]");
    }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string est(const Estimate& e) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.5f +- %.5f", e.value, e.std_error);
    return buf;
}

double combined(const Estimate& a, const Estimate& b) { return std::hypot(a.std_error, b.std_error); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DomainGeometry unit_disk() { return DomainGeometry::ball(make_vec({0.0, 0.0}), 1.0); }

WeightFields constant_potential(double q) {
    WeightFields w;
    w.q = [q](const Vec&) { return q; };
    return w;
}

Outcome constant_linear() {
    Outcome o;
    Preset p = make_preset("constant_linear", {{"F", 1.0}});
    SolverSettings s;
    s.mc = {20000, 1e-3, 42, 0};
    s.T_max = 15.0;
    auto t0 = std::chrono::steady_clock::now();
    SolutionField r = solve_linear(p.spec, {make_vec({0.0, 0.0})}, s);
    double secs = seconds_since(t0);
    const Estimate& u = r.values[0];
    double tol = std::max(3.0 * u.std_error, 0.03);
    o.check(std::abs(u.value + 1.0) <= tol, "u(0) = " + est(u) + " vs -1 (tol " + fmt("%.3g", tol) + ")");
    o.check(secs <= 120.0, "runtime " + fmt("%.1f", secs) + " s <= 120 s");
    return o;
}

Outcome quadratic_manufactured() {
    Outcome o;
    Preset p = make_preset("quadratic_linear");
    SolverSettings s;
    s.mc = {100000, 1e-3, 42, 0};
    s.T_max = 10.0;
    std::vector<Vec> pts = {make_vec({0.0, 0.0}), make_vec({0.5, 0.0})};
    SolutionField r = solve_linear(p.spec, pts, s);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double exact = p.exact->value(pts[i]);
        o.check(std::abs(r.values[i].value - exact) <= 0.03,
                "u(" + fmt("%.1f", pts[i](0)) + ",0) = " + est(r.values[i]) + " vs " + fmt("%.2f", exact) +
                    " +- 0.03");
    }
    o.check(r.diagnostic("kappa_L") == -2.0 && r.diagnostic("u1_sign") == -1.0, "calibrated kappa_L = -2, sign = -1");
    // Oracle at the default and the doubled resolution.
    FdProblem fd = to_fd_problem(p.spec);
    for (const FdResolution& res : {FdResolution{}, FdResolution::refined(FdResolution{})}) {
        FdResult f = fd_solve(fd, res);
        double err = 0.0;
        for (const Vec& x : pts) err = std::max(err, std::abs(f.u(x) - p.exact->value(x)));
        o.check(err <= 1e-3, "FD (nr " + std::to_string(res.nr) + ") max error " + fmt("%.2e", err) + " <= 1e-3");
    }
    return o;
}

Outcome local_time_scaling() {
    Outcome o;
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, 0.0);
    const std::vector<double> ts = {0.0025, 0.01, 0.04};
    std::vector<double> lx, ly;
    Estimate at_001;
    for (double t : ts) {
        Estimate e = estimate_local_time_moment(d, c, make_vec({1.0, 0.0}), 1, t, {20000, 1e-5, 11, 0});
        lx.push_back(std::log(t));
        ly.push_back(std::log(e.value));
        if (t == 0.01) at_001 = e;
    }
    double mx = (lx[0] + lx[1] + lx[2]) / 3.0, my = (ly[0] + ly[1] + ly[2]) / 3.0, sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 3; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    double slope = sxy / sxx;
    o.check(std::abs(slope - 0.5) <= 0.05, "log-log slope " + fmt("%.4f", slope) + " = 0.5 +- 0.05");
    double pref = at_001.value / std::sqrt(0.01), target = std::sqrt(2.0 / std::numbers::pi);
    o.check(std::abs(pref / target - 1.0) <= 0.10,
            "prefactor " + fmt("%.4f", pref) + " vs sqrt(2/pi) = " + fmt("%.4f", target) + " within 10%");
    return o;
}

Outcome girsanov() {
    Outcome o;
    VectorField b = [](const Vec&) { return make_vec({1.0, 0.0}); };
    GirsanovReport r = girsanov_consistency(unit_disk(), CoefficientSet::isotropic(2, 1.0, 0.0), b, make_vec({0.0, 0.0}),
                                            [](const Vec& x) { return x(0); }, 0.5, {100000, 1e-3, 5, 0});
    o.check(r.z <= 3.0, "E0[M f(X0)] = " + est(r.lhs) + ", E[f(X)] = " + est(r.rhs) + ", z = " + fmt("%.2f", r.z));
    return o;
}

Outcome decay() {
    Outcome o;
    DomainGeometry d = unit_disk();
    std::vector<Vec> x0s = {make_vec({0.0, 0.0}), make_vec({0.5, 0.0}), make_vec({0.9, 0.0})};
    std::vector<double> grid = {1.0, 2.0, 3.0, 4.0};
    DecayFit neg = decay_rate_estimate(d, CoefficientSet::isotropic(2, 1.0, -1.0), constant_potential(-1.0), x0s, grid,
                                       {2000, 1e-3, 3, 0});
    o.check(std::abs(neg.beta_hat - 1.0) <= 0.05, "q = -1: beta_hat " + fmt("%.4f", neg.beta_hat));
    CoefficientSet flat = CoefficientSet::isotropic(2, 1.0, 0.0);
    DecayFit zero = decay_rate_estimate(d, flat, constant_potential(0.0), x0s, grid, {2000, 1e-3, 3, 0});
    o.check(std::abs(zero.beta_hat) <= 0.05, "q = 0: beta_hat " + fmt("%.4f", zero.beta_hat));
    GaugeResult g = gauge_estimate(d, flat, constant_potential(0.0), make_vec({0.0, 0.0}), 10.0, {2000, 1e-3, 7, 0});
    o.check(g.divergent, std::string("q = 0 gauge flagged ") + (g.divergent ? "Divergent" : "finite"));
    return o;
}

BsdeSettings bsde_settings(long n_paths, std::uint64_t seed) {
    BsdeSettings s;
    s.mc = {n_paths, 1e-3, seed, 0};
    return s;
}

Outcome bsde_fixed_point() {
    Outcome o;
    Preset p = make_preset("fixed_point", {{"c", 1.0}});
    BsdeProblem bp = semilinear_bsde(p.spec, SolverSettings{}, BsdeMode::L2);
    Vec x0 = make_vec({0.3, 0.2});
    BsdeSolution a = solve_infinite_horizon(bp, p.spec.dom, p.spec.coeffs, x0, bsde_settings(10000, 42));
    BsdeSolution b = solve_infinite_horizon(bp, p.spec.dom, p.spec.coeffs, x0, bsde_settings(10000, 43));
    o.check(std::abs(a.y0.value - 1.0) <= 3.0 * a.y0.std_error + 0.02 + kFloor,
            "y0 = " + est(a.y0) + " (horizon " + fmt("%.0f", a.horizon) + ") vs 1 within 3 SE + 2%");
    double gap = std::abs(a.y0.value - b.y0.value);
    o.check(gap <= 3.0 * combined(a.y0, b.y0) + kFloor, "seeds 42/43 differ by " + fmt("%.3g", gap));
    return o;
}

Outcome route_equivalence() {
    Outcome o;
    std::vector<Vec> pts = {make_vec({0.0, 0.0}), make_vec({0.5, 0.0})};
    {
        Preset p = make_preset("constant_semilinear");
        SolverSettings s;
        s.mc = {4000, 1e-3, 42, 0};
        s.T_max = 12.0;
        s.mesh_n = 21;
        SolutionField pde = solve_semilinear(p.spec, pts, s);
        BsdeSettings bs = bsde_settings(2000, 42);
        bs.tol = 1e-10;
        BsdeProblem bp = semilinear_bsde(p.spec, s, BsdeMode::L2);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            BsdeSolution y = solve_infinite_horizon(bp, p.spec.dom, p.spec.coeffs, pts[i], bs);
            double gap = std::abs(pde.values[i].value - y.y0.value);
            o.check(gap <= 3.0 * combined(pde.values[i], y.y0) + kFloor,
                    "constant x" + std::to_string(i) + ": pde " + est(pde.values[i]) + ", bsde " + est(y.y0));
        }
    }
    {
        Preset p = make_preset("manufactured_semilinear");
        SolverSettings s;
        s.mc = {40000, 1e-3, 42, 0};
        s.T_max = 10.0;
        s.mesh_n = 21;
        SolutionField pde = solve_semilinear(p.spec, pts, s);
        BsdeProblem bp = semilinear_bsde(p.spec, s, p.bsde_mode);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            BsdeSolution y = solve_infinite_horizon(bp, p.spec.dom, p.spec.coeffs, pts[i], bsde_settings(10000, 42));
            double gap = std::abs(pde.values[i].value - y.y0.value);
            o.check(gap <= 3.0 * combined(pde.values[i], y.y0) + kFloor,
                    "manufactured x" + std::to_string(i) + ": pde " + est(pde.values[i]) + ", bsde " + est(y.y0));
        }
    }
    return o;
}

Outcome h_transform_round_trip() {
    Outcome o;
    std::vector<Vec> pts = {make_vec({0.0, 0.0}), make_vec({0.5, 0.0})};
    {
        Preset p = make_preset("mixed_hbar");
        SolverSettings s;
        s.mc = {10000, 1e-3, 42, 0};
        s.T_max = 10.0;
        s.mesh_n = 21;
        SolutionField f = solve_mixed_full(p.spec, pts, s);
        for (std::size_t i = 0; i < pts.size(); ++i)
            o.check(std::abs(f.values[i].value - 1.0) <= 0.03, "f(x" + std::to_string(i) + ") = " + est(f.values[i]));
    }
    {
        Preset p = make_preset("mixed_zero_bhat");
        SolverSettings s;
        s.mc = {2000, 1e-3, 42, 0};
        s.mesh_n = 15;
        SolutionField m = solve_mixed_full(p.spec, pts, s);
        ProblemSpec sl = p.spec;
        sl.form = ProblemForm::semilinear;
        SolutionField r = solve_semilinear(sl, pts, s);
        bool same = true;
        for (std::size_t i = 0; i < pts.size(); ++i)
            same = same && m.values[i].value == r.values[i].value && m.values[i].std_error == r.values[i].std_error;
        o.check(same, "Bhat = 0 output bit-identical to solve_semilinear");
    }
    {
        Preset p = make_preset("mixed_hbar");
        HTransform h = h_transform(p.spec.dom, p.spec.coeffs, {});
        SemigroupIdentity si = semigroup_identity_check(p.spec, h, make_vec({0.2, 0.1}), [](const Vec&) { return 1.0; },
                                                        0.5, {20000, 1e-3, 3, 0});
        o.check(si.z <= 3.0, "S_t 1 = " + est(si.direct) + " vs e^-v S~_t e^v = " + est(si.transformed) + ", z " +
                                 fmt("%.2f", si.z));
    }
    return o;
}

Outcome l1_route() {
    Outcome o;
    Preset p = make_preset("fixed_point", {{"c", 2.0}});
    Vec x0 = make_vec({0.4, -0.2});
    BsdeSolution l2 = solve_infinite_horizon(semilinear_bsde(p.spec, SolverSettings{}, BsdeMode::L2), p.spec.dom,
                                             p.spec.coeffs, x0, bsde_settings(10000, 42));
    BsdeSolution l1 = solve_infinite_horizon(semilinear_bsde(p.spec, SolverSettings{}, BsdeMode::L1), p.spec.dom,
                                             p.spec.coeffs, x0, bsde_settings(10000, 42));
    o.check(std::abs(l1.y0.value - l2.y0.value) <= 3.0 * combined(l1.y0, l2.y0) + kFloor,
            "c - y: reweighted " + est(l1.y0) + ", direct " + est(l2.y0));
    Preset cub = make_preset("cubic", {{"c", 8.0}});
    BsdeSolution y = solve_infinite_horizon(semilinear_bsde(cub.spec, SolverSettings{}, BsdeMode::L1), cub.spec.dom,
                                            cub.spec.coeffs, make_vec({0.0, 0.0}), bsde_settings(10000, 42));
    o.check(std::abs(y.y0.value - 2.0) <= 3.0 * y.y0.std_error + 0.04 + kFloor,
            "cubic c = 8: y0 = " + est(y.y0) + " vs 2");
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome o;
    fs::path root = fs::temp_directory_path() / "rbsde_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"solve",
         "problem: {preset: quadratic_linear}\n"
         "solver: {route: linear, n_paths: 2000, dt: 0.002, T_max: 5, gauge: {n_paths: 500, dt: 0.002, T_max: 5}}\n"},
        {"solve",
         "problem: {preset: manufactured_semilinear, points: [[0, 0], [0.5, 0]]}\n"
         "solver: {route: semilinear, n_paths: 1000, dt: 0.002, T_max: 5, mesh: {n: 11, paths: 16},\n"
         "         gauge: {n_paths: 500, dt: 0.002, T_max: 5}}\n"},
        {"solve",
         "problem: {preset: cubic, points: [[0.2, 0.1]]}\n"
         "solver: {route: bsde, bsde: {n_paths: 1000, dt: 0.002, stride: 10, horizons: [4, 8], mode: L1}}\n"},
        {"solve",
         "problem: {preset: mixed_hbar, points: [[0.3, 0.0]]}\n"
         "solver: {route: mixed, n_paths: 500, dt: 0.002, T_max: 5, mesh: {n: 11, paths: 16},\n"
         "         gauge: {n_paths: 300, dt: 0.002, T_max: 5}}\n"},
        {"diagnose",
         "problem: {preset: quadratic_linear}\n"
         "solver: {n_paths: 1000, dt: 0.002, gauge: {n_paths: 500, dt: 0.002, T_max: 5}}\n"},
        {"convergence",
         "problem: {preset: constant_linear, points: [[0.1, 0.1]]}\n"
         "solver: {route: linear, T_max: 4, gauge: {n_paths: 300, dt: 0.004, T_max: 4}}\n"
         "convergence: {dt_values: [0.004, 0.002], n_paths_values: [200, 800]}\n"},
    };
    std::size_t compared = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& [command, yaml] = runs[k];
        fs::path cfg = root / ("run" + std::to_string(k) + ".yaml");
        std::ofstream(cfg) << yaml;
        std::vector<fs::path> dirs;
        bool ok = true;
        for (int threads : {1, 4}) {
            CliArgs a;
            a.command = command;
            a.config_path = cfg.string();
            a.seed = 2024;
            a.threads = threads;
            a.out_dir = (root / ("run" + std::to_string(k) + "_t" + std::to_string(threads))).string();
            dirs.emplace_back(*a.out_dir);
            std::ostringstream os, es;
            int code = run(a, os, es);
            if (code != kExitOk) {
                ok = false;
                o.check(false, command + " run " + std::to_string(k) + " exited " + std::to_string(code) + ": " + es.str());
            }
        }
        if (!ok) continue;
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(dirs[0]))
            if (e.path().extension() == ".csv") names.insert(e.path().filename().string());
        for (const std::string& n : names) {
            bool same = fs::exists(dirs[1] / n) && slurp(dirs[0] / n) == slurp(dirs[1] / n);
            ++compared;
            if (!same) o.check(false, command + " run " + std::to_string(k) + ": " + n + " differs");
        }
    }
    o.check(compared > 0, std::to_string(compared) + " CSV files compared across workers {1, 4}");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    app.add_option("--only", only, "Run only these criteria (1-10)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"constant linear solution", constant_linear},
        {"quadratic manufactured solution and FD oracle", quadratic_manufactured},
        {"boundary local-time scaling", local_time_scaling},
        {"Girsanov consistency", girsanov},
        {"exponential decay and divergent gauge", decay},
        {"BSDE fixed point and seed stability", bsde_fixed_point},
        {"route equivalence (fixed point vs BSDE)", route_equivalence},
        {"h-transform round trip", h_transform_round_trip},
        {"L1 route", l1_route},
        {"determinism across worker counts", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::printf("CRITERION %2d %s: %s -- %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
