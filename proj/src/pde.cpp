#include "rbsde/pde.hpp"

#include "rbsde/parallel.hpp"
#include "rbsde/presets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace rbsde {

double SolutionField::diagnostic(const std::string& key, double fallback) const {
    for (const auto& [k, v] : diagnostics)
        if (k == key) return v;
    return fallback;
}

namespace {

struct PointParts {
    Estimate total, volume, boundary;
};

// Per path: I1 = int e^{log Z} F dt (left point), I2 = int e^{log Z} phi dL; sample = sign I1 + kappa I2.
PointParts linear_point(const DomainGeometry& dom, const CoefficientSet& coeffs, const WeightFields& w,
                        const ScalarField& F, const ScalarField& phi, const Vec& x0, double T, const McSettings& mc,
                        double sign, double kappa) {
    const long K = step_count(T, mc.dt);
    ReflectedStepper stepper(dom, coeffs, DriftMode::L0, nullptr, mc.dt);
    std::vector<double> vol(mc.n_paths), bnd(mc.n_paths), tot(mc.n_paths);
    parallel_for(mc.n_paths, mc.threads, [&](std::size_t i) {
        RngStream rng(mc.seed, i);
        WeightAccumulator acc(coeffs, w);
        ReflectedStepper::Step s;
        Vec x = x0;
        double i1 = 0.0, i2 = 0.0;
        for (long k = 0; k < K; ++k) {
            double z = std::exp(acc.log_z());
            // Exponential integrator: the step integral of e^{q (s - t_k)} with q frozen at x_k, exact for
            // constant potentials.
            if (F) {
                double a = w.q ? w.q(x) * mc.dt : 0.0;
                double phi1 = a == 0.0 ? 1.0 : std::expm1(a) / a;
                i1 += z * F(x) * phi1 * mc.dt;
            }
            stepper.step(x, rng, s);
            if (phi && s.dL > 0.0) i2 += z * phi(s.next) * s.dL;
            acc.update(x, s.dM, mc.dt);
            x = s.next;
        }
        vol[i] = i1;
        bnd[i] = i2;
        tot[i] = sign * i1 + kappa * i2;
    });
    return {summarize(tot, T), summarize(vol, T), summarize(bnd, T)};
}

double sup_interior(const DomainGeometry& dom, const ScalarField& f) {
    double m = 0.0;
    if (!f) return m;
    for (const Vec& x : interior_samples(dom, 17)) m = std::max(m, std::abs(f(x)));
    return m;
}

double sup_boundary(const DomainGeometry& dom, const ScalarField& f) {
    double m = 0.0;
    if (!f) return m;
    for (const Vec& x : boundary_samples(dom, 64)) m = std::max(m, std::abs(f(x)));
    return m;
}

// Gauge and decay of the weight at x0; throws when either hypothesis fails.
GaugeResult check_gauge(const DomainGeometry& dom, const CoefficientSet& coeffs, const WeightFields& w, const Vec& x0,
                        const SolverSettings& s) {
    GaugeResult g = gauge_estimate(dom, coeffs, w, x0, s.gauge_T_max, s.gauge_mc);
    if (!(g.decay.beta_hat > 0.0))
        throw NoDecay("E0[Z_t] shows no exponential decay (beta_hat " + std::to_string(g.decay.beta_hat) +
                      "); the time integral cannot be truncated");
    if (g.divergent)
        throw GaugeDiverges("gauge E0[int Z dL] does not level off (estimate " + std::to_string(g.value.value) +
                            " at T " + std::to_string(s.gauge_T_max) + ")");
    return g;
}

void record_gauge(SolutionField& out, const GaugeResult& g, double sup_F, double sup_phi, const SolverSettings& s) {
    out.add("gauge", g.value.value);
    out.add("gauge_stderr", g.value.std_error);
    out.add("beta_hat", g.decay.beta_hat);
    out.add("K_hat", g.decay.K_hat);
    double decay = g.decay.K_hat * std::exp(-g.decay.beta_hat * s.T_max) / g.decay.beta_hat;
    out.add("tail_bound", (std::abs(s.u1_sign) * sup_F + std::abs(s.kappa_L) * sup_phi * g.boundary_rate) * decay);
}

void record_settings(SolutionField& out, const SolverSettings& s) {
    out.add("kappa_L", s.kappa_L);
    out.add("u1_sign", s.u1_sign);
    out.add("T_max", s.T_max);
    out.add("seed", static_cast<double>(s.mc.seed));
    out.add("n_paths", static_cast<double>(s.mc.n_paths));
    out.add("dt", s.mc.dt);
}

WeightFields linear_weights(const CoefficientSet& c, ScalarField q) {
    WeightFields w;
    if (!c.B_zero) w.b = c.B;
    w.q = std::move(q);
    return w;
}

McSettings with_seed(McSettings mc, std::uint64_t seed) {
    mc.seed = seed;
    return mc;
}

// Start point inside the closed domain for a mesh node.
Vec node_start(const DomainGeometry& dom, const Vec& x) {
    if (classify(dom, x) != Location::exterior) return x;
    return boundary_projection(dom, x, true).proj;
}

}  // namespace

SolutionField solve_linear(const ProblemSpec& spec, const std::vector<Vec>& points, const SolverSettings& s) {
    if (spec.form != ProblemForm::linear) throw std::invalid_argument("solve_linear needs the linear form");
    SolutionField out;
    out.points = points;
    record_settings(out, s);
    WeightFields w = linear_weights(spec.coeffs, spec.coeffs.Q);
    if (s.check_gauge && !points.empty()) {
        GaugeResult g = check_gauge(spec.dom, spec.coeffs, w, points.front(), s);
        record_gauge(out, g, sup_interior(spec.dom, spec.F_data), sup_boundary(spec.dom, spec.phi), s);
    }
    for (std::size_t p = 0; p < points.size(); ++p) {
        PointParts r = linear_point(spec.dom, spec.coeffs, w, spec.F_data, spec.phi, points[p], s.T_max,
                                    with_seed(s.mc, s.mc.seed + p), s.u1_sign, s.kappa_L);
        out.values.push_back(r.total);
        out.volume_parts.push_back(r.volume);
        out.boundary_parts.push_back(r.boundary);
    }
    return out;
}

SolutionField solve_semilinear(const ProblemSpec& spec, const std::vector<Vec>& points, const SolverSettings& s) {
    if (spec.form != ProblemForm::semilinear) throw std::invalid_argument("solve_semilinear needs the semilinear form");
    if (!spec.G.eval) throw std::invalid_argument("semilinear problem without a nonlinearity");
    const DomainGeometry& dom = spec.dom;
    const CoefficientSet& c = spec.coeffs;
    const Nonlinearity& G = spec.G;
    const bool with_z = G.d2 > 0.0;
    auto d1 = [&G](const Vec& x) { return G.d1 ? G.d1(x) : 0.0; };
    ScalarField q_shift = [&c, d1](const Vec& x) { return c.Q(x) - d1(x); };
    WeightFields w = linear_weights(c, q_shift);

    SolutionField out;
    out.points = points;
    record_settings(out, s);

    auto source_for = [&](const GridFunction& u) -> ScalarField {
        return [&u, &G, d1, with_z](const Vec& x) {
            double y = u(x);
            Vec z = with_z ? u.gradient(x) : Vec(Vec::Zero(x.size()));
            return -(G.eval(x, y, z) + d1(x) * y);
        };
    };

    GaugeResult gauge;
    if (s.check_gauge && !points.empty()) gauge = check_gauge(dom, c, w, points.front(), s);

    // Picard on the mesh: u^{m+1} = linear solve with potential Q - d1 and source G(u^m) + d1 u^m.
    Mesh mesh = Mesh::cartesian_for(dom, s.mesh_n);
    GridFunction u(mesh, 0.0);
    std::vector<Vec> starts(mesh.size());
    for (std::size_t k = 0; k < mesh.size(); ++k) starts[k] = node_start(dom, mesh.node(k));
    McSettings node_mc{s.mesh_paths, s.mesh_dt, s.mc.seed, 1};
    bool converged = false;
    for (int m = 0; m < s.picard_max; ++m) {
        if (with_z) u.build_gradients();
        ScalarField F = source_for(u);
        GridFunction next(mesh, 0.0);
        parallel_for(mesh.size(), s.mc.threads, [&](std::size_t k) {
            next.values()[k] = linear_point(dom, c, w, F, spec.phi, starts[k], s.mesh_T_max, node_mc, s.u1_sign,
                                            s.kappa_L)
                                   .total.value;
        });
        double change = 0.0;
        for (std::size_t k = 0; k < mesh.size(); ++k)
            change = std::max(change, std::abs(next.values()[k] - u.values()[k]));
        u = std::move(next);
        out.picard_history.push_back(change);
        if (change <= s.picard_tol) {
            converged = true;
            break;
        }
        const auto& h = out.picard_history;
        if (h.size() > 3 && change > 0.5 * h[h.size() - 4])
            throw PicardStalled("sup-change " + std::to_string(change) + " did not halve over 3 iterations (was " +
                                std::to_string(h[h.size() - 4]) + ")");
    }
    if (!converged)
        throw PicardStalled("no convergence after " + std::to_string(s.picard_max) + " iterations (last change " +
                            std::to_string(out.picard_history.back()) + ")");
    if (with_z) u.build_gradients();
    out.mesh_field = u;
    out.add("picard_iterations", static_cast<double>(out.picard_history.size()));
    out.add("picard_last_change", out.picard_history.back());

    ScalarField F = source_for(out.mesh_field);
    if (s.check_gauge && !points.empty()) record_gauge(out, gauge, sup_interior(dom, F), sup_boundary(dom, spec.phi), s);
    for (std::size_t p = 0; p < points.size(); ++p) {
        PointParts r = linear_point(dom, c, w, F, spec.phi, points[p], s.T_max, with_seed(s.mc, s.mc.seed + p),
                                    s.u1_sign, s.kappa_L);
        out.values.push_back(r.total);
        out.volume_parts.push_back(r.volume);
        out.boundary_parts.push_back(r.boundary);
    }
    return out;
}

BsdeProblem semilinear_bsde(const ProblemSpec& spec, const SolverSettings& s, BsdeMode mode) {
    if (spec.form != ProblemForm::semilinear) throw std::invalid_argument("BSDE form needs the semilinear form");
    const CoefficientSet& c = spec.coeffs;
    const Nonlinearity G = spec.G;
    BsdeProblem bp;
    bp.mode = mode;
    Nonlinearity f;
    ScalarField Q = c.Q;
    f.eval = [Q, G](const Vec& x, double y, const Vec& z) { return Q(x) * y + G.eval(x, y, z); };
    f.d1 = [Q, G](const Vec& x) { return (G.d1 ? G.d1(x) : 0.0) - Q(x); };
    f.d2 = G.d2;
    f.delta = G.delta;
    f.K = G.K;
    bp.generator = f;
    if (spec.phi) {
        ScalarField phi = spec.phi;
        double k = -s.kappa_L;
        bp.Phi = [phi, k](const Vec& x) { return k * phi(x); };
    }
    if (!c.B_zero) {
        VectorField B = c.B;
        double cap = c.cap;
        bp.drift = [B, cap](const Vec& x) { return clip_vector(B(x), cap); };
    }
    return bp;
}

FdProblem to_fd_problem(const ProblemSpec& spec) {
    FdProblem p;
    p.dom = spec.dom;
    p.coeffs = spec.coeffs;
    switch (spec.form) {
        case ProblemForm::linear: {
            ScalarField F = spec.F_data;
            if (F) p.G = [F](const Vec& x, double) { return -F(x); };
            p.Phi = spec.phi;
            break;
        }
        case ProblemForm::semilinear:
        case ProblemForm::mixed_full: {
            Nonlinearity G = spec.G;
            p.G = [G](const Vec& x, double y) { return G.eval(x, y, Vec::Zero(x.size())); };
            p.d1 = G.d1 ? G.d1 : ScalarField([](const Vec&) { return 0.0; });
            p.nonlinear = true;
            p.Phi = spec.form == ProblemForm::mixed_full ? spec.Phi : spec.phi;
            break;
        }
    }
    return p;
}

namespace {

// Composite 3-point Gauss-Legendre nodes and weights on [0, 1] split into n cells.
void composite_gauss(int n, std::vector<double>& t, std::vector<double>& w) {
    static const double g[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    t.clear();
    w.clear();
    double h = 1.0 / n;
    for (int c = 0; c < n; ++c)
        for (int k = 0; k < 3; ++k) {
            t.push_back((c + 0.5 + 0.5 * g[k]) * h);
            w.push_back(0.5 * h * gw[k]);
        }
}

// int_D |Bhat|^p over a disk, polar around c0 with radial grading r = rho t^4 towards c0.
double disk_lp(const DomainGeometry& dom, const CoefficientSet& c, const Vec& c0, double p, int n) {
    std::vector<double> t, w;
    composite_gauss(n, t, w);
    const int nth = 4 * n;
    const Vec rel = c0 - dom.center;
    const double R = dom.radius;
    double sum = 0.0;
    for (int j = 0; j < nth; ++j) {
        double th = 2.0 * std::numbers::pi * (j + 0.5) / nth;
        Vec e = make_vec({std::cos(th), std::sin(th)});
        double b = rel.dot(e);
        double rho = -b + std::sqrt(b * b - rel.squaredNorm() + R * R);
        double ray = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k) {
            double tk = t[k];
            double r = rho * tk * tk * tk * tk;
            double jac = 4.0 * rho * tk * tk * tk;
            Vec x = c0 + r * e;
            double mag = clip_vector(c.Bhat(x), c.cap).norm();
            ray += w[k] * std::pow(mag, p) * r * jac;
        }
        sum += ray;
    }
    return sum * 2.0 * std::numbers::pi / nth;
}

double box_lp(const DomainGeometry& dom, const CoefficientSet& c, double p, int n) {
    std::vector<double> t, w;
    composite_gauss(n, t, w);
    const int d = dom.dim;
    const std::size_t m = t.size();
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= m;
    Vec len = dom.hi - dom.lo;
    double vol = len.prod();
    double sum = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t r = idx;
        Vec x(d);
        double wt = vol;
        for (int a = 0; a < d; ++a) {
            std::size_t k = r % m;
            r /= m;
            x(a) = dom.lo(a) + len(a) * t[k];
            wt *= w[k];
        }
        sum += wt * std::pow(clip_vector(c.Bhat(x), c.cap).norm(), p);
    }
    return sum;
}

}  // namespace

SmallnessReport smallness_check(const DomainGeometry& dom, const CoefficientSet& coeffs, double eps_cfg,
                                int base_resolution) {
    SmallnessReport r;
    r.eps_cfg = eps_cfg;
    if (coeffs.Bhat_zero || !coeffs.Bhat) {
        r.level_norms = {0.0, 0.0, 0.0};
        r.pass = true;
        return r;
    }
    const double p = coeffs.p_exponent;
    for (int level = 0; level < 3; ++level) {
        int n = base_resolution << level;
        double integral;
        if (dom.kind == DomainKind::box) {
            integral = box_lp(dom, coeffs, p, dom.dim == 3 ? std::max(4, n / 4) : n);
        } else {
            if (dom.dim != 2) throw std::invalid_argument("smallness quadrature supports disks and boxes");
            Vec c0 = coeffs.singular_point ? *coeffs.singular_point : dom.center;
            integral = disk_lp(dom, coeffs, c0, p, n);
        }
        r.level_norms.push_back(std::pow(integral, 1.0 / p));
    }
    r.norm = r.level_norms.back();
    double prev = r.level_norms[r.level_norms.size() - 2];
    r.rel_change = r.norm > 0.0 ? std::abs(r.norm - prev) / r.norm : 0.0;
    r.pass = r.norm <= eps_cfg;
    return r;
}

HTransform h_transform(const DomainGeometry& dom, const CoefficientSet& coeffs, const FdResolution& res) {
    HTransform h;
    if (coeffs.Bhat_zero) {
        h.identity = true;
        h.coeffs = coeffs;
        Mesh m = dom.kind == DomainKind::box ? Mesh::cartesian_for(dom, res.n)
                                             : Mesh::polar(dom.center, dom.radius, res.nr, res.nt);
        h.v = GridFunction(m, 0.0);
        h.v.build_gradients();
        return h;
    }
    // Source -2 Bhat: the clipping happens here, so the solve itself runs uncapped.
    CoefficientSet uncapped = coeffs;
    uncapped.cap = std::numeric_limits<double>::infinity();
    VectorField Bhat = coeffs.Bhat;
    double cap = coeffs.cap;
    VectorField src = [Bhat, cap](const Vec& x) { return Vec(-2.0 * clip_vector(Bhat(x), cap)); };
    VSolution vs = solve_v(dom, uncapped, src, res);
    TransformedCoefficients t = transform_coefficients(coeffs, dom, vs.v);
    h.v = t.v;
    h.coeffs = coeffs;
    h.coeffs.B = t.b;
    h.coeffs.B_zero = false;
    h.coeffs.Q = t.q;
    const int d = dom.dim;
    h.coeffs.Bhat = [d](const Vec&) { return Vec(Vec::Zero(d)); };
    h.coeffs.divBhat = [](const Vec&) { return 0.0; };
    h.coeffs.Bhat_zero = true;
    h.coeffs.singular_point.reset();
    return h;
}

SolutionField solve_mixed_full(const ProblemSpec& spec, const std::vector<Vec>& points, const SolverSettings& s) {
    if (spec.form != ProblemForm::mixed_full) throw std::invalid_argument("solve_mixed_full needs the mixed form");
    SmallnessReport sm = smallness_check(spec.dom, spec.coeffs, s.eps_cfg);
    HTransform h = h_transform(spec.dom, spec.coeffs, s.v_resolution);

    ProblemSpec t;
    t.dom = spec.dom;
    t.coeffs = h.coeffs;
    t.form = ProblemForm::semilinear;
    if (h.identity) {
        t.G = spec.G;
        t.phi = spec.Phi;
    } else {
        auto v = std::make_shared<GridFunction>(h.v);
        Nonlinearity G = spec.G;
        t.G = G;
        t.G.eval = [v, G](const Vec& x, double y, const Vec& z) {
            double ev = std::exp((*v)(x));
            return ev * G.eval(x, y / ev, z);
        };
        if (G.K) t.G.K = [v, G](const Vec& x) { return std::exp((*v)(x)) * G.K(x); };
        if (spec.Phi) {
            ScalarField Phi = spec.Phi;
            t.phi = [v, Phi](const Vec& x) { return std::exp((*v)(x)) * Phi(x); };
        }
    }

    std::optional<GaugeResult> zhat_gauge;
    if (s.check_gauge && !h.identity && !points.empty()) {
        WeightFields w{h.coeffs.B, h.coeffs.Q, &h.v};
        GaugeResult g = gauge_estimate(spec.dom, h.coeffs, w, points.front(), s.gauge_T_max, s.gauge_mc);
        if (g.divergent)
            throw GaugeDiverges("gauge of Zhat, E0[int Zhat dL], does not level off (estimate " +
                                std::to_string(g.value.value) + ")");
        zhat_gauge = g;
    }

    SolutionField u;
    if (s.use_bsde_route) {
        u.points = points;
        record_settings(u, s);
        BsdeProblem bp = semilinear_bsde(t, s, BsdeMode::L1);
        BsdeSettings bs = s.bsde;
        for (std::size_t p = 0; p < points.size(); ++p) {
            bs.mc.seed = s.bsde.mc.seed + p;
            BsdeSolution sol = solve_infinite_horizon(bp, t.dom, t.coeffs, points[p], bs);
            u.values.push_back(sol.y0);
        }
        u.add("bsde_route", 1.0);
    } else {
        u = solve_semilinear(t, points, s);
    }

    if (!h.identity) {
        for (std::size_t p = 0; p < points.size(); ++p) {
            double e = std::exp(-h.v(points[p]));
            u.values[p].value *= e;
            u.values[p].std_error *= e;
        }
    }
    const auto& vv = h.v.values();
    u.add("v_min", vv.empty() ? 0.0 : *std::min_element(vv.begin(), vv.end()));
    u.add("v_max", vv.empty() ? 0.0 : *std::max_element(vv.begin(), vv.end()));
    u.add("smallness_norm", sm.norm);
    u.add("smallness_pass", sm.pass ? 1.0 : 0.0);
    u.add("smallness_rel_change", sm.rel_change);
    u.add("cap", spec.coeffs.cap);
    if (zhat_gauge) u.add("zhat_gauge", zhat_gauge->value.value);
    return u;
}

SemigroupIdentity semigroup_identity_check(const ProblemSpec& spec, const HTransform& h, const Vec& x0,
                                           const ScalarField& f, double t, const McSettings& mc, double kappa_L) {
    const DomainGeometry& dom = spec.dom;
    const CoefficientSet& c = spec.coeffs;
    SemigroupIdentity r;

    // Direct: drift B - Bhat, weight exp(int (Q - div Bhat) ds + kappa_L int <Bhat, n> dL); the boundary
    // weight cancels the Robin term 1/2 dw/dgamma = <Bhat, n> w in the Ito expansion.
    const double cap = c.cap;
    VectorField drift = [&c, cap](const Vec& x) {
        Vec b = c.B_zero ? Vec(Vec::Zero(x.size())) : clip_vector(c.B(x), cap);
        if (!c.Bhat_zero) b -= clip_vector(c.Bhat(x), cap);
        return b;
    };
    const long K = step_count(t, mc.dt);
    ReflectedStepper stepper(dom, c, DriftMode::L1, drift, mc.dt);
    std::vector<double> logw(mc.n_paths), fx(mc.n_paths);
    parallel_for(mc.n_paths, mc.threads, [&](std::size_t i) {
        RngStream rng(mc.seed, i);
        ReflectedStepper::Step s;
        Vec x = x0;
        double lw = 0.0;
        for (long k = 0; k < K; ++k) {
            double pot = c.Q(x) - (c.Bhat_zero ? 0.0 : div_Bhat(c, dom, x));
            stepper.step(x, rng, s);
            if (s.dL > 0.0 && !c.Bhat_zero) lw += kappa_L * clip_vector(c.Bhat(s.next), cap).dot(s.n) * s.dL;
            lw += pot * mc.dt;
            x = s.next;
        }
        logw[i] = lw;
        fx[i] = f(x);
    });
    r.direct = summarize_weighted(logw, fx, t);

    // Transformed: e^{-v(x0)} E0[Z~_t (f e^v)(X_t)] on independent draws.
    const GridFunction& v = h.v;
    ScalarField fe = [&f, &v](const Vec& x) { return f(x) * std::exp(v(x)); };
    WeightFields w = linear_weights(h.coeffs, h.coeffs.Q);
    Estimate tr = semigroup_estimate(dom, h.coeffs, w, x0, fe, t, with_seed(mc, mc.seed + 1000003));
    double e = std::exp(-v(x0));
    tr.value *= e;
    tr.std_error *= e;
    r.transformed = tr;
    r.z = z_score(r.direct, r.transformed);
    return r;
}

MarkovReport markov_consistency_check(const ProblemSpec& spec, const GridFunction& u0, const BsdeSolution& y,
                                      const BsdeProblem& bp, const Vec& x0, double t_probe, const McSettings& mc,
                                      double budget) {
    const DomainGeometry& dom = spec.dom;
    const long K = step_count(t_probe, mc.dt);
    ReflectedStepper stepper(dom, spec.coeffs, bp.drift ? DriftMode::L1 : DriftMode::L0, bp.drift, mc.dt);
    const bool l1 = bp.mode == BsdeMode::L1;
    const Nonlinearity& g = bp.generator;
    std::vector<double> absd(mc.n_paths), sd(mc.n_paths);
    parallel_for(mc.n_paths, mc.threads, [&](std::size_t i) {
        RngStream rng(mc.seed, i);
        ReflectedStepper::Step s;
        Vec x = x0;
        double D = 0.0;
        for (long k = 0; k < K; ++k) {
            if (l1) D += (g.d1 ? g.discount(x) : g.delta * g.d2 * g.d2) * mc.dt;
            stepper.step(x, rng, s);
            x = s.next;
        }
        // L1 regressions fit e^{D_t} Y_t.
        double yt = y.y_at(dom, t_probe, x) * (l1 ? std::exp(-D) : 1.0);
        double diff = u0(x) - yt;
        sd[i] = diff;
        absd[i] = std::abs(diff);
    });
    MarkovReport r;
    r.mean_abs = summarize(absd, t_probe);
    r.mean_signed = summarize(sd, t_probe);
    r.budget = budget;
    r.pass = r.mean_abs.value <= 3.0 * r.mean_abs.std_error + budget;
    return r;
}

CalibrationResult calibrate(const SolverSettings& s) {
    CalibrationResult out;
    const std::vector<Vec> pts = {make_vec({0.0, 0.0}), make_vec({0.5, 0.0})};
    for (const char* family : {"constant_linear", "quadratic_linear"}) {
        Preset pr = make_preset(family);
        FdResult fd = fd_solve(to_fd_problem(pr.spec));
        WeightFields w = linear_weights(pr.spec.coeffs, pr.spec.coeffs.Q);
        for (std::size_t p = 0; p < pts.size(); ++p) {
            PointParts r = linear_point(pr.spec.dom, pr.spec.coeffs, w, pr.spec.F_data, pr.spec.phi, pts[p], s.T_max,
                                        with_seed(s.mc, s.mc.seed + p), 1.0, 1.0);
            out.entries.push_back({family, pts[p], fd.u(pts[p]), r.volume, r.boundary});
        }
    }
    out.max_error = std::numeric_limits<double>::infinity();
    for (double kappa : {-2.0, -1.0, 1.0, 2.0})
        for (double sign : {-1.0, 1.0}) {
            double err = 0.0;
            for (const auto& e : out.entries)
                err = std::max(err, std::abs(sign * e.volume.value + kappa * e.boundary.value - e.oracle));
            out.table.emplace_back(kappa, sign, err);
            if (err < out.max_error) {
                out.max_error = err;
                out.kappa_L = kappa;
                out.u1_sign = sign;
            }
        }
    return out;
}

}  // namespace rbsde
