#include "rbsde/functionals.hpp"

#include "rbsde/parallel.hpp"

#include <cmath>

namespace rbsde {

namespace {

void add_compensated(double& sum, double& comp, double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) comp += (sum - t) + x;
    else comp += (x - t) + sum;
    sum = t;
}

}  // namespace

void WeightAccumulator::update(const Vec& x, const Vec& dM, double dt) {
    if (w_->b) {
        Vec b = clip_vector(w_->b(x), coeffs_->cap);
        Mat A = coeffs_->A_constant ? *coeffs_->A_constant : coeffs_->A(x);
        Vec Ainv_b = A.ldlt().solve(b);
        add_compensated(mt_, mt_c_, Ainv_b.dot(dM) - 0.5 * b.dot(Ainv_b) * dt);
    }
    if (w_->q) add_compensated(eq_, eq_c_, w_->q(x) * dt);
}

WeightTrace accumulate_weights(const PathBundle& path, const CoefficientSet& coeffs, const WeightFields& w,
                               bool want_zhat) {
    if (want_zhat && !w.v) throw MissingV("Zhat requested without the auxiliary function v");
    WeightTrace tr;
    tr.path = &path;
    const std::size_t K = path.steps();
    tr.log_mtilde.resize(K + 1);
    tr.log_eq.resize(K + 1);
    tr.log_z.resize(K + 1);
    WeightAccumulator acc(coeffs, w);
    const double dt = K > 0 ? path.times[1] - path.times[0] : 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
        tr.log_mtilde[k] = acc.log_mtilde();
        tr.log_eq[k] = acc.log_eq();
        tr.log_z[k] = tr.log_mtilde[k] + tr.log_eq[k];
        if (k < K) acc.update(path.states[k], path.mart_increments[k], dt);
    }
    if (want_zhat) {
        tr.log_zhat.resize(K + 1);
        double v0 = (*w.v)(path.states[0]);
        for (std::size_t k = 0; k <= K; ++k) tr.log_zhat[k] = tr.log_z[k] + (*w.v)(path.states[k]) - v0;
    }
    return tr;
}

GirsanovReport girsanov_consistency(const DomainGeometry& dom, const CoefficientSet& coeffs, const VectorField& b,
                                    const Vec& x0, const ScalarField& f, double t, const McSettings& mc) {
    const long K = step_count(t, mc.dt);
    WeightFields w;
    w.b = b;
    ReflectedStepper driftless(dom, coeffs, DriftMode::L0, nullptr, mc.dt);
    ReflectedStepper drifted(dom, coeffs, DriftMode::L1, b, mc.dt);
    std::vector<double> log_w(mc.n_paths), f0(mc.n_paths), f1(mc.n_paths);
    parallel_for(mc.n_paths, mc.threads, [&](std::size_t i) {
        ReflectedStepper::Step s;
        {
            RngStream rng(mc.seed, i);
            WeightAccumulator acc(coeffs, w);
            Vec x = x0;
            for (long k = 0; k < K; ++k) {
                driftless.step(x, rng, s);
                acc.update(x, s.dM, mc.dt);
                x = s.next;
            }
            log_w[i] = acc.log_mtilde();
            f0[i] = f(x);
        }
        {
            RngStream rng(mc.seed, i);
            Vec x = x0;
            for (long k = 0; k < K; ++k) {
                drifted.step(x, rng, s);
                x = s.next;
            }
            f1[i] = f(x);
        }
    });
    GirsanovReport r;
    r.lhs = summarize_weighted(log_w, f0, t);
    r.rhs = summarize(f1, t);
    r.z = z_score(r.lhs, r.rhs);
    return r;
}

Estimate semigroup_estimate(const DomainGeometry& dom, const CoefficientSet& coeffs, const WeightFields& w,
                            const Vec& x0, const ScalarField& f, double t, const McSettings& mc) {
    const long K = step_count(t, mc.dt);
    ReflectedStepper stepper(dom, coeffs, DriftMode::L0, nullptr, mc.dt);
    std::vector<double> log_w(mc.n_paths), fx(mc.n_paths);
    const double v0 = w.v ? (*w.v)(x0) : 0.0;
    parallel_for(mc.n_paths, mc.threads, [&](std::size_t i) {
        RngStream rng(mc.seed, i);
        WeightAccumulator acc(coeffs, w);
        ReflectedStepper::Step s;
        Vec x = x0;
        for (long k = 0; k < K; ++k) {
            stepper.step(x, rng, s);
            acc.update(x, s.dM, mc.dt);
            x = s.next;
        }
        log_w[i] = acc.log_z() + (w.v ? (*w.v)(x) - v0 : 0.0);
        fx[i] = f(x);
    });
    return summarize_weighted(log_w, fx, t);
}

DecayFit fit_decay(const std::vector<double>& t_grid, const std::vector<double>& sup_means) {
    DecayFit fit;
    fit.sup_means = sup_means;
    std::vector<double> ys;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (sup_means[i] > 0.0) {
            fit.times.push_back(t_grid[i]);
            ys.push_back(std::log(sup_means[i]));
        } else {
            fit.dropped_times.push_back(t_grid[i]);
        }
    }
    const std::size_t n = fit.times.size();
    if (n < 2) return fit;
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tm += fit.times[i];
        ym += ys[i];
    }
    tm /= n;
    ym /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (fit.times[i] - tm) * (ys[i] - ym);
        sxx += (fit.times[i] - tm) * (fit.times[i] - tm);
    }
    double slope = sxy / sxx;
    double intercept = ym - slope * tm;
    fit.beta_hat = -slope;
    fit.K_hat = std::exp(intercept);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = ys[i] - (intercept + slope * fit.times[i]);
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / n);
    return fit;
}

DecayFit decay_rate_estimate(const DomainGeometry& dom, const CoefficientSet& coeffs, const WeightFields& w,
                             const std::vector<Vec>& x0s, const std::vector<double>& t_grid, const McSettings& mc) {
    if (t_grid.size() < 3) throw std::invalid_argument("decay fit needs at least 3 grid times");
    if (x0s.empty()) throw std::invalid_argument("decay fit needs start points");
    std::vector<long> marks;
    for (double t : t_grid) marks.push_back(step_count(t, mc.dt));
    const long K = *std::max_element(marks.begin(), marks.end());
    ReflectedStepper stepper(dom, coeffs, DriftMode::L0, nullptr, mc.dt);
    std::vector<double> sup(t_grid.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t p = 0; p < x0s.size(); ++p) {
        const Vec& x0 = x0s[p];
        std::vector<std::vector<double>> logs(t_grid.size(), std::vector<double>(mc.n_paths));
        parallel_for(mc.n_paths, mc.threads, [&](std::size_t i) {
            RngStream rng(mc.seed + p, i);
            WeightAccumulator acc(coeffs, w);
            ReflectedStepper::Step s;
            Vec x = x0;
            for (long k = 0; k <= K; ++k) {
                for (std::size_t g = 0; g < marks.size(); ++g)
                    if (marks[g] == k) logs[g][i] = acc.log_z();
                if (k == K) break;
                stepper.step(x, rng, s);
                acc.update(x, s.dM, mc.dt);
                x = s.next;
            }
        });
        std::vector<double> ones(mc.n_paths, 1.0);
        for (std::size_t g = 0; g < t_grid.size(); ++g)
            sup[g] = std::max(sup[g], summarize_weighted(logs[g], ones).value);
    }
    return fit_decay(t_grid, sup);
}

GaugeResult gauge_estimate(const DomainGeometry& dom, const CoefficientSet& coeffs, const WeightFields& w,
                           const Vec& x0, double T_max, const McSettings& mc) {
    if (!(T_max >= 1.0)) throw std::invalid_argument("gauge truncation needs T_max >= 1");
    GaugeResult g;
    g.checkpoints = {0.25 * T_max, 0.5 * T_max, T_max};
    const std::vector<double> decay_grid = {0.25 * T_max, 0.5 * T_max, 0.75 * T_max, T_max};
    std::vector<long> gauge_marks, decay_marks;
    for (double t : g.checkpoints) gauge_marks.push_back(step_count(t, mc.dt));
    for (double t : decay_grid) decay_marks.push_back(step_count(t, mc.dt));
    const long K = gauge_marks.back();
    ReflectedStepper stepper(dom, coeffs, DriftMode::L0, nullptr, mc.dt);
    const double v0 = w.v ? (*w.v)(x0) : 0.0;
    std::vector<std::vector<double>> partial(3, std::vector<double>(mc.n_paths));
    std::vector<std::vector<double>> logs(4, std::vector<double>(mc.n_paths));
    std::vector<double> late_L(mc.n_paths);
    parallel_for(mc.n_paths, mc.threads, [&](std::size_t i) {
        RngStream rng(mc.seed, i);
        WeightAccumulator acc(coeffs, w);
        ReflectedStepper::Step s;
        Vec x = x0;
        double sum = 0.0, comp = 0.0, L_half = 0.0, L = 0.0;
        for (long k = 0; k <= K; ++k) {
            for (int c = 0; c < 3; ++c)
                if (gauge_marks[c] == k) partial[c][i] = sum + comp;
            for (int c = 0; c < 4; ++c)
                if (decay_marks[c] == k) logs[c][i] = acc.log_z();
            if (k == gauge_marks[1]) L_half = L;
            if (k == K) break;
            double lz = acc.log_z() + (w.v ? (*w.v)(x) - v0 : 0.0);
            stepper.step(x, rng, s);
            if (s.dL > 0.0) add_compensated(sum, comp, std::exp(lz) * s.dL);
            L += s.dL;
            acc.update(x, s.dM, mc.dt);
            x = s.next;
        }
        late_L[i] = L - L_half;
    });
    for (int c = 0; c < 3; ++c) g.partial_sums.push_back(summarize(partial[c], g.checkpoints[c]));
    g.value = g.partial_sums.back();
    std::vector<double> ones(mc.n_paths, 1.0), means;
    for (int c = 0; c < 4; ++c) means.push_back(summarize_weighted(logs[c], ones).value);
    g.decay = fit_decay(decay_grid, means);
    g.boundary_rate = summarize(late_L).value / (0.5 * T_max);

    std::vector<double> inc1(mc.n_paths), inc2(mc.n_paths);
    for (long i = 0; i < mc.n_paths; ++i) {
        inc1[i] = partial[1][i] - partial[0][i];
        inc2[i] = partial[2][i] - partial[1][i];
    }
    Estimate e1 = summarize(inc1), e2 = summarize(inc2);
    bool no_decay = !(g.decay.beta_hat > kDecayFloor);
    bool not_leveling = e2.value > 3.0 * e2.std_error && e2.value >= e1.value;
    g.divergent = no_decay || not_leveling;
    if (!g.divergent)
        g.tail = g.decay.K_hat * std::exp(-g.decay.beta_hat * T_max) * g.boundary_rate / g.decay.beta_hat;
    else
        g.tail = std::numeric_limits<double>::infinity();
    return g;
}

SandwichResult weighted_localtime_sandwich(const DomainGeometry& dom, const CoefficientSet& coeffs,
                                           const WeightFields& w, const std::vector<Vec>& x0s, double t,
                                           const McSettings& mc) {
    if (!(t > 0.0)) throw std::invalid_argument("sandwich time must be positive");
    const long K = step_count(t, mc.dt);
    ReflectedStepper stepper(dom, coeffs, DriftMode::L0, nullptr, mc.dt);
    SandwichResult r;
    for (std::size_t p = 0; p < x0s.size(); ++p) {
        const Vec& x0 = x0s[p];
        std::vector<double> samples(mc.n_paths);
        parallel_for(mc.n_paths, mc.threads, [&](std::size_t i) {
            RngStream rng(mc.seed + p, i);
            WeightAccumulator acc(coeffs, w);
            ReflectedStepper::Step s;
            Vec x = x0;
            double sum = 0.0, comp = 0.0;
            for (long k = 0; k < K; ++k) {
                double lz = acc.log_z();
                stepper.step(x, rng, s);
                if (s.dL > 0.0) add_compensated(sum, comp, std::exp(lz) * s.dL);
                acc.update(x, s.dM, mc.dt);
                x = s.next;
            }
            samples[i] = sum + comp;
        });
        r.values.push_back(summarize(samples, t));
    }
    r.min = r.values.front();
    r.max = r.values.front();
    for (const auto& e : r.values) {
        if (e.value < r.min.value) r.min = e;
        if (e.value > r.max.value) r.max = e;
    }
    return r;
}

}  // namespace rbsde
