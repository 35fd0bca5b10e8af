#include "rbsde/bsde.hpp"

#include "rbsde/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rbsde {

namespace {

constexpr std::size_t kBlock = 1024;  // fixed reduction blocks keep sums independent of the thread count
constexpr double kBumpWidth = 0.35;
constexpr double kRankTol = 1e-13;

std::size_t n_blocks(std::size_t n) { return (n + kBlock - 1) / kBlock; }

double sample_discount(const Nonlinearity& g, const Vec& x) { return g.d1 ? g.discount(x) : g.delta * g.d2 * g.d2; }

// Least squares of y on the basis rows; standardized normal equations, eigen-solve.
std::vector<double> regress(const std::vector<double>& phi, int m, const std::vector<double>& y, int threads) {
    const std::size_t N = y.size();
    const std::size_t B = n_blocks(N);
    std::vector<Eigen::MatrixXd> grams(B);
    std::vector<Eigen::VectorXd> rhss(B);
    parallel_for(B, threads, [&](std::size_t b) {
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
        std::size_t end = std::min(N, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < end; ++i) {
            Eigen::Map<const Eigen::VectorXd> row(&phi[i * m], m);
            G.selfadjointView<Eigen::Lower>().rankUpdate(row);
            r += row * y[i];
        }
        grams[b] = G.selfadjointView<Eigen::Lower>();
        rhss[b] = r;
    });
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
    for (std::size_t b = 0; b < B; ++b) {
        G += grams[b];
        r += rhss[b];
    }
    Eigen::VectorXd scale(m);
    for (int k = 0; k < m; ++k) {
        if (!(G(k, k) > 0.0)) throw SingularRegression("basis function " + std::to_string(k) + " vanishes on the sample");
        scale(k) = 1.0 / std::sqrt(G(k, k));
    }
    Eigen::MatrixXd Gs = scale.asDiagonal() * G * scale.asDiagonal();
    Eigen::VectorXd rs = scale.asDiagonal() * r;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gs);
    const auto& ev = es.eigenvalues();
    if (!(ev(0) > kRankTol * ev(m - 1)))
        throw SingularRegression("normal equations lost rank (relative eigenvalue " +
                                 std::to_string(ev(0) / ev(m - 1)) + "); shrink the basis or raise n_paths");
    Eigen::VectorXd c = es.eigenvectors() * (ev.cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * rs));
    c = scale.asDiagonal() * c;
    return std::vector<double>(c.data(), c.data() + m);
}

double dot_row(const double* row, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += row[k] * c[k];
    return s;
}

Vec load(const std::vector<float>& a, std::size_t slot, int d) {
    Vec x(d);
    for (int k = 0; k < d; ++k) x(k) = a[slot * d + k];
    return x;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::size_t k = static_cast<std::size_t>(q * (v.size() - 1));
    std::nth_element(v.begin(), v.begin() + k, v.end());
    return v[k];
}

}  // namespace

RegressionBasis::RegressionBasis(const DomainGeometry& dom, int size) : dim_(dom.dim), size_(size) {
    if (size < 1) throw std::invalid_argument("regression basis needs at least one function");
    if (dom.kind == DomainKind::box) {
        center_ = 0.5 * (dom.lo + dom.hi);
        scale_ = 0.5 * (dom.hi - dom.lo).maxCoeff();
    } else {
        center_ = dom.center;
        scale_ = dom.radius;
    }
    n_poly_ = std::min(size, 1 + dim_ + dim_ * (dim_ + 1) / 2);
    bump_width_ = kBumpWidth;
    int n_bumps = size - n_poly_;
    for (int k = 0; k < n_bumps; ++k) {
        Vec c = Vec::Zero(dim_);
        if (dim_ == 1) {
            c(0) = k % 2 == 0 ? 0.5 : -0.5;
        } else if (dim_ == 2) {
            double th = 2.0 * std::numbers::pi * k / n_bumps;
            c << 0.5 * std::cos(th), 0.5 * std::sin(th);
        } else {
            c(k % 3) = (k / 3) % 2 == 0 ? 0.5 : -0.5;
        }
        bumps_.push_back(c);
    }
}

void RegressionBasis::eval(const Vec& x, double* out) const {
    Vec xi = (x - center_) / scale_;
    int k = 0;
    auto put = [&](double v) {
        if (k < n_poly_) out[k] = v;
        ++k;
    };
    put(1.0);
    for (int a = 0; a < dim_; ++a) put(xi(a));
    for (int a = 0; a < dim_; ++a)
        for (int b = a; b < dim_; ++b) put(xi(a) * xi(b));
    k = n_poly_;
    for (const Vec& c : bumps_) out[k++] = std::exp(-(xi - c).squaredNorm() / (2.0 * bump_width_ * bump_width_));
}

double BsdeSolution::y_at(const DomainGeometry& dom, double t, const Vec& x) const {
    if (coefficients.empty()) return y0.value;
    long j = std::clamp<long>(static_cast<long>(std::floor(t / regression_dt + 1e-9)), 0,
                              static_cast<long>(coefficients.size()) - 1);
    const auto& c = coefficients[j];
    if (c.empty()) return y0.value;
    RegressionBasis basis(dom, basis_size);
    std::vector<double> row(basis_size);
    basis.eval(x, row.data());
    return dot_row(row.data(), c);
}

BoundaryPotential boundary_potential(const DomainGeometry& dom, const CoefficientSet& coeffs, const BsdeProblem& p,
                                     const Vec& x0, double T_max, const McSettings& mc) {
    BoundaryPotential out;
    out.p0.n_paths = mc.n_paths;
    out.p0.t_max = T_max;
    if (!p.Phi) return out;
    WeightFields w{nullptr, p.q_tilde, nullptr};
    out.gauge = gauge_estimate(dom, coeffs, w, x0, std::max(T_max, 1.0), mc);
    if (out.gauge.divergent)
        throw GaugeDiverges("boundary gauge E[int e^{int q~} dL] shows no decay at x0 (boundary rate " +
                            std::to_string(out.gauge.boundary_rate) + ")");
    double sup_phi = 0.0;
    for (const Vec& y : boundary_samples(dom, 64)) sup_phi = std::max(sup_phi, std::abs(p.Phi(y)));
    out.tail = sup_phi * out.gauge.tail;

    ReflectedStepper stepper(dom, coeffs, p.drift ? DriftMode::L1 : DriftMode::L0, p.drift, mc.dt);
    const long K = step_count(T_max, mc.dt);
    std::vector<double> samples(mc.n_paths);
    parallel_for(samples.size(), mc.threads, [&](std::size_t i) {
        RngStream rng(mc.seed, i);
        ReflectedStepper::Step s;
        Vec x = x0;
        double qint = 0.0, sum = 0.0;
        for (long k = 0; k < K; ++k) {
            double qx = p.q_tilde ? p.q_tilde(x) : 0.0;
            stepper.step(x, rng, s);
            if (s.dL > 0.0) sum += std::exp(qint) * p.Phi(s.next) * s.dL;
            qint += qx * mc.dt;
            x = s.next;
        }
        samples[i] = -sum;
    });
    out.p0 = summarize(samples, T_max);
    return out;
}

BsdeSolution solve_truncated(const BsdeProblem& p, const DomainGeometry& dom, const CoefficientSet& coeffs,
                             const Vec& x0, double horizon, const BsdeSettings& s) {
    const McSettings& mc = s.mc;
    if (s.stride < 1) throw std::invalid_argument("regression stride must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (signed_distance(dom, x0) > dom.eps_geom) throw std::invalid_argument("start point lies outside the domain");
    const int d = dom.dim;
    const std::size_t N = static_cast<std::size_t>(mc.n_paths);
    const long K = step_count(horizon, mc.dt);
    const long J = std::max<long>(1, K / s.stride);
    const int stride = static_cast<int>(K / J);
    const double Dt = stride * mc.dt;
    const long j_half = J / 2;
    const bool l1 = p.mode == BsdeMode::L1;
    const bool z_feedback = p.generator.d2 > 0.0;
    const bool store_dM = z_feedback || s.track_z;
    const Nonlinearity& gen = p.generator;

    // Coarse-grid storage, slot j * N + i.
    std::vector<float> X((J + 1) * N * d), Bsum(J * N);
    std::vector<float> dM(store_dM ? J * N * d : 0);
    std::vector<double> Dcum(l1 ? (J + 1) * N : 0);
    std::vector<double> dM0(N * d), D_half(N);

    ReflectedStepper stepper(dom, coeffs, p.drift ? DriftMode::L1 : DriftMode::L0, p.drift, mc.dt);
    parallel_for(N, mc.threads, [&](std::size_t i) {
        RngStream rng(mc.seed, i);
        ReflectedStepper::Step st;
        Vec x = x0;
        double qint = 0.0, dint = 0.0;
        for (long j = 0; j < J; ++j) {
            for (int a = 0; a < d; ++a) X[(j * N + i) * d + a] = static_cast<float>(x(a));
            if (l1) Dcum[j * N + i] = dint;
            if (j == j_half) D_half[i] = dint;
            Vec block_dM = Vec::Zero(d);
            double bsum = 0.0;
            // Boundary payments carry the block's e^{D_j}; their discount inside the block comes from the
            // generator step, like the rest of the y-dependence.
            const double block_scale = l1 ? std::exp(dint) : 1.0;
            for (int k = 0; k < stride; ++k) {
                double qx = p.q_tilde ? p.q_tilde(x) : 0.0;
                double dx = sample_discount(gen, x);
                stepper.step(x, rng, st);
                if (st.dL > 0.0 && p.Phi) bsum += block_scale * std::exp(qint) * p.Phi(st.next) * st.dL;
                block_dM += st.dM;
                qint += qx * mc.dt;
                dint += dx * mc.dt;
                x = st.next;
            }
            Bsum[j * N + i] = static_cast<float>(bsum);
            if (store_dM)
                for (int a = 0; a < d; ++a) dM[(j * N + i) * d + a] = static_cast<float>(block_dM(a));
            if (j == 0)
                for (int a = 0; a < d; ++a) dM0[i * d + a] = block_dM(a);
        }
        for (int a = 0; a < d; ++a) X[(J * N + i) * d + a] = static_cast<float>(x(a));
        if (l1) Dcum[J * N + i] = dint;
        if (j_half == J) D_half[i] = dint;
    });

    RegressionBasis basis(dom, s.basis_size);
    const int m = basis.size();
    BsdeSolution sol;
    sol.horizon = horizon;
    sol.regression_dt = Dt;
    sol.basis_size = m;
    sol.coefficients.assign(J + 1, {});
    sol.z0 = Vec::Zero(d);

    std::vector<double> acc(N, 0.0), yhat_next(N, 0.0), phi(N * m), resp(N), pred(N), zs(N * d, 0.0);
    std::vector<double> sup_y(s.track_z ? N : 0, 0.0), z2(s.track_z ? N : 0, 0.0);
    std::vector<std::vector<double>> zc(d);  // Z regression coefficients at the current step (before A^-1)
    std::vector<double> prev_c;              // Y coefficients of step j + 1
    const std::size_t B = n_blocks(N);
    const long summary_every = std::max<long>(1, J / 50);

    auto eval_basis = [&](long j) {
        parallel_for(B, mc.threads, [&](std::size_t b) {
            for (std::size_t i = b * kBlock; i < std::min(N, (b + 1) * kBlock); ++i)
                basis.eval(load(X, j * N + i, d), &phi[i * m]);
        });
    };

    for (long j = J - 1; j >= 0; --j) {
        eval_basis(j);
        // Z_j = A^-1 E[(Y_{j+1} - c) dM_j | X_j] / Dt, centered with the previous fit at X_j.
        bool need_z = z_feedback || s.track_z;
        if (need_z && j > 0) {
            for (int a = 0; a < d; ++a) {
                parallel_for(N, mc.threads, [&](std::size_t i) {
                    double c = prev_c.empty() ? 0.0 : dot_row(&phi[i * m], prev_c);
                    resp[i] = (acc[i] - c) * dM[(j * N + i) * d + a] / Dt;
                });
                zc[a] = regress(phi, m, resp, mc.threads);
            }
        }
        Vec z0_here = Vec::Zero(d);
        if (j == 0) {
            double mean_next = compensated_sum(acc) / static_cast<double>(N);
            for (int a = 0; a < d; ++a) {
                std::vector<double> t(N);
                for (std::size_t i = 0; i < N; ++i) t[i] = (acc[i] - mean_next) * dM0[i * d + a] / Dt;
                z0_here(a) = compensated_sum(t) / static_cast<double>(N);
            }
            z0_here = coeffs.A(x0).ldlt().solve(z0_here);
            sol.z0 = z0_here;
        }
        parallel_for(B, mc.threads, [&](std::size_t b) {
            for (std::size_t i = b * kBlock; i < std::min(N, (b + 1) * kBlock); ++i) {
                Vec z = Vec::Zero(d);
                if (j == 0) {
                    z = z0_here;
                } else if (need_z) {
                    for (int a = 0; a < d; ++a) z(a) = dot_row(&phi[i * m], zc[a]);
                    z = coeffs.A(load(X, j * N + i, d)).ldlt().solve(z);
                }
                if (s.track_z) z2[i] += z.squaredNorm() * Dt;
                for (int a = 0; a < d; ++a) zs[i * d + a] = z_feedback ? z(a) : 0.0;
            }
        });
        // Generator part of the step j -> j + 1 on the solved scale. Explicit: f(X_j, Y_{j+1}) Dt.
        // Trapezoidal: (f(X_j, Y_j) + f(X_{j+1}, Y_{j+1})) Dt / 2 with Y_j from the explicit predictor.
        // In L1 mode both are the exact image of the direct step under Y^ = e^{D} Y.
        auto increment = [&](std::size_t i, const double* y_left) {
            Vec x = load(X, j * N + i, d);
            Vec z = Eigen::Map<const Vec>(&zs[i * d], d);
            double y = yhat_next[i];
            double Dj = l1 ? Dcum[j * N + i] : 0.0, Dn = l1 ? Dcum[(j + 1) * N + i] : 0.0;
            double ej = std::exp(-Dj), en = std::exp(-Dn);
            double g;
            if (y_left) {
                Vec x_next = load(X, (j + 1) * N + i, d);
                g = 0.5 * (gen.eval(x, *y_left * ej, z * ej) + gen.eval(x_next, y * en, z * en));
            } else {
                g = gen.eval(x, y * en, z * en);
            }
            return std::exp(Dj) * g * Dt + (l1 ? std::expm1(Dj - Dn) * y : 0.0);
        };
        if (s.trapezoidal) {
            parallel_for(N, mc.threads, [&](std::size_t i) { pred[i] = acc[i] + increment(i, nullptr) - Bsum[j * N + i]; });
            if (j == 0) {
                double mean = compensated_sum(pred) / static_cast<double>(N);
                std::fill(pred.begin(), pred.end(), mean);
            } else {
                std::vector<double> cp = regress(phi, m, pred, mc.threads);
                parallel_for(N, mc.threads, [&](std::size_t i) { pred[i] = dot_row(&phi[i * m], cp); });
            }
        }
        parallel_for(N, mc.threads, [&](std::size_t i) {
            acc[i] += increment(i, s.trapezoidal ? &pred[i] : nullptr) - Bsum[j * N + i];
        });
        if (j == 0) break;
        std::vector<double> c = regress(phi, m, acc, mc.threads);
        parallel_for(N, mc.threads, [&](std::size_t i) { yhat_next[i] = dot_row(&phi[i * m], c); });
        if (s.track_z)
            for (std::size_t i = 0; i < N; ++i) sup_y[i] = std::max(sup_y[i], std::abs(yhat_next[i]));
        // Report Y on the original scale: L1 mode solves for e^{D_t} Y_t.
        auto original = [&](std::size_t i) { return l1 ? yhat_next[i] * std::exp(-Dcum[j * N + i]) : yhat_next[i]; };
        if (j == j_half) {
            std::vector<double> r(N);
            for (std::size_t i = 0; i < N; ++i) {
                double y = original(i);
                r[i] = std::exp(2.0 * D_half[i]) * y * y;
            }
            sol.decay_residual = compensated_sum(r) / static_cast<double>(N);
        }
        if (j % summary_every == 0) {
            std::vector<double> ys(N);
            for (std::size_t i = 0; i < N; ++i) ys[i] = original(i);
            sol.summary_times.push_back(j * Dt);
            sol.y_mean.push_back(compensated_sum(ys) / static_cast<double>(N));
            sol.y_q05.push_back(quantile(ys, 0.05));
            sol.y_q95.push_back(quantile(ys, 0.95));
        }
        sol.coefficients[j] = c;
        prev_c = std::move(c);
    }
    std::reverse(sol.summary_times.begin(), sol.summary_times.end());
    std::reverse(sol.y_mean.begin(), sol.y_mean.end());
    std::reverse(sol.y_q05.begin(), sol.y_q05.end());
    std::reverse(sol.y_q95.begin(), sol.y_q95.end());

    sol.samples = acc;
    sol.y0 = summarize(acc, horizon);
    if (s.track_z) {
        for (std::size_t i = 0; i < N; ++i) sup_y[i] = std::max(sup_y[i], std::abs(acc[i]));
        sol.sup_abs_y = std::move(sup_y);
        sol.int_z2 = std::move(z2);
    }
    std::vector<double> eh(N);
    for (std::size_t i = 0; i < N; ++i) eh[i] = std::exp(2.0 * D_half[i]);
    double m2 = compensated_sum(eh) / static_cast<double>(N);
    sol.discount_rate = -std::log(m2) / horizon;
    if (j_half == 0) sol.decay_residual = sol.y0.value * sol.y0.value;
    return sol;
}

BsdeSolution solve_infinite_horizon(const BsdeProblem& p, const DomainGeometry& dom, const CoefficientSet& coeffs,
                                    const Vec& x0, const BsdeSettings& s) {
    if (s.horizons.empty()) throw std::invalid_argument("empty horizon schedule");
    BsdeSolution prev;
    std::vector<double> values, errors, residuals;
    for (std::size_t h = 0; h < s.horizons.size(); ++h) {
        BsdeSolution cur = solve_truncated(p, dom, coeffs, x0, s.horizons[h], s);
        values.push_back(cur.y0.value);
        errors.push_back(cur.y0.std_error);
        residuals.push_back(cur.decay_residual);
        bool done = false;
        if (h > 0) {
            std::vector<double> diff(cur.samples.size());
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = cur.samples[i] - prev.samples[i];
            Estimate dd = summarize(diff);
            done = std::abs(dd.value) <= s.tol + 3.0 * dd.std_error;
        }
        cur.horizon_values = values;
        cur.horizon_errors = errors;
        cur.horizon_decay_residuals = residuals;
        cur.converged = done;
        if (done) return cur;
        prev = std::move(cur);
    }
    if (!(prev.discount_rate > 0.0))
        throw NoDecay("horizon schedule exhausted without a Cauchy limit and the discount shows no decay (rate " +
                      std::to_string(prev.discount_rate) + ")");
    return prev;
}

Y0BoundScan y0_bound_scan(const BsdeProblem& p, const DomainGeometry& dom, const CoefficientSet& coeffs,
                          const std::vector<Vec>& x0s, const BsdeSettings& s, double gauge_T_max) {
    Y0BoundScan out;
    for (const Vec& x0 : x0s) {
        BsdeSolution sol = solve_infinite_horizon(p, dom, coeffs, x0, s);
        out.values.push_back(sol.y0);
        out.max_abs_y0 = std::max(out.max_abs_y0, std::abs(sol.y0.value));
        if (p.Phi) {
            GaugeResult g = gauge_estimate(dom, coeffs, WeightFields{nullptr, p.q_tilde, nullptr}, x0, gauge_T_max, s.mc);
            out.gauge_sup = std::max(out.gauge_sup, g.value.value + g.tail);
        }
    }
    if (p.Phi)
        for (const Vec& y : boundary_samples(dom, 64)) out.sup_phi = std::max(out.sup_phi, std::abs(p.Phi(y)));
    double supK = 0.0, min_rate = std::numeric_limits<double>::infinity();
    for (const Vec& x : interior_samples(dom, 9)) {
        if (p.generator.K) supK = std::max(supK, p.generator.K(x));
        min_rate = std::min(min_rate, -sample_discount(p.generator, x));
    }
    out.generator_part = supK == 0.0 ? 0.0 : (min_rate > 0.0 ? supK / min_rate : std::numeric_limits<double>::infinity());
    out.bound = out.sup_phi * out.gauge_sup + out.generator_part;
    return out;
}

BetaNorms beta_norm_diagnostic(const std::vector<double>& sup_abs_y, const std::vector<double>& int_z2, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
    std::vector<double> a(sup_abs_y.size()), b(int_z2.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::pow(sup_abs_y[i], beta);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::pow(int_z2[i], 0.5 * beta);
    return {summarize(a), summarize(b)};
}

BetaNorms beta_norm_diagnostic(const BsdeSolution& sol, double beta) {
    if (sol.sup_abs_y.empty()) throw std::invalid_argument("solution was computed without track_z");
    return beta_norm_diagnostic(sol.sup_abs_y, sol.int_z2, beta);
}

}  // namespace rbsde
