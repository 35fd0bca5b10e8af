#include "rbsde/reference.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>
#include <cmath>
#include <numbers>

namespace rbsde {

namespace {

using Triplet = Eigen::Triplet<double>;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Three-point Gauss-Legendre rule on [0, 1].
constexpr double kGaussX[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr double kGaussW[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// Nondivergence coefficients of L: (1/2 A) : H + g . grad + e.
struct PointCoeffs {
    Mat M;
    Vec g;
    double e;
};

PointCoeffs operator_coeffs(const FdProblem& p, const Vec& x) {
    const CoefficientSet& c = p.coeffs;
    PointCoeffs pc;
    pc.M = 0.5 * c.A(x);
    pc.g = 0.5 * div_A(c, p.dom, x);
    if (!c.B_zero) pc.g += c.B(x);
    if (!c.Bhat_zero) pc.g -= c.Bhat(x);
    pc.e = c.Q(x) - div_Bhat(c, p.dom, x);
    return pc;
}

double bhat_dot(const FdProblem& p, const Vec& x, const Vec& n) {
    return p.coeffs.Bhat_zero ? 0.0 : p.coeffs.Bhat(x).dot(n);
}

enum class RowKind { interior, boundary };

struct Assembly {
    std::vector<Triplet> trip;
    std::vector<RowKind> kind;
    std::vector<Vec> nodes;
    std::size_t n = 0;
};

void assemble_polar(const FdProblem& p, const Mesh& m, Assembly& as) {
    const int N = m.nr;
    const int T = m.nt;
    const double h = m.radius / N;
    const double k = kTwoPi / T;
    auto id = [&](int i, int j) -> int {
        if (i == 0) return 0;
        return 1 + (i - 1) * T + ((j % T) + T) % T;
    };
    as.n = m.size();
    as.kind.assign(as.n, RowKind::interior);
    as.nodes.resize(as.n);
    for (std::size_t a = 0; a < as.n; ++a) as.nodes[a] = m.node(a);

    // Pole: second-order fit of the first ring's Fourier modes.
    {
        PointCoeffs pc = operator_coeffs(p, as.nodes[0]);
        double Mxx = pc.M(0, 0), Myy = pc.M(1, 1), Mxy = pc.M(0, 1);
        as.trip.emplace_back(0, 0, -2.0 * (Mxx + Myy) / (h * h) + pc.e);
        for (int j = 0; j < T; ++j) {
            double th = k * j;
            double c2 = std::cos(2.0 * th), s2 = std::sin(2.0 * th);
            double w = (Mxx * (2.0 + 4.0 * c2) + Myy * (2.0 - 4.0 * c2) + 8.0 * Mxy * s2) / (T * h * h) +
                       2.0 * (pc.g(0) * std::cos(th) + pc.g(1) * std::sin(th)) / (T * h);
            as.trip.emplace_back(0, id(1, j), w);
        }
    }
    for (int i = 1; i < N; ++i) {
        double r = h * i;
        for (int j = 0; j < T; ++j) {
            int row = id(i, j);
            PointCoeffs pc = operator_coeffs(p, as.nodes[row]);
            double th = k * j, c = std::cos(th), s = std::sin(th);
            double Mxx = pc.M(0, 0), Myy = pc.M(1, 1), Mxy = pc.M(0, 1);
            double a_rr = Mxx * c * c + Myy * s * s + 2.0 * Mxy * s * c;
            double a_r = (Mxx * s * s + Myy * c * c - 2.0 * Mxy * s * c) / r + pc.g(0) * c + pc.g(1) * s;
            double a_tt = (Mxx * s * s + Myy * c * c - 2.0 * Mxy * s * c) / (r * r);
            double a_rt = (-2.0 * Mxx * s * c + 2.0 * Myy * s * c + 2.0 * Mxy * (c * c - s * s)) / r;
            double a_t = (2.0 * Mxx * s * c - 2.0 * Myy * s * c - 2.0 * Mxy * (c * c - s * s)) / (r * r) +
                         (-pc.g(0) * s + pc.g(1) * c) / r;
            as.trip.emplace_back(row, id(i + 1, j), a_rr / (h * h) + a_r / (2.0 * h));
            as.trip.emplace_back(row, id(i - 1, j), a_rr / (h * h) - a_r / (2.0 * h));
            as.trip.emplace_back(row, row, -2.0 * a_rr / (h * h) - 2.0 * a_tt / (k * k) + pc.e);
            as.trip.emplace_back(row, id(i, j + 1), a_tt / (k * k) + a_t / (2.0 * k));
            as.trip.emplace_back(row, id(i, j - 1), a_tt / (k * k) - a_t / (2.0 * k));
            double q = a_rt / (4.0 * h * k);
            as.trip.emplace_back(row, id(i + 1, j + 1), q);
            as.trip.emplace_back(row, id(i + 1, j - 1), -q);
            as.trip.emplace_back(row, id(i - 1, j + 1), -q);
            as.trip.emplace_back(row, id(i - 1, j - 1), q);
        }
    }
    // Boundary ring: 1/2 grad u . A n - <Bhat, n> u = Phi with one-sided radial differences.
    for (int j = 0; j < T; ++j) {
        int row = id(N, j);
        as.kind[row] = RowKind::boundary;
        const Vec& x = as.nodes[row];
        double th = k * j, c = std::cos(th), s = std::sin(th);
        Vec n = make_vec({-c, -s});
        Vec gam = p.coeffs.A(x) * n;
        double cr = 0.5 * (gam(0) * c + gam(1) * s);
        double ct = 0.5 * (-gam(0) * s + gam(1) * c) / m.radius;
        as.trip.emplace_back(row, row, 3.0 * cr / (2.0 * h) - bhat_dot(p, x, n));
        as.trip.emplace_back(row, id(N - 1, j), -4.0 * cr / (2.0 * h));
        as.trip.emplace_back(row, id(N - 2, j), cr / (2.0 * h));
        as.trip.emplace_back(row, id(N, j + 1), ct / (2.0 * k));
        as.trip.emplace_back(row, id(N, j - 1), -ct / (2.0 * k));
    }
}

void assemble_box(const FdProblem& p, const Mesh& m, Assembly& as) {
    const int nx = m.n[0], ny = m.n[1];
    const double hx = (m.hi(0) - m.lo(0)) / (nx - 1);
    const double hy = (m.hi(1) - m.lo(1)) / (ny - 1);
    auto id = [&](int i, int j) { return i + nx * j; };
    as.n = m.size();
    as.kind.assign(as.n, RowKind::interior);
    as.nodes.resize(as.n);
    for (std::size_t a = 0; a < as.n; ++a) as.nodes[a] = m.node(a);
    // First-derivative stencil along one axis: central inside, second-order one-sided at the ends.
    auto d1 = [&](int row, int i, int j, int axis, double coef) {
        int len = axis == 0 ? nx : ny;
        int pos = axis == 0 ? i : j;
        double h = axis == 0 ? hx : hy;
        auto at = [&](int off) { return axis == 0 ? id(i + off, j) : id(i, j + off); };
        if (pos == 0) {
            as.trip.emplace_back(row, at(0), -3.0 * coef / (2.0 * h));
            as.trip.emplace_back(row, at(1), 4.0 * coef / (2.0 * h));
            as.trip.emplace_back(row, at(2), -coef / (2.0 * h));
        } else if (pos == len - 1) {
            as.trip.emplace_back(row, at(0), 3.0 * coef / (2.0 * h));
            as.trip.emplace_back(row, at(-1), -4.0 * coef / (2.0 * h));
            as.trip.emplace_back(row, at(-2), coef / (2.0 * h));
        } else {
            as.trip.emplace_back(row, at(1), coef / (2.0 * h));
            as.trip.emplace_back(row, at(-1), -coef / (2.0 * h));
        }
    };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int row = id(i, j);
            const Vec& x = as.nodes[row];
            bool edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
            if (!edge) {
                PointCoeffs pc = operator_coeffs(p, x);
                double Mxx = pc.M(0, 0), Myy = pc.M(1, 1), Mxy = pc.M(0, 1);
                as.trip.emplace_back(row, row, -2.0 * Mxx / (hx * hx) - 2.0 * Myy / (hy * hy) + pc.e);
                as.trip.emplace_back(row, id(i + 1, j), Mxx / (hx * hx) + pc.g(0) / (2.0 * hx));
                as.trip.emplace_back(row, id(i - 1, j), Mxx / (hx * hx) - pc.g(0) / (2.0 * hx));
                as.trip.emplace_back(row, id(i, j + 1), Myy / (hy * hy) + pc.g(1) / (2.0 * hy));
                as.trip.emplace_back(row, id(i, j - 1), Myy / (hy * hy) - pc.g(1) / (2.0 * hy));
                double q = 2.0 * Mxy / (4.0 * hx * hy);
                as.trip.emplace_back(row, id(i + 1, j + 1), q);
                as.trip.emplace_back(row, id(i - 1, j - 1), q);
                as.trip.emplace_back(row, id(i + 1, j - 1), -q);
                as.trip.emplace_back(row, id(i - 1, j + 1), -q);
                continue;
            }
            as.kind[row] = RowKind::boundary;
            // Corners take the same face normal as boundary_projection so Phi data stays consistent.
            Vec n = boundary_projection(p.dom, x, true).n;
            Vec gam = p.coeffs.A(x) * n;
            d1(row, i, j, 0, 0.5 * gam(0));
            d1(row, i, j, 1, 0.5 * gam(1));
            as.trip.emplace_back(row, row, -bhat_dot(p, x, n));
        }
    }
}

}  // namespace

FdResult fd_solve(const FdProblem& p, const FdResolution& res, int max_iterations) {
    if (p.dom.dim != 2) throw std::invalid_argument("finite-difference oracle is two-dimensional");
    Mesh mesh = p.dom.kind == DomainKind::box ? Mesh::cartesian_for(p.dom, res.n)
                                               : Mesh::polar(p.dom.center, p.dom.radius, res.nr, res.nt);
    Assembly as;
    if (mesh.kind == MeshKind::polar) assemble_polar(p, mesh, as);
    else assemble_box(p, mesh, as);

    std::vector<double> shift(as.n, 0.0);
    if (p.nonlinear && p.d1)
        for (std::size_t a = 0; a < as.n; ++a)
            if (as.kind[a] == RowKind::interior) shift[a] = p.d1(as.nodes[a]);

    SpMat K(as.n, as.n);
    K.setFromTriplets(as.trip.begin(), as.trip.end());
    SpMat Ks = K;
    for (std::size_t a = 0; a < as.n; ++a)
        if (shift[a] != 0.0) Ks.coeffRef(a, a) -= shift[a];
    Ks.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(Ks);
    if (lu.info() != Eigen::Success) throw SingularSystem("finite-difference operator is singular");

    std::vector<double> phi(as.n, 0.0);
    for (std::size_t a = 0; a < as.n; ++a)
        if (as.kind[a] == RowKind::boundary && p.Phi) phi[a] = p.Phi(as.nodes[a]);

    auto rhs_for = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd r(as.n);
        for (std::size_t a = 0; a < as.n; ++a) {
            if (as.kind[a] == RowKind::boundary) r(a) = phi[a];
            else r(a) = -((p.G ? p.G(as.nodes[a], u(a)) : 0.0) + shift[a] * u(a));
        }
        return r;
    };

    FdResult out;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(as.n);
    if (!p.nonlinear) {
        u = lu.solve(rhs_for(u));
        out.iterations = 1;
    } else {
        for (int it = 1;; ++it) {
            Eigen::VectorXd target = lu.solve(rhs_for(u));
            Eigen::VectorXd next = (1.0 - kFdDamping) * u + kFdDamping * target;
            double change = (next - u).cwiseAbs().maxCoeff();
            out.update_history.push_back(change);
            u = next;
            out.iterations = it;
            if (!std::isfinite(change)) throw NonConvergence("damped iteration produced non-finite values");
            if (change <= 1e-13 * std::max(1.0, u.cwiseAbs().maxCoeff())) break;
            if (it >= max_iterations) {
                std::string hist;
                for (std::size_t h = out.update_history.size() > 5 ? out.update_history.size() - 5 : 0;
                     h < out.update_history.size(); ++h)
                    hist += " " + std::to_string(out.update_history[h]);
                throw NonConvergence("no convergence after " + std::to_string(it) + " damped steps; last changes" + hist);
            }
        }
    }
    // Residual of the unshifted nonlinear equations.
    Eigen::VectorXd Ku = K * u;
    double worst = 0.0;
    for (std::size_t a = 0; a < as.n; ++a) {
        double r = as.kind[a] == RowKind::boundary ? Ku(a) - phi[a]
                                                   : Ku(a) + (p.G ? p.G(as.nodes[a], u(a)) : 0.0);
        worst = std::max(worst, std::abs(r));
    }
    out.residual = worst;
    out.u = GridFunction(mesh);
    for (std::size_t a = 0; a < as.n; ++a) out.u.values()[a] = u(a);
    return out;
}

namespace {

// Q1 element quadrature visitor: calls f(x, weight, local node ids, values N, gradients dN) per point.
template <class Visit>
void for_each_q1_point(const Mesh& m, Visit&& visit) {
    if (m.kind == MeshKind::polar) {
        const int N = m.nr, T = m.nt;
        const double h = m.radius / N, k = kTwoPi / T;
        auto id = [&](int i, int j) -> int { return i == 0 ? 0 : 1 + (i - 1) * T + ((j % T) + T) % T; };
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < T; ++j) {
                std::array<int, 4> ids = {id(i, j), id(i, j + 1), id(i + 1, j), id(i + 1, j + 1)};
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        double xi = kGaussX[a], eta = kGaussX[b];
                        double r = (i + xi) * h, th = (j + eta) * k;
                        double c = std::cos(th), s = std::sin(th);
                        double w = kGaussW[a] * kGaussW[b] * r * h * k;
                        std::array<double, 4> Nv = {(1 - xi) * (1 - eta), (1 - xi) * eta, xi * (1 - eta), xi * eta};
                        std::array<double, 4> dxi = {-(1 - eta), -eta, 1 - eta, eta};
                        std::array<double, 4> deta = {-(1 - xi), 1 - xi, -xi, xi};
                        std::array<Vec, 4> grads;
                        for (int q = 0; q < 4; ++q) {
                            double gr = dxi[q] / h, gt = deta[q] / (k * r);
                            grads[q] = make_vec({c * gr - s * gt, s * gr + c * gt});
                        }
                        Vec x = m.center;
                        x(0) += r * c;
                        x(1) += r * s;
                        visit(x, w, ids, Nv, grads);
                    }
                }
            }
        }
        return;
    }
    const int nx = m.n[0], ny = m.n[1];
    const double hx = (m.hi(0) - m.lo(0)) / (nx - 1), hy = (m.hi(1) - m.lo(1)) / (ny - 1);
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            std::array<int, 4> ids = {i + nx * j, i + nx * (j + 1), i + 1 + nx * j, i + 1 + nx * (j + 1)};
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    double xi = kGaussX[a], eta = kGaussX[b];
                    double w = kGaussW[a] * kGaussW[b] * hx * hy;
                    std::array<double, 4> Nv = {(1 - xi) * (1 - eta), (1 - xi) * eta, xi * (1 - eta), xi * eta};
                    std::array<Vec, 4> grads = {make_vec({-(1 - eta) / hx, -(1 - xi) / hy}),
                                                make_vec({-eta / hx, (1 - xi) / hy}),
                                                make_vec({(1 - eta) / hx, -xi / hy}),
                                                make_vec({eta / hx, xi / hy})};
                    Vec x = make_vec({m.lo(0) + (i + xi) * hx, m.lo(1) + (j + eta) * hy});
                    visit(x, w, ids, Nv, grads);
                }
            }
        }
    }
}

}  // namespace

VSolution solve_v(const DomainGeometry& dom, const CoefficientSet& coeffs, const VectorField& Bhat,
                  const FdResolution& res) {
    if (dom.dim != 2) throw std::invalid_argument("v solver is two-dimensional");
    Mesh mesh = dom.kind == DomainKind::box ? Mesh::cartesian_for(dom, res.n)
                                            : Mesh::polar(dom.center, dom.radius, res.nr, res.nt);
    const std::size_t n = mesh.size();
    std::vector<Triplet> trip;
    Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
    for_each_q1_point(mesh, [&](const Vec& x, double w, const std::array<int, 4>& ids, const std::array<double, 4>&,
                                const std::array<Vec, 4>& grads) {
        Mat A = coeffs.A(x);
        Vec bh = clip_vector(Bhat(x), coeffs.cap);
        for (int a = 0; a < 4; ++a) {
            Vec Ag = A * grads[a];
            load(ids[a]) += w * bh.dot(grads[a]);
            for (int b = 0; b < 4; ++b) trip.emplace_back(ids[b], ids[a], w * Ag.dot(grads[b]));
        }
    });
    GridFunction v(mesh);
    std::vector<double> qw = v.quadrature_weights(dom);
    // Bordered system fixes the constant null space: sum_a qw_a v_a = 0.
    for (std::size_t a = 0; a < n; ++a) {
        trip.emplace_back(static_cast<int>(n), static_cast<int>(a), qw[a]);
        trip.emplace_back(static_cast<int>(a), static_cast<int>(n), qw[a]);
    }
    SpMat K(n + 1, n + 1);
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) throw SingularSystem("weak operator for v lost rank beyond constants");
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = load;
    rhs(n) = 0.0;
    Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !sol.allFinite()) throw SingularSystem("solve for v failed");
    for (std::size_t a = 0; a < n; ++a) v.values()[a] = sol(a);
    double mean = v.mean_over(dom);
    for (double& val : v.values()) val -= mean;

    Eigen::VectorXd vv = Eigen::Map<const Eigen::VectorXd>(v.values().data(), n);
    Eigen::VectorXd r = K.topLeftCorner(n, n) * vv - load;
    VSolution out;
    out.weak_residual = r.cwiseAbs().maxCoeff();
    v.build_gradients();
    out.v = std::move(v);
    return out;
}

std::vector<std::pair<int, int>> monomial_exponents(int count) {
    std::vector<std::pair<int, int>> e;
    for (int deg = 0; static_cast<int>(e.size()) < count; ++deg)
        for (int a = deg; a >= 0 && static_cast<int>(e.size()) < count; --a) e.emplace_back(a, deg - a);
    return e;
}

WeakResidual residual_check(const GridFunction& u_in, const FdProblem& p, int n_tests) {
    GridFunction u = u_in;
    if (!u.has_gradients()) u.build_gradients();
    const DomainGeometry& dom = p.dom;
    const CoefficientSet& c = p.coeffs;
    const Vec ctr = dom.kind == DomainKind::box ? Vec(0.5 * (dom.lo + dom.hi)) : dom.center;
    auto expo = monomial_exponents(n_tests);

    // Test function value and gradient: monomial in (x - ctr), optionally times a boundary bubble.
    auto test = [&](const Vec& x, int t, bool bubble, double& g, Vec& dg) {
        double X = x(0) - ctr(0), Y = x(1) - ctr(1);
        auto [a, b] = expo[t];
        double m = std::pow(X, a) * std::pow(Y, b);
        Vec dm = make_vec({a > 0 ? a * std::pow(X, a - 1) * std::pow(Y, b) : 0.0,
                           b > 0 ? b * std::pow(X, a) * std::pow(Y, b - 1) : 0.0});
        if (!bubble) {
            g = m;
            dg = dm;
            return;
        }
        double psi;
        Vec dpsi;
        if (dom.kind == DomainKind::box) {
            double px = (x(0) - dom.lo(0)) * (dom.hi(0) - x(0));
            double py = (x(1) - dom.lo(1)) * (dom.hi(1) - x(1));
            psi = px * py;
            dpsi = make_vec({(dom.hi(0) + dom.lo(0) - 2.0 * x(0)) * py, (dom.hi(1) + dom.lo(1) - 2.0 * x(1)) * px});
        } else {
            psi = dom.radius * dom.radius - X * X - Y * Y;
            dpsi = make_vec({-2.0 * X, -2.0 * Y});
        }
        g = psi * m;
        dg = psi * dm + m * dpsi;
    };

    std::vector<double> interior(n_tests, 0.0), boundary(n_tests, 0.0);
    // Volume terms: Q(u, g) - int G(x, u) g; surface terms add int Phi g (inward-normal sign).
    auto volume = [&](const Vec& x, double w) {
        double uv = u(x);
        Vec gu = u.gradient(x);
        Mat A = c.A(x);
        double Bgu = c.B_zero ? 0.0 : c.B(x).dot(gu);
        Vec bh = c.Bhat_zero ? Vec(Vec::Zero(2)) : c.Bhat(x);
        double src = p.G ? p.G(x, uv) : 0.0;
        double q = c.Q(x);
        for (int t = 0; t < n_tests; ++t) {
            for (int bub = 0; bub < 2; ++bub) {
                double g;
                Vec dg;
                test(x, t, bub == 1, g, dg);
                double val = 0.5 * (A * gu).dot(dg) - Bgu * g - bh.dot(dg) * uv - q * uv * g - src * g;
                (bub == 1 ? interior : boundary)[t] += w * val;
            }
        }
    };
    auto surface = [&](const Vec& x, double w) {
        double phi = p.Phi ? p.Phi(x) : 0.0;
        for (int t = 0; t < n_tests; ++t) {
            double g;
            Vec dg;
            test(x, t, false, g, dg);
            boundary[t] += w * phi * g;
        }
    };

    const Mesh& m = u.mesh();
    if (dom.kind == DomainKind::box) {
        int cells = std::max(m.kind == MeshKind::cartesian ? m.n[0] - 1 : 64, 16);
        double hx = (dom.hi(0) - dom.lo(0)) / cells, hy = (dom.hi(1) - dom.lo(1)) / cells;
        for (int j = 0; j < cells; ++j)
            for (int i = 0; i < cells; ++i)
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        volume(make_vec({dom.lo(0) + (i + kGaussX[a]) * hx, dom.lo(1) + (j + kGaussX[b]) * hy}),
                               kGaussW[a] * kGaussW[b] * hx * hy);
        for (int i = 0; i < cells; ++i)
            for (int a = 0; a < 3; ++a) {
                double sx = dom.lo(0) + (i + kGaussX[a]) * hx, sy = dom.lo(1) + (i + kGaussX[a]) * hy;
                surface(make_vec({sx, dom.lo(1)}), kGaussW[a] * hx);
                surface(make_vec({sx, dom.hi(1)}), kGaussW[a] * hx);
                surface(make_vec({dom.lo(0), sy}), kGaussW[a] * hy);
                surface(make_vec({dom.hi(0), sy}), kGaussW[a] * hy);
            }
    } else {
        int nr = m.kind == MeshKind::polar ? m.nr : 48;
        int nt = m.kind == MeshKind::polar ? m.nt : 96;
        double h = dom.radius / nr, k = kTwoPi / nt;
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nt; ++j)
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        double r = (i + kGaussX[a]) * h, th = (j + kGaussX[b]) * k;
                        volume(make_vec({dom.center(0) + r * std::cos(th), dom.center(1) + r * std::sin(th)}),
                               kGaussW[a] * kGaussW[b] * r * h * k);
                    }
        for (int j = 0; j < nt; ++j)
            for (int b = 0; b < 3; ++b) {
                double th = (j + kGaussX[b]) * k;
                surface(make_vec({dom.center(0) + dom.radius * std::cos(th), dom.center(1) + dom.radius * std::sin(th)}),
                        kGaussW[b] * dom.radius * k);
            }
    }
    WeakResidual out;
    out.interior_terms = interior;
    out.boundary_terms = boundary;
    for (int t = 0; t < n_tests; ++t) {
        out.interior = std::max(out.interior, std::abs(interior[t]));
        out.boundary = std::max(out.boundary, std::abs(boundary[t]));
    }
    return out;
}

}  // namespace rbsde
