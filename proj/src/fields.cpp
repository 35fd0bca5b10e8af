#include "rbsde/fields.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <memory>

namespace rbsde {

CoefficientSet CoefficientSet::isotropic(int dim, double a0, double q0) {
    CoefficientSet c;
    c.dim = dim;
    Mat A = a0 * Mat::Identity(dim, dim);
    c.A = [A](const Vec&) { return A; };
    c.A_constant = A;
    c.B = [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
    c.Bhat = c.B;
    c.Q = [q0](const Vec&) { return q0; };
    c.divA = c.B;
    c.divBhat = [](const Vec&) { return 0.0; };
    c.B_zero = true;
    c.Bhat_zero = true;
    c.lambda = std::max(a0, 1.0 / a0) + 1e-9;
    return c;
}

bool check_ellipticity(const CoefficientSet& c, const std::vector<Vec>& points, int n_dirs) {
    for (const Vec& x : points) {
        Mat A = c.A(x);
        if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
        for (int k = 0; k < n_dirs; ++k) {
            Vec xi = Vec::Zero(c.dim);
            if (c.dim == 1) {
                xi(0) = 1.0;
            } else {
                double th = 2.0 * M_PI * k / n_dirs;
                xi(0) = std::cos(th);
                xi(1) = std::sin(th);
                if (c.dim == 3) {
                    xi *= std::cos(0.7 * k);
                    xi(2) = std::sin(0.7 * k);
                }
            }
            double quad = xi.dot(A * xi);
            if (quad < 1.0 / c.lambda - 1e-12 || quad > c.lambda + 1e-12) return false;
        }
    }
    return true;
}

Vec clip_vector(const Vec& v, double cap) {
    double n = v.norm();
    if (n <= cap) return v;
    return v * (cap / n);
}

double Nonlinearity::discount(const Vec& x) const { return -d1(x) + delta * d2 * d2; }

Nonlinearity Nonlinearity::from_source(ScalarField F) {
    Nonlinearity nl;
    nl.eval = [F](const Vec& x, double, const Vec&) { return F(x); };
    nl.d1 = [](const Vec&) { return 0.0; };
    nl.K = [F](const Vec& x) { return std::abs(F(x)); };
    return nl;
}

Nonlinearity Nonlinearity::linear_in_y(ScalarField a, double slope, double lambda) {
    Nonlinearity nl;
    nl.eval = [a, slope](const Vec& x, double y, const Vec&) { return a(x) - slope * y; };
    nl.d1 = [slope](const Vec&) { return slope; };
    nl.delta = 1.0 / lambda;
    nl.K = [a](const Vec& x) { return std::abs(a(x)); };
    return nl;
}

bool check_monotone(const Nonlinearity& F, const std::vector<Vec>& points, const std::vector<double>& ys,
                    const std::vector<Vec>& zs) {
    for (const Vec& x : points) {
        double d1 = F.d1(x);
        for (const Vec& z : zs) {
            for (std::size_t i = 0; i < ys.size(); ++i) {
                for (std::size_t j = i + 1; j < ys.size(); ++j) {
                    double dy = ys[i] - ys[j];
                    double lhs = dy * (F.eval(x, ys[i], z) - F.eval(x, ys[j], z));
                    if (lhs > -d1 * dy * dy + 1e-9) return false;
                }
            }
        }
        for (double y : ys)
            for (std::size_t i = 0; i < zs.size(); ++i)
                for (std::size_t j = i + 1; j < zs.size(); ++j)
                    if (std::abs(F.eval(x, y, zs[i]) - F.eval(x, y, zs[j])) > F.d2 * (zs[i] - zs[j]).norm() + 1e-9)
                        return false;
    }
    return true;
}

Mat matrix_sqrt(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    if (es.info() != Eigen::Success) throw NotPositiveDefinite("eigendecomposition failed");
    const auto& ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0) throw NotPositiveDefinite("eigenvalue " + std::to_string(ev.minCoeff()));
    Mat V = es.eigenvectors();
    Mat S = V * ev.cwiseSqrt().asDiagonal() * V.transpose();
    return 0.5 * (S + S.transpose());
}

namespace {

bool in_closure(const DomainGeometry& dom, const Vec& x) { return signed_distance(dom, x) <= dom.eps_geom; }

// d/dx_j of a field sampled through f, staying inside the closed domain.
template <class F>
auto fd_partial(const DomainGeometry& dom, const Vec& x, int j, double h, F&& f) {
    Vec e = Vec::Zero(x.size());
    e(j) = h;
    bool fwd = in_closure(dom, x + e);
    bool bwd = in_closure(dom, x - e);
    if (fwd && bwd) return ((f(x + e) - f(x - e)) / (2.0 * h)).eval();
    if (fwd && in_closure(dom, x + 2.0 * e)) return ((-3.0 * f(x) + 4.0 * f(x + e) - f(x + 2.0 * e)) / (2.0 * h)).eval();
    if (bwd && in_closure(dom, x - 2.0 * e)) return ((3.0 * f(x) - 4.0 * f(x - e) + f(x - 2.0 * e)) / (2.0 * h)).eval();
    throw StencilOutsideDomain("no finite-difference stencil of width " + std::to_string(h) + " fits in the domain");
}

}  // namespace

Vec div_A(const CoefficientSet& c, const DomainGeometry& dom, const Vec& x) {
    if (c.A_constant) return Vec::Zero(c.dim);
    if (c.divA) return c.divA(x);
    if (!in_closure(dom, x)) throw StencilOutsideDomain("point lies outside the closed domain");
    Vec out = Vec::Zero(c.dim);
    for (int j = 0; j < c.dim; ++j) {
        Mat dA = fd_partial(dom, x, j, kStepA, [&](const Vec& y) { return c.A(y); });
        out += dA.col(j);
    }
    return out;
}

Vec drift_tilde(const CoefficientSet& c, const DomainGeometry& dom, const Vec& b, const Vec& x) {
    return 0.5 * div_A(c, dom, x) + b;
}

double div_Bhat(const CoefficientSet& c, const DomainGeometry& dom, const Vec& x) {
    if (c.Bhat_zero) return 0.0;
    if (c.divBhat) return c.divBhat(x);
    double s = 0.0;
    for (int j = 0; j < c.dim; ++j) {
        Eigen::Matrix<double, 1, 1> d = fd_partial(dom, x, j, kStepA, [&](const Vec& y) {
            Eigen::Matrix<double, 1, 1> m;
            m(0) = c.Bhat(y)(j);
            return m;
        });
        s += d(0);
    }
    return s;
}

TransformedCoefficients transform_coefficients(const CoefficientSet& c, const DomainGeometry& dom,
                                               const GridFunction& v) {
    if (!v.mesh().covers(dom)) throw MeshMismatch("mesh of v does not cover the closed domain");
    TransformedCoefficients t;
    t.v = v;
    if (!t.v.has_gradients()) t.v.build_gradients();
    auto vp = std::make_shared<GridFunction>(t.v);
    t.grad_v = [vp](const Vec& x) { return vp->gradient(x); };
    const double cap = c.cap;
    t.b = [c, vp, cap](const Vec& x) {
        Vec gv = vp->gradient(x);
        return Vec(clip_vector(c.B(x), cap) - clip_vector(c.Bhat(x), cap) - c.A(x) * gv);
    };
    t.q = [c, vp, cap](const Vec& x) {
        Vec gv = vp->gradient(x);
        Vec bb = clip_vector(c.B(x), cap) - clip_vector(c.Bhat(x), cap);
        return c.Q(x) + 0.5 * gv.dot(c.A(x) * gv) - bb.dot(gv);
    };
    return t;
}

double apply_operator(const SmoothField& u, const CoefficientSet& c, const DomainGeometry& dom, const Vec& x) {
    Mat A = c.A(x);
    Vec g = u.grad(x);
    Mat H = u.hess(x);
    double val = u.value(x);
    double diffusion = 0.5 * (div_A(c, dom, x).dot(g) + (A * H).trace());
    double advection = c.B_zero ? 0.0 : c.B(x).dot(g);
    double divergence = c.Bhat_zero ? 0.0 : div_Bhat(c, dom, x) * val + c.Bhat(x).dot(g);
    return diffusion + advection - divergence + c.Q(x) * val;
}

ManufacturedData manufactured_problem(const SmoothField& u_star, const CoefficientSet& c,
                                      const DomainGeometry& dom) {
    ManufacturedData m;
    m.F_data = [u_star, c, dom](const Vec& x) { return -apply_operator(u_star, c, dom, x); };
    m.Phi = [u_star, c, dom](const Vec& x) {
        Projection p = boundary_projection(dom, x, true);
        double conormal = u_star.grad(p.proj).dot(c.A(p.proj) * p.n);
        double flux = c.Bhat_zero ? 0.0 : c.Bhat(p.proj).dot(p.n);
        return 0.5 * conormal - flux * u_star.value(p.proj);
    };
    return m;
}

}  // namespace rbsde
