#include "rbsde/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace rbsde {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t cart_index(const Mesh& m, const std::array<int, kMaxDim>& i) {
    std::size_t idx = 0;
    for (int a = m.dim - 1; a >= 0; --a) idx = idx * static_cast<std::size_t>(m.n[a]) + i[a];
    return idx;
}

std::array<int, kMaxDim> cart_multi(const Mesh& m, std::size_t idx) {
    std::array<int, kMaxDim> i{0, 0, 0};
    for (int a = 0; a < m.dim; ++a) {
        i[a] = static_cast<int>(idx % m.n[a]);
        idx /= m.n[a];
    }
    return i;
}

double axis_h(const Mesh& m, int a) { return (m.hi(a) - m.lo(a)) / (m.n[a] - 1); }

}  // namespace

Mesh Mesh::cartesian(const Vec& lo, const Vec& hi, std::array<int, kMaxDim> n) {
    Mesh m;
    m.kind = MeshKind::cartesian;
    m.dim = static_cast<int>(lo.size());
    m.lo = lo;
    m.hi = hi;
    for (int a = 0; a < kMaxDim; ++a) m.n[a] = a < m.dim ? n[a] : 1;
    for (int a = 0; a < m.dim; ++a)
        if (m.n[a] < 3) throw std::invalid_argument("cartesian mesh needs >= 3 nodes per axis");
    return m;
}

Mesh Mesh::polar(const Vec& center, double radius, int nr, int nt) {
    if (center.size() != 2) throw std::invalid_argument("polar mesh is two-dimensional");
    if (nr < 2 || nt < 4) throw std::invalid_argument("polar mesh needs nr >= 2, nt >= 4");
    Mesh m;
    m.kind = MeshKind::polar;
    m.dim = 2;
    m.center = center;
    m.radius = radius;
    m.nr = nr;
    m.nt = nt;
    return m;
}

Mesh Mesh::cartesian_for(const DomainGeometry& dom, int n) {
    std::array<int, kMaxDim> counts{n, n, n};
    return cartesian(dom.bbox_lo(), dom.bbox_hi(), counts);
}

std::size_t Mesh::size() const {
    if (kind == MeshKind::polar) return 1 + static_cast<std::size_t>(nr) * nt;
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n[a]);
    return s;
}

Vec Mesh::node(std::size_t idx) const {
    if (kind == MeshKind::polar) {
        if (idx == 0) return center;
        std::size_t k = idx - 1;
        int i = static_cast<int>(k / nt) + 1;
        int j = static_cast<int>(k % nt);
        double r = radius * i / nr;
        double th = kTwoPi * j / nt;
        Vec x = center;
        x(0) += r * std::cos(th);
        x(1) += r * std::sin(th);
        return x;
    }
    auto i = cart_multi(*this, idx);
    Vec x(dim);
    for (int a = 0; a < dim; ++a) x(a) = lo(a) + axis_h(*this, a) * i[a];
    return x;
}

bool Mesh::covers(const DomainGeometry& dom) const {
    if (dom.dim != dim) return false;
    const double tol = 1e-12;
    if (kind == MeshKind::polar) {
        if (dom.kind == DomainKind::box) return false;
        return (center - dom.center).norm() <= tol && radius >= dom.radius - tol;
    }
    Vec blo = dom.bbox_lo();
    Vec bhi = dom.bbox_hi();
    for (int a = 0; a < dim; ++a)
        if (lo(a) > blo(a) + tol || hi(a) < bhi(a) - tol) return false;
    return true;
}

double Mesh::spacing() const {
    if (kind == MeshKind::polar) return radius / nr;
    double h = 0.0;
    for (int a = 0; a < dim; ++a) h = std::max(h, axis_h(*this, a));
    return h;
}

bool Mesh::operator==(const Mesh& o) const {
    if (kind != o.kind || dim != o.dim) return false;
    if (kind == MeshKind::polar)
        return center == o.center && radius == o.radius && nr == o.nr && nt == o.nt;
    return lo == o.lo && hi == o.hi && n == o.n;
}

GridFunction::GridFunction(Mesh mesh, double fill) : mesh_(std::move(mesh)), values_(mesh_.size(), fill) {}

double GridFunction::interp(const std::vector<double>& vals, const Vec& x) const {
    const Mesh& m = mesh_;
    if (m.kind == MeshKind::polar) {
        double dx = x(0) - m.center(0);
        double dy = x(1) - m.center(1);
        double h = m.radius / m.nr;
        double s = std::clamp(std::hypot(dx, dy) / h, 0.0, static_cast<double>(m.nr));
        int i = std::min(static_cast<int>(s), m.nr - 1);
        double t = s - i;
        double th = std::atan2(dy, dx);
        if (th < 0.0) th += kTwoPi;
        double a = th / (kTwoPi / m.nt);
        int j = static_cast<int>(a);
        double w = a - j;
        j %= m.nt;
        int jn = (j + 1) % m.nt;
        auto ring = [&](int ri, int rj) { return ri == 0 ? vals[0] : vals[1 + static_cast<std::size_t>(ri - 1) * m.nt + rj]; };
        double inner = (1.0 - w) * ring(i, j) + w * ring(i, jn);
        double outer = (1.0 - w) * ring(i + 1, j) + w * ring(i + 1, jn);
        return (1.0 - t) * inner + t * outer;
    }
    std::array<int, kMaxDim> base{0, 0, 0};
    std::array<double, kMaxDim> frac{0.0, 0.0, 0.0};
    for (int a = 0; a < m.dim; ++a) {
        double s = std::clamp((x(a) - m.lo(a)) / axis_h(m, a), 0.0, static_cast<double>(m.n[a] - 1));
        int i = std::min(static_cast<int>(s), m.n[a] - 2);
        base[a] = i;
        frac[a] = s - i;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << m.dim); ++corner) {
        double w = 1.0;
        std::array<int, kMaxDim> idx = base;
        for (int a = 0; a < m.dim; ++a) {
            bool up = (corner >> a) & 1;
            idx[a] += up ? 1 : 0;
            w *= up ? frac[a] : 1.0 - frac[a];
        }
        if (w != 0.0) acc += w * vals[cart_index(m, idx)];
    }
    return acc;
}

double GridFunction::operator()(const Vec& x) const { return interp(values_, x); }

void GridFunction::build_gradients() {
    const Mesh& m = mesh_;
    grad_.assign(m.dim, std::vector<double>(values_.size(), 0.0));
    const auto& u = values_;
    if (m.kind == MeshKind::polar) {
        const int N = m.nr;
        const int T = m.nt;
        const double h = m.radius / N;
        const double k = kTwoPi / T;
        auto at = [&](int i, int j) { return i == 0 ? u[0] : u[1 + static_cast<std::size_t>(i - 1) * T + ((j % T) + T) % T]; };
        double gx0 = 0.0, gy0 = 0.0;
        for (int j = 0; j < T; ++j) {
            gx0 += at(1, j) * std::cos(k * j);
            gy0 += at(1, j) * std::sin(k * j);
        }
        grad_[0][0] = 2.0 * gx0 / (T * h);
        grad_[1][0] = 2.0 * gy0 / (T * h);
        for (int i = 1; i <= N; ++i) {
            double r = h * i;
            for (int j = 0; j < T; ++j) {
                double ur = i < N ? (at(i + 1, j) - at(i - 1, j)) / (2.0 * h)
                                  : (3.0 * at(N, j) - 4.0 * at(N - 1, j) + at(N - 2, j)) / (2.0 * h);
                double ut = (at(i, j + 1) - at(i, j - 1)) / (2.0 * k);
                double c = std::cos(k * j), s = std::sin(k * j);
                std::size_t idx = 1 + static_cast<std::size_t>(i - 1) * T + j;
                grad_[0][idx] = c * ur - s / r * ut;
                grad_[1][idx] = s * ur + c / r * ut;
            }
        }
        return;
    }
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        auto i = cart_multi(m, idx);
        for (int a = 0; a < m.dim; ++a) {
            double h = axis_h(m, a);
            auto shifted = [&](int d) {
                auto j = i;
                j[a] += d;
                return u[cart_index(m, j)];
            };
            double g;
            if (i[a] == 0) g = (-3.0 * u[idx] + 4.0 * shifted(1) - shifted(2)) / (2.0 * h);
            else if (i[a] == m.n[a] - 1) g = (3.0 * u[idx] - 4.0 * shifted(-1) + shifted(-2)) / (2.0 * h);
            else g = (shifted(1) - shifted(-1)) / (2.0 * h);
            grad_[a][idx] = g;
        }
    }
}

Vec GridFunction::gradient(const Vec& x) const {
    if (grad_.empty()) throw std::logic_error("GridFunction::gradient called before build_gradients");
    Vec g(mesh_.dim);
    for (int a = 0; a < mesh_.dim; ++a) g(a) = interp(grad_[a], x);
    return g;
}

std::vector<double> GridFunction::quadrature_weights(const DomainGeometry& dom) const {
    const Mesh& m = mesh_;
    std::vector<double> w(m.size(), 0.0);
    if (m.kind == MeshKind::polar) {
        const double h = m.radius / m.nr;
        const double pi = std::numbers::pi;
        w[0] = pi * 0.25 * h * h;
        for (int i = 1; i <= m.nr; ++i) {
            double area = i < m.nr ? 2.0 * pi * (h * i) * h : pi * (m.radius * h - 0.25 * h * h);
            for (int j = 0; j < m.nt; ++j) w[1 + static_cast<std::size_t>(i - 1) * m.nt + j] = area / m.nt;
        }
        return w;
    }
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
        if (signed_distance(dom, m.node(idx)) > dom.eps_geom) continue;
        auto i = cart_multi(m, idx);
        double wt = 1.0;
        for (int a = 0; a < m.dim; ++a) {
            double h = axis_h(m, a);
            wt *= (i[a] == 0 || i[a] == m.n[a] - 1) ? 0.5 * h : h;
        }
        w[idx] = wt;
    }
    return w;
}

double GridFunction::mean_over(const DomainGeometry& dom) const {
    auto w = quadrature_weights(dom);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        num += w[i] * values_[i];
        den += w[i];
    }
    return num / den;
}

void GridFunction::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (int a = 0; a < mesh_.dim; ++a) out << "x" << a << ",";
    out << "value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        Vec x = mesh_.node(i);
        for (int a = 0; a < mesh_.dim; ++a) out << x(a) << ",";
        out << values_[i] << "\n";
    }
}

}  // namespace rbsde
