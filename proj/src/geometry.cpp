#include "rbsde/geometry.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rbsde {

Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

double z_score(const Estimate& a, const Estimate& b) {
    double diff = std::abs(a.value - b.value);
    double se = std::hypot(a.std_error, b.std_error);
    if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / se;
}

DomainGeometry DomainGeometry::ball(const Vec& c, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
    if (c.size() < 1) throw std::invalid_argument("dimension must be >= 1");
    DomainGeometry d;
    d.kind = DomainKind::ball;
    d.dim = static_cast<int>(c.size());
    d.center = c;
    d.radius = r;
    return d;
}

DomainGeometry DomainGeometry::box(const Vec& lo, const Vec& hi) {
    if (lo.size() != hi.size() || lo.size() < 1) throw std::invalid_argument("box corner sizes differ");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (!(hi(i) > lo(i))) throw std::invalid_argument("box requires hi_i > lo_i");
    DomainGeometry d;
    d.kind = DomainKind::box;
    d.dim = static_cast<int>(lo.size());
    d.lo = lo;
    d.hi = hi;
    return d;
}

DomainGeometry DomainGeometry::radial_levelset(const Vec& c, std::function<double(double)> profile,
                                               double r_max) {
    if (!(profile(0.0) < 0.0 && profile(r_max) > 0.0))
        throw std::invalid_argument("radial profile must change sign on [0, r_max]");
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    auto bracket = boost::math::tools::toms748_solve(profile, 0.0, r_max, tol, iters);
    DomainGeometry d = ball(c, 0.5 * (bracket.first + bracket.second));
    d.kind = DomainKind::radial_levelset;
    d.profile = std::move(profile);
    return d;
}

double DomainGeometry::diameter() const {
    if (kind == DomainKind::box) return (hi - lo).norm();
    return 2.0 * radius;
}

Vec DomainGeometry::bbox_lo() const {
    if (kind == DomainKind::box) return lo;
    return center.array() - radius;
}

Vec DomainGeometry::bbox_hi() const {
    if (kind == DomainKind::box) return hi;
    return center.array() + radius;
}

double DomainGeometry::volume() const {
    if (kind == DomainKind::box) return (hi - lo).prod();
    double h = 0.5 * dim;
    return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0) * std::pow(radius, dim);
}

double signed_distance(const DomainGeometry& dom, const Vec& x) {
    if (dom.kind != DomainKind::box) return (x - dom.center).norm() - dom.radius;
    Vec clamped = x.cwiseMax(dom.lo).cwiseMin(dom.hi);
    double out = (x - clamped).norm();
    if (out > 0.0) return out;
    double inside = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dom.dim; ++i) inside = std::min({inside, x(i) - dom.lo(i), dom.hi(i) - x(i)});
    return -inside;
}

Location classify(const DomainGeometry& dom, const Vec& x) {
    double sd = signed_distance(dom, x);
    if (sd < -dom.eps_geom) return Location::interior;
    if (sd <= dom.eps_geom) return Location::boundary;
    return Location::exterior;
}

namespace {

Projection project_ball(const DomainGeometry& dom, const Vec& x, bool tie_break) {
    Vec w = x - dom.center;
    double r = w.norm();
    Projection p;
    if (r == 0.0) {
        if (!tie_break) throw ProjectionAmbiguous("ball center is equidistant from the whole boundary");
        w = Vec::Zero(dom.dim);
        w(0) = 1.0;
        r = 1.0;
    }
    Vec u = w / r;
    p.proj = dom.center + dom.radius * u;
    p.dist = (x - dom.center).norm() - dom.radius;
    p.n = -u;
    return p;
}

Projection project_box(const DomainGeometry& dom, const Vec& x, bool tie_break) {
    Projection p;
    Vec clamped = x.cwiseMax(dom.lo).cwiseMin(dom.hi);
    Vec out = clamped - x;
    double outside = out.norm();
    if (outside > 0.0) {
        p.proj = clamped;
        p.dist = outside;
        p.n = out / outside;
        return p;
    }
    // Interior or on a face: nearest face, ties resolved by lowest coordinate index.
    double best = std::numeric_limits<double>::infinity();
    int best_axis = -1;
    int best_side = 0;
    bool tie = false;
    for (int i = 0; i < dom.dim; ++i) {
        for (int side = 0; side < 2; ++side) {
            double d = side == 0 ? x(i) - dom.lo(i) : dom.hi(i) - x(i);
            if (d < best - dom.eps_geom) {
                best = d;
                best_axis = i;
                best_side = side;
                tie = false;
            } else if (std::abs(d - best) <= dom.eps_geom) {
                tie = true;
            }
        }
    }
    if (tie && !tie_break) throw ProjectionAmbiguous("point is equidistant from several box faces");
    p.proj = x;
    p.proj(best_axis) = best_side == 0 ? dom.lo(best_axis) : dom.hi(best_axis);
    p.dist = -best;
    p.n = Vec::Zero(dom.dim);
    p.n(best_axis) = best_side == 0 ? 1.0 : -1.0;
    return p;
}

Reflection from_push(const Mat& A, const Vec& proposal, const Vec& landing) {
    Reflection r;
    r.landing = landing;
    Vec push = landing - proposal;
    Vec m = A.ldlt().solve(push);
    r.dL = m.norm();
    r.n = m / r.dL;
    return r;
}

}  // namespace

Projection boundary_projection(const DomainGeometry& dom, const Vec& x, bool tie_break) {
    if (dom.kind == DomainKind::box) return project_box(dom, x, tie_break);
    return project_ball(dom, x, tie_break);
}

Vec inward_conormal(const DomainGeometry& dom, const MatrixField& A, const Vec& x) {
    double sd = signed_distance(dom, x);
    if (std::abs(sd) > dom.eps_geom) throw NotOnBoundary("|signed_distance| = " + std::to_string(std::abs(sd)));
    Projection p = boundary_projection(dom, x);
    return A(x) * p.n;
}

Reflection reflect_along_conormal(const DomainGeometry& dom, const Mat& A_from, const Vec& proposal) {
    Projection p = boundary_projection(dom, proposal);
    if (p.dist > dom.diameter())
        throw StepTooLarge("overshoot " + std::to_string(p.dist) + " exceeds domain diameter");
    Vec gamma = A_from * p.n;
    if (dom.kind != DomainKind::box) {
        // Smallest positive root of |w + s gamma|^2 = r^2 for the exterior point w.
        Vec w = proposal - dom.center;
        double a = gamma.squaredNorm();
        double beta = w.dot(gamma);
        double kappa = w.squaredNorm() - dom.radius * dom.radius;
        double disc = beta * beta - a * kappa;
        if (beta < 0.0 && disc >= 0.0) {
            double s = kappa / (-beta + std::sqrt(disc));
            Reflection r;
            r.n = p.n;
            r.dL = s;
            r.landing = proposal + gamma * s;
            return r;
        }
        return from_push(A_from, proposal, p.proj);
    }
    int violated = 0;
    for (int i = 0; i < dom.dim; ++i)
        if (proposal(i) < dom.lo(i) || proposal(i) > dom.hi(i)) ++violated;
    if (violated == 1) {
        double s = p.dist / gamma.dot(p.n);
        Vec landing = proposal + gamma * s;
        if (signed_distance(dom, landing) <= dom.eps_geom) {
            Reflection r;
            r.n = p.n;
            r.dL = s;
            r.landing = landing;
            return r;
        }
    }
    return from_push(A_from, proposal, p.proj);
}

std::vector<Vec> interior_samples(const DomainGeometry& dom, int per_axis) {
    Vec lo = dom.bbox_lo(), hi = dom.bbox_hi();
    std::vector<Vec> out;
    long total = 1;
    for (int a = 0; a < dom.dim; ++a) total *= per_axis;
    for (long idx = 0; idx < total; ++idx) {
        Vec x(dom.dim);
        long rest = idx;
        for (int a = 0; a < dom.dim; ++a) {
            int i = static_cast<int>(rest % per_axis);
            rest /= per_axis;
            // Cell midpoints keep samples off the boundary.
            x(a) = lo(a) + (hi(a) - lo(a)) * (i + 0.5) / per_axis;
        }
        if (signed_distance(dom, x) < 0.0) out.push_back(x);
    }
    return out;
}

std::vector<Vec> boundary_samples(const DomainGeometry& dom, int n) {
    std::vector<Vec> out;
    if (dom.kind == DomainKind::box) {
        int per_face = std::max(1, n / (2 * dom.dim));
        for (int a = 0; a < dom.dim; ++a)
            for (int side = 0; side < 2; ++side)
                for (int k = 0; k < per_face; ++k) {
                    Vec x = 0.5 * (dom.lo + dom.hi);
                    int other = (a + 1) % dom.dim;
                    if (other != a) x(other) = dom.lo(other) + (dom.hi(other) - dom.lo(other)) * (k + 0.5) / per_face;
                    x(a) = side == 0 ? dom.lo(a) : dom.hi(a);
                    out.push_back(x);
                }
        return out;
    }
    for (int k = 0; k < n; ++k) {
        Vec u(dom.dim);
        if (dom.dim == 1) {
            u(0) = k % 2 == 0 ? 1.0 : -1.0;
        } else if (dom.dim == 2) {
            double th = 2.0 * std::numbers::pi * k / n;
            u << std::cos(th), std::sin(th);
        } else {
            // Fibonacci sphere.
            double z = 1.0 - 2.0 * (k + 0.5) / n;
            double r = std::sqrt(1.0 - z * z);
            double ph = k * std::numbers::pi * (3.0 - std::sqrt(5.0));
            u << r * std::cos(ph), r * std::sin(ph), z;
        }
        out.push_back(Vec(dom.center + dom.radius * u));
    }
    return out;
}

}  // namespace rbsde
