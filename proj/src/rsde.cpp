#include "rbsde/rsde.hpp"

#include "rbsde/parallel.hpp"

#include <cmath>

namespace rbsde {

namespace {

constexpr double kBridgeReach = 7.0;       // in units of sqrt(lambda dt); hitting probability below e^{-98}
constexpr double kBridgeMinProb = 1e-14;  // skip the bridge draw below this hitting probability

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(splitmix64(seed ^ splitmix64(stream_id))) {}

ReflectedStepper::ReflectedStepper(const DomainGeometry& dom, const CoefficientSet& coeffs, DriftMode mode,
                                   VectorField b, double dt)
    : dom_(&dom), coeffs_(&coeffs), mode_(mode), b_(std::move(b)), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (mode_ == DriftMode::L1 && !b_) throw std::invalid_argument("drifted mode needs a drift field");
    if (coeffs.A_constant) {
        constant_sigma_ = true;
        sigma_ = matrix_sqrt(*coeffs.A_constant);
        zero_drift_ = mode_ == DriftMode::L0;
    }
}

void ReflectedStepper::step(const Vec& x, RngStream& rng, Step& out) const {
    const int d = dom_->dim;
    Vec xi(d);
    for (int i = 0; i < d; ++i) xi(i) = rng.normal();
    if (constant_sigma_) {
        out.dM.noalias() = sigma_ * xi;
    } else {
        out.dM.noalias() = matrix_sqrt(coeffs_->A(x)) * xi;
    }
    out.dM *= sqrt_dt_;
    if (zero_drift_) {
        out.drift.setZero(d);
    } else {
        Vec b = mode_ == DriftMode::L1 ? clip_vector(b_(x), coeffs_->cap) : Vec(Vec::Zero(d));
        out.drift = drift_tilde(*coeffs_, *dom_, b, x) * dt_;
    }
    Vec proposal = x + out.drift + out.dM;
    const double sd_prop = signed_distance(*dom_, proposal);
    const double sd_x = signed_distance(*dom_, x);
    const double reach = kBridgeReach * std::sqrt(coeffs_->lambda * dt_);
    if (sd_prop <= dom_->eps_geom && -sd_x > reach && -sd_prop > reach) {
        out.next = proposal;
        out.dL = 0.0;
        out.n.setZero(d);
        return;
    }
    const Mat A = A_at(x);
    Vec push = Vec::Zero(d);
    Vec landing = proposal;
    // Bridge minimum of the normal coordinate y_s = dist + n.(X_s - x): m = (y - sqrt(y^2 - 2 s2 dt log U)) / 2.
    Projection px = boundary_projection(*dom_, x, true);
    const double dist = std::max(0.0, -sd_x);
    const double s2 = px.n.dot(A * px.n);
    const double y = px.n.dot(out.drift + out.dM);
    const double end = dist + y;
    const double p_hit = end <= 0.0 ? 1.0 : std::exp(-2.0 * dist * end / (s2 * dt_));
    if (p_hit > kBridgeMinProb) {
        double u = 1.0 - rng.uniform();  // (0, 1]
        double m = 0.5 * (y - std::sqrt(y * y - 2.0 * s2 * dt_ * std::log(u)));
        double ell = -(dist + m);
        if (ell > 0.0) {
            push = A * px.n * (ell / s2);
            landing = proposal + push;
        }
    }
    if (signed_distance(*dom_, landing) > dom_->eps_geom) {
        Reflection r = reflect_along_conormal(*dom_, A, landing);
        push += r.landing - landing;
        landing = r.landing;
    }
    out.next = landing;
    if (push.isZero(0.0)) {
        out.dL = 0.0;
        out.n.setZero(d);
        return;
    }
    // Single conormal direction carrying the whole push: A n dL = push.
    Vec a_inv_push = A.ldlt().solve(push);
    out.dL = a_inv_push.norm();
    out.n = a_inv_push / out.dL;
}

double PathBundle::local_time() const { return compensated_sum(loc_increments); }

long step_count(double T, double dt) {
    long k = std::lround(T / dt);
    return std::max<long>(k, 1);
}

PathBundle simulate_path(const DomainGeometry& dom, const CoefficientSet& coeffs, DriftMode mode,
                         const VectorField& b, const Vec& x0, double dt, double T, RngStream& rng) {
    if (!(T >= dt)) throw std::invalid_argument("horizon must be at least one step");
    if (signed_distance(dom, x0) > dom.eps_geom) throw std::invalid_argument("start point lies outside the domain");
    ReflectedStepper stepper(dom, coeffs, mode, b, dt);
    const long K = step_count(T, dt);
    PathBundle p;
    p.drift_flag = mode;
    p.times.reserve(K + 1);
    p.states.reserve(K + 1);
    p.times.push_back(0.0);
    p.states.push_back(x0);
    ReflectedStepper::Step s;
    for (long k = 0; k < K; ++k) {
        stepper.step(p.states.back(), rng, s);
        p.times.push_back((k + 1) * dt);
        p.states.push_back(s.next);
        p.mart_increments.push_back(s.dM);
        p.drift_increments.push_back(s.drift);
        p.loc_increments.push_back(s.dL);
        p.normals.push_back(s.n);
    }
    return p;
}

double telescoping_error(const PathBundle& path, const CoefficientSet& coeffs) {
    double worst = 0.0;
    for (std::size_t k = 0; k < path.steps(); ++k) {
        const Vec& x = path.states[k];
        Mat A = coeffs.A_constant ? *coeffs.A_constant : coeffs.A(x);
        Vec push = A * path.normals[k] * path.loc_increments[k];
        Vec recon = path.mart_increments[k] + path.drift_increments[k] + push;
        worst = std::max(worst, (path.states[k + 1] - x - recon).cwiseAbs().maxCoeff());
    }
    return worst;
}

Estimate estimate_local_time_moment(const DomainGeometry& dom, const CoefficientSet& coeffs, const Vec& x0, int n,
                                    double t, const McSettings& mc) {
    if (n < 1) throw std::invalid_argument("moment order must be >= 1");
    if (!(t >= mc.dt)) throw std::invalid_argument("t must be at least dt");
    ReflectedStepper stepper(dom, coeffs, DriftMode::L0, nullptr, mc.dt);
    const long K = step_count(t, mc.dt);
    std::vector<double> samples(mc.n_paths);
    parallel_for(samples.size(), mc.threads, [&](std::size_t i) {
        RngStream rng(mc.seed, i);
        Vec x = x0;
        ReflectedStepper::Step s;
        double L = 0.0;
        for (long k = 0; k < K; ++k) {
            stepper.step(x, rng, s);
            x = s.next;
            L += s.dL;
        }
        samples[i] = std::pow(L, n);
    });
    return summarize(samples, t);
}

}  // namespace rbsde
