#pragma once

#include "rbsde/fields.hpp"
#include "rbsde/geometry.hpp"
#include "rbsde/types.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace rbsde {

// One stream per path; same (seed, stream_id) gives the same draws.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);
    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }  // [0, 1)
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;  // ziggurat
    boost::random::uniform_01<double> uniform_;
};

std::uint64_t splitmix64(std::uint64_t x);

// L0: driftless X0 (generator 1/2 div(A grad)). L1: drifted X with drift field b.
enum class DriftMode { L0, L1 };

struct McSettings {
    long n_paths = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 42;
    int threads = 0;
};

// Euler step X' = X + b~ dt + sigma(X) sqrt(dt) xi with a boundary correction: near the boundary the
// normal coordinate is treated as a one-dimensional Brownian bridge, its minimum is sampled, and the
// half-space Skorokhod push A(X) n dL is applied (first-order local time instead of the O(sqrt dt)
// projection bias). Whatever remains exterior is pushed back along the conormal.
// dL is the push length in conormal units; the push equals A(X) n dL exactly.
class ReflectedStepper {
public:
    ReflectedStepper(const DomainGeometry& dom, const CoefficientSet& coeffs, DriftMode mode, VectorField b,
                     double dt);

    struct Step {
        Vec next;
        Vec dM;
        Vec drift;
        double dL = 0.0;
        Vec n;
    };

    void step(const Vec& x, RngStream& rng, Step& out) const;

    double dt() const { return dt_; }
    const DomainGeometry& domain() const { return *dom_; }
    const CoefficientSet& coefficients() const { return *coeffs_; }
    Mat A_at(const Vec& x) const { return coeffs_->A_constant ? *coeffs_->A_constant : coeffs_->A(x); }

private:
    const DomainGeometry* dom_;
    const CoefficientSet* coeffs_;
    DriftMode mode_;
    VectorField b_;
    double dt_;
    double sqrt_dt_;
    bool constant_sigma_ = false;
    bool zero_drift_ = false;  // driftless mode with constant A
    Mat sigma_;
};

struct PathBundle {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> mart_increments;
    std::vector<Vec> drift_increments;
    std::vector<double> loc_increments;
    std::vector<Vec> normals;
    DriftMode drift_flag = DriftMode::L0;

    std::size_t steps() const { return loc_increments.size(); }
    double local_time() const;
};

// Number of uniform steps covering [0, T].
long step_count(double T, double dt);

PathBundle simulate_path(const DomainGeometry& dom, const CoefficientSet& coeffs, DriftMode mode,
                         const VectorField& b, const Vec& x0, double dt, double T, RngStream& rng);

// Largest |X_{k+1} - X_k - (dM + drift + A(X_k) n dL)| over the path.
double telescoping_error(const PathBundle& path, const CoefficientSet& coeffs);

// E0_x[(L0_t)^n] from i.i.d. driftless paths.
Estimate estimate_local_time_moment(const DomainGeometry& dom, const CoefficientSet& coeffs, const Vec& x0, int n,
                                    double t, const McSettings& mc);

}  // namespace rbsde
