#include "rbsde/functionals.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace rbsde;

namespace {

DomainGeometry unit_disk() { return DomainGeometry::ball(make_vec({0.0, 0.0}), 1.0); }

WeightFields constant_potential(double q) {
    WeightFields w;
    w.q = [q](const Vec&) { return q; };
    return w;
}

}  // namespace

TEST(Functionals, ConstantPotentialGivesDeterministicWeights) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, -1.0);
    RngStream rng(1, 0);
    PathBundle p = simulate_path(d, c, DriftMode::L0, nullptr, make_vec({0.0, 0.0}), 1e-2, 1.0, rng);
    WeightTrace tr = accumulate_weights(p, c, constant_potential(-1.0));
    ASSERT_EQ(tr.log_z.size(), p.states.size());
    EXPECT_NEAR(tr.log_z.back(), -1.0, 1e-14);
    EXPECT_EQ(tr.log_mtilde.back(), 0.0);
    EXPECT_TRUE(tr.log_zhat.empty());
}

TEST(Functionals, ZhatWithoutPotentialThrows) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, 0.0);
    RngStream rng(1, 0);
    PathBundle p = simulate_path(d, c, DriftMode::L0, nullptr, make_vec({0.0, 0.0}), 1e-2, 0.1, rng);
    EXPECT_THROW(accumulate_weights(p, c, WeightFields{}, true), MissingV);
}

TEST(Functionals, StreamingAccumulatorMatchesTrace) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, 0.0);
    WeightFields w;
    w.b = [](const Vec& x) { return make_vec({1.0 - x(1), 0.5 * x(0)}); };
    w.q = [](const Vec& x) { return -x.squaredNorm(); };
    RngStream rng(5, 2);
    PathBundle p = simulate_path(d, c, DriftMode::L0, nullptr, make_vec({0.2, 0.1}), 1e-3, 0.5, rng);
    WeightTrace tr = accumulate_weights(p, c, w);
    WeightAccumulator acc(c, w);
    for (std::size_t k = 0; k < p.steps(); ++k) acc.update(p.states[k], p.mart_increments[k], 1e-3);
    EXPECT_NEAR(acc.log_z(), tr.log_z.back(), 1e-12);
    EXPECT_NEAR(acc.log_mtilde(), tr.log_mtilde.back(), 1e-12);
}

TEST(Functionals, ZhatAddsPotentialDifference) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, 0.0);
    Mesh mesh = Mesh::cartesian_for(d, 11);
    GridFunction v(mesh);
    for (std::size_t i = 0; i < mesh.size(); ++i) v.values()[i] = mesh.node(i)(0);
    WeightFields w;
    w.v = &v;
    RngStream rng(5, 2);
    PathBundle p = simulate_path(d, c, DriftMode::L0, nullptr, make_vec({0.2, 0.1}), 1e-3, 0.3, rng);
    WeightTrace tr = accumulate_weights(p, c, w, true);
    ASSERT_EQ(tr.log_zhat.size(), tr.log_z.size());
    EXPECT_NEAR(tr.log_zhat.back() - tr.log_z.back(), p.states.back()(0) - 0.2, 1e-12);
}

TEST(Functionals, GirsanovReweightingMatchesDriftedProcess) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, 0.0);
    VectorField b = [](const Vec&) { return make_vec({1.0, 0.0}); };
    ScalarField f = [](const Vec& x) { return x(0) + 0.5 * x(1) * x(1); };
    GirsanovReport r = girsanov_consistency(d, c, b, make_vec({0.0, 0.0}), f, 0.5, {20000, 1e-3, 17, 1});
    EXPECT_LT(r.z, 4.0);
    // The drift visibly moves the mean, so the check is not vacuous.
    EXPECT_GT(r.rhs.value, 0.2);
}

TEST(Functionals, SemigroupOfConstantPotentialIsExponential) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, -0.7);
    Estimate e = semigroup_estimate(d, c, constant_potential(-0.7), make_vec({0.3, 0.0}),
                                    [](const Vec&) { return 1.0; }, 2.0, {500, 1e-2, 3, 1});
    EXPECT_NEAR(e.value, std::exp(-1.4), 1e-12);
}

TEST(Functionals, DecayFitRecoversExponential) {
    std::vector<double> ts = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> ms;
    for (double t : ts) ms.push_back(2.0 * std::exp(-0.5 * t));
    DecayFit f = fit_decay(ts, ms);
    EXPECT_NEAR(f.beta_hat, 0.5, 1e-12);
    EXPECT_NEAR(f.K_hat, 2.0, 1e-12);
    EXPECT_NEAR(f.residual, 0.0, 1e-12);
    ms[1] = 0.0;
    DecayFit g = fit_decay(ts, ms);
    EXPECT_EQ(g.dropped_times.size(), 1u);
    EXPECT_NEAR(g.beta_hat, 0.5, 1e-12);
}

TEST(Functionals, DecayRateForConstantPotential) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, -1.0);
    DecayFit f = decay_rate_estimate(d, c, constant_potential(-1.0), {make_vec({0.0, 0.0}), make_vec({0.5, 0.5})},
                                     {1.0, 2.0, 3.0}, {200, 1e-2, 3, 1});
    EXPECT_NEAR(f.beta_hat, 1.0, 1e-10);
    EXPECT_NEAR(f.K_hat, 1.0, 1e-10);
}

// E int e^{-t} dL_t from the centre solves 1/2 Lap w = w, inward derivative -1: w = I0(sqrt2 r) / (sqrt2 I1(sqrt2)).
TEST(Functionals, GaugeMatchesBesselClosedForm) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, -1.0);
    GaugeResult g = gauge_estimate(d, c, constant_potential(-1.0), make_vec({0.0, 0.0}), 8.0, {4000, 2e-3, 21, 1});
    const double s2 = std::sqrt(2.0);
    double exact = 1.0 / (s2 * boost::math::cyl_bessel_i(1, s2));
    EXPECT_FALSE(g.divergent);
    EXPECT_NEAR(g.value.value, exact, 3.0 * g.value.std_error + 0.01 * exact);
    EXPECT_LT(g.tail, 1e-2);
    EXPECT_NEAR(g.decay.beta_hat, 1.0, 1e-10);
    ASSERT_EQ(g.partial_sums.size(), 3u);
}

TEST(Functionals, GaugeWithoutPotentialDiverges) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, 0.0);
    GaugeResult g = gauge_estimate(d, c, constant_potential(0.0), make_vec({0.0, 0.0}), 4.0, {1000, 4e-3, 21, 1});
    EXPECT_TRUE(g.divergent);
    EXPECT_TRUE(std::isinf(g.tail));
    EXPECT_GT(g.boundary_rate, 0.0);
}

TEST(Functionals, SandwichOrdersBoundaryWeights) {
    DomainGeometry d = unit_disk();
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, -1.0);
    SandwichResult s = weighted_localtime_sandwich(d, c, constant_potential(-1.0),
                                                   {make_vec({0.0, 0.0}), make_vec({0.9, 0.0})}, 0.5,
                                                   {2000, 2e-3, 4, 1});
    ASSERT_EQ(s.values.size(), 2u);
    EXPECT_LE(s.min.value, s.max.value);
    // Starting near the boundary collects more local time than starting at the centre.
    EXPECT_GT(s.values[1].value, s.values[0].value);
}
