#include "rbsde/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rbsde;

namespace {

DomainGeometry unit_disk() { return DomainGeometry::ball(make_vec({0.0, 0.0}), 1.0); }
DomainGeometry square() { return DomainGeometry::box(make_vec({-1.0, -1.0}), make_vec({1.0, 1.0})); }

SmoothField cos_exp() {
    return {[](const Vec& x) { return std::cos(x(0)) * std::exp(x(1)); },
            [](const Vec& x) { return make_vec({-std::sin(x(0)) * std::exp(x(1)), std::cos(x(0)) * std::exp(x(1))}); },
            [](const Vec& x) {
                Mat H(2, 2);
                double e = std::exp(x(1));
                H << -std::cos(x(0)) * e, -std::sin(x(0)) * e, -std::sin(x(0)) * e, std::cos(x(0)) * e;
                return H;
            }};
}

SmoothField square_norm() {
    return {[](const Vec& x) { return x.squaredNorm(); }, [](const Vec& x) { return Vec(2.0 * x); },
            [](const Vec&) { return Mat(2.0 * Mat::Identity(2, 2)); }};
}

// Variable A, nonzero B and Bhat, Q = -1.
CoefficientSet rich_coefficients() {
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, -1.0);
    c.A = [](const Vec& x) {
        Mat A(2, 2);
        A << 1 + 0.2 * x(0) * x(0), 0.1 * x(0) * x(1), 0.1 * x(0) * x(1), 1 + 0.1 * x(1) * x(1);
        return A;
    };
    c.A_constant.reset();
    c.divA = nullptr;
    c.lambda = 2.0;
    c.B = [](const Vec& x) { return make_vec({0.3, -0.2 * x(1)}); };
    c.B_zero = false;
    c.Bhat = [](const Vec& x) { return make_vec({0.1 + 0.05 * x(0), 0.1 * x(1)}); };
    c.Bhat_zero = false;
    c.divBhat = nullptr;
    return c;
}

FdProblem manufactured_fd(const DomainGeometry& dom, const CoefficientSet& c, const SmoothField& u) {
    ManufacturedData md = manufactured_problem(u, c, dom);
    return {dom, c, [md](const Vec& x, double) { return md.F_data(x); }, nullptr, md.Phi, false};
}

double max_nodal_error(const GridFunction& g, const ScalarField& exact) {
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(g.values()[i] - exact(g.mesh().node(i))));
    return err;
}

}  // namespace

TEST(Reference, ConstantSolutionWithRobinData) {
    // Q = -1, F = 1, Phi = 0: u = 1.
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, -1.0);
    FdProblem p{unit_disk(), c, [](const Vec&, double) { return 1.0; }, nullptr, nullptr, false};
    FdResult r = fd_solve(p, {12, 24, 11});
    EXPECT_LT(max_nodal_error(r.u, [](const Vec&) { return 1.0; }), 1e-12);
    p.dom = square();
    r = fd_solve(p, {12, 24, 11});
    EXPECT_LT(max_nodal_error(r.u, [](const Vec&) { return 1.0; }), 1e-12);
}

TEST(Reference, QuadraticIsReproducedExactly) {
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, -1.0);
    FdProblem p = manufactured_fd(unit_disk(), c, square_norm());
    FdResult r = fd_solve(p, {16, 32, 11});
    EXPECT_LT(max_nodal_error(r.u, square_norm().value), 1e-10);
}

TEST(Reference, SecondOrderConvergenceOnDiskAndBox) {
    CoefficientSet c = rich_coefficients();
    for (const DomainGeometry& dom : {unit_disk(), square()}) {
        FdProblem p = manufactured_fd(dom, c, cos_exp());
        double prev = 0.0;
        for (int lev = 0; lev < 3; ++lev) {
            FdResolution res{12 << lev, 24 << lev, (10 << lev) + 1};
            FdResult r = fd_solve(p, res);
            EXPECT_LT(r.residual, 1e-8);
            double err = max_nodal_error(r.u, cos_exp().value);
            if (lev > 0) {
                double ratio = prev / err;
                EXPECT_GT(ratio, 3.5) << "level " << lev;
                EXPECT_LT(ratio, 4.5) << "level " << lev;
            }
            prev = err;
        }
    }
}

TEST(Reference, WeakResidualShrinksUnderRefinement) {
    CoefficientSet c = rich_coefficients();
    FdProblem p = manufactured_fd(unit_disk(), c, cos_exp());
    WeakResidual coarse = residual_check(fd_solve(p, {12, 24, 11}).u, p);
    WeakResidual fine = residual_check(fd_solve(p, {48, 96, 41}).u, p);
    EXPECT_LT(fine.interior, 0.1 * coarse.interior);
    EXPECT_LT(fine.boundary, 0.1 * coarse.boundary);
    EXPECT_LT(fine.boundary, 2e-3);
    EXPECT_EQ(fine.interior_terms.size(), 6u);
}

TEST(Reference, WeakResidualDetectsWrongBoundaryData) {
    CoefficientSet c = rich_coefficients();
    FdProblem p = manufactured_fd(unit_disk(), c, cos_exp());
    GridFunction u = fd_solve(p, {48, 96, 41}).u;
    FdProblem wrong = p;
    ScalarField phi = p.Phi;
    wrong.Phi = [phi](const Vec& x) { return phi(x) + 0.1; };
    EXPECT_GT(residual_check(u, wrong).boundary, 50.0 * residual_check(u, p).boundary);
}

TEST(Reference, SemilinearIterationConverges) {
    CoefficientSet c = rich_coefficients();
    DomainGeometry d = unit_disk();
    ManufacturedData md = manufactured_problem(cos_exp(), c, d);
    SmoothField us = cos_exp();
    FdProblem p{d, c, [md, us](const Vec& x, double u) { return md.F_data(x) + us.value(x) - u; },
                [](const Vec&) { return 1.0; }, md.Phi, true};
    FdResult r = fd_solve(p, {24, 48, 21});
    EXPECT_GT(r.iterations, 1);
    EXPECT_LT(max_nodal_error(r.u, us.value), 1e-2);
    ASSERT_FALSE(r.update_history.empty());
    EXPECT_LT(r.update_history.back(), r.update_history.front());
}

TEST(Reference, PotentialForGradientFieldIsTheMeanFreePotential) {
    // Bhat = grad(0.1 x1) with A = I gives v = 0.1 x1 - mean.
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, 0.0);
    VectorField bhat = [](const Vec&) { return make_vec({0.1, 0.0}); };
    VSolution disk = solve_v(unit_disk(), c, bhat, {24, 48, 21});
    EXPECT_LT(max_nodal_error(disk.v, [](const Vec& x) { return 0.1 * x(0); }), 1e-3);
    EXPECT_LT(disk.weak_residual, 1e-12);
    EXPECT_NEAR(disk.v.mean_over(unit_disk()), 0.0, 1e-12);
    VSolution box = solve_v(square(), c, bhat, {24, 48, 21});
    EXPECT_LT(max_nodal_error(box.v, [](const Vec& x) { return 0.1 * x(0); }), 1e-12);
}

TEST(Reference, PotentialForZeroFieldVanishes) {
    CoefficientSet c = CoefficientSet::isotropic(2, 1.0, 0.0);
    VSolution s = solve_v(unit_disk(), c, [](const Vec&) { return make_vec({0.0, 0.0}); }, {12, 24, 11});
    EXPECT_LT(max_nodal_error(s.v, [](const Vec&) { return 0.0; }), 1e-14);
}

TEST(Reference, MonomialOrdering) {
    auto m = monomial_exponents(6);
    std::vector<std::pair<int, int>> expected = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    EXPECT_EQ(m, expected);
}
