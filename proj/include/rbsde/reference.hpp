#pragma once

#include "rbsde/fields.hpp"
#include "rbsde/grid_function.hpp"

#include <functional>
#include <vector>

namespace rbsde {

// Strong-form oracle problem (two-dimensional disk or box):
//   L u + G(x, u) = 0 in D,   1/2 du/dgamma - <Bhat, n> u = Phi on dD,
// with L = 1/2 div(A grad) + B.grad - div(Bhat .) + Q and inward n.
struct FdProblem {
    DomainGeometry dom;
    CoefficientSet coeffs;
    std::function<double(const Vec&, double)> G;  // null means G = 0
    ScalarField d1;                               // monotonicity shift for the nonlinear iteration
    ScalarField Phi;                              // null means Phi = 0
    bool nonlinear = false;
};

struct FdResolution {
    int nr = 48;   // polar radial intervals
    int nt = 96;   // polar angular nodes
    int n = 61;    // cartesian nodes per axis
    static FdResolution refined(const FdResolution& r) { return {2 * r.nr, 2 * r.nt, 2 * r.n - 1}; }
};

struct FdResult {
    GridFunction u;
    int iterations = 0;
    double residual = 0.0;                // max |discrete equation residual|
    std::vector<double> update_history;   // sup-norm change per damped iteration
};

inline constexpr double kFdDamping = 0.7;

// Direct sparse solve; semilinear problems use damped Picard with the d1 shift.
// Throws NonConvergence when the nonlinear iteration stalls.
FdResult fd_solve(const FdProblem& p, const FdResolution& res = {}, int max_iterations = 500);

// Galerkin Q1 solution of int <A grad v, grad g> = int <Bhat, grad g> for all mesh test functions g,
// normalized to zero mean. Polar mesh on balls, Cartesian mesh on boxes.
struct VSolution {
    GridFunction v;
    double weak_residual = 0.0;
};
VSolution solve_v(const DomainGeometry& dom, const CoefficientSet& coeffs, const VectorField& Bhat,
                  const FdResolution& res = {});

// Residuals of Q(u, g) + int_dD Phi g = int_D F(x, u) g over smooth test functions. With the inward
// normal, Green's formula puts Phi on the left-hand side.
// Interior tests vanish on dD; boundary tests are global monomials (the first one is g = 1).
struct WeakResidual {
    double interior = 0.0;
    double boundary = 0.0;
    std::vector<double> interior_terms;
    std::vector<double> boundary_terms;
};
WeakResidual residual_check(const GridFunction& u, const FdProblem& p, int n_tests = 6);

// Monomials x^a y^b ordered by total degree: 1, x, y, x^2, xy, y^2, ...
std::vector<std::pair<int, int>> monomial_exponents(int count);

}  // namespace rbsde
