#pragma once

#include "rbsde/bsde.hpp"
#include "rbsde/fields.hpp"
#include "rbsde/functionals.hpp"
#include "rbsde/reference.hpp"

#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace rbsde {

// linear:     L2 u = F_data,           1/2 du/dgamma = phi    (L2 = 1/2 div(A grad) + B.grad + Q)
// semilinear: L2 u + G(x, u) = 0,      1/2 du/dgamma = phi
// mixed_full: L f + G(x, f) = 0,       1/2 df/dgamma - <Bhat, n> f = Phi
enum class ProblemForm { linear, semilinear, mixed_full };

struct ProblemSpec {
    DomainGeometry dom;
    CoefficientSet coeffs;
    ProblemForm form = ProblemForm::linear;
    ScalarField F_data;  // linear form
    ScalarField phi;     // Neumann data (linear, semilinear); null means 0
    Nonlinearity G;      // semilinear and mixed forms
    ScalarField Phi;     // mixed form; null means 0
};

struct SolverSettings {
    McSettings mc;           // evaluation points
    double T_max = 10.0;     // time truncation of the Feynman-Kac integrals
    double kappa_L = -2.0;   // boundary weight on E[int Z phi dL]
    double u1_sign = -1.0;   // sign of the volume part int T_t F dt
    bool check_gauge = true;
    McSettings gauge_mc{2000, 1e-3, 7, 0};
    double gauge_T_max = 10.0;
    // Picard mesh stage (semilinear and mixed forms).
    int mesh_n = 61;
    long mesh_paths = 64;
    double mesh_dt = 1e-2;
    double mesh_T_max = 8.0;
    double picard_tol = 1e-3;
    int picard_max = 20;
    // Mixed form.
    double eps_cfg = 0.5;
    FdResolution v_resolution;
    bool use_bsde_route = false;  // solve the transformed problem by the BSDE instead of the fixed point
    BsdeSettings bsde;
};

struct SolutionField {
    std::vector<Vec> points;
    std::vector<Estimate> values;
    std::vector<Estimate> volume_parts;    // linear form: u1 contribution
    std::vector<Estimate> boundary_parts;  // linear form: kappa_L contribution
    std::vector<double> picard_history;    // sup-norm change per mesh iteration
    GridFunction mesh_field;               // last Picard iterate (semilinear and mixed forms)
    std::vector<std::pair<std::string, double>> diagnostics;

    void add(const std::string& key, double value) { diagnostics.emplace_back(key, value); }
    double diagnostic(const std::string& key, double fallback = 0.0) const;
};

// u = u1_sign int_0^T T_t F dt + kappa_L E0[int_0^T Z phi dL], estimated on driftless paths with Girsanov
// weights. Throws GaugeDiverges / NoDecay when the gauge check fails.
SolutionField solve_linear(const ProblemSpec& spec, const std::vector<Vec>& points, const SolverSettings& s);

// Fixed point u^{m+1} = linear solve with q - d1 and source G(u^m) + d1 u^m on the mesh; final values at the
// points with the full Monte-Carlo settings. Throws PicardStalled.
SolutionField solve_semilinear(const ProblemSpec& spec, const std::vector<Vec>& points, const SolverSettings& s);

// BSDE form of the semilinear problem at x0: generator q y + G, boundary data -kappa_L phi.
BsdeProblem semilinear_bsde(const ProblemSpec& spec, const SolverSettings& s, BsdeMode mode);

// Strong-form oracle problem for the finite-difference solver.
FdProblem to_fd_problem(const ProblemSpec& spec);

struct SmallnessReport {
    double norm = 0.0;
    bool pass = true;
    double eps_cfg = 0.5;
    std::vector<double> level_norms;  // refinement levels
    double rel_change = 0.0;          // between the two finest levels
};

// ||Bhat||_{L^p(D)} by quadrature, refined three times. Polar quadrature is centered at
// coeffs.singular_point when set.
SmallnessReport smallness_check(const DomainGeometry& dom, const CoefficientSet& coeffs, double eps_cfg,
                                int base_resolution = 32);

struct HTransform {
    GridFunction v;
    CoefficientSet coeffs;  // transformed: B = b, Q = q, Bhat = 0
    bool identity = false;  // Bhat == 0: no transform applied
};

// Solves for v with the source -2 Bhat (the normalization that makes f = e^{-v} u exact) and builds b, q.
HTransform h_transform(const DomainGeometry& dom, const CoefficientSet& coeffs, const FdResolution& res);

// f = e^{-v} u with u the semilinear solution of the transformed problem.
SolutionField solve_mixed_full(const ProblemSpec& spec, const std::vector<Vec>& points, const SolverSettings& s);

struct SemigroupIdentity {
    Estimate direct;     // S_t f(x0) from the mixed-boundary process
    Estimate transformed;  // e^{-v(x0)} S~_t[f e^v](x0)
    double z = 0.0;
};

// Both sides of S_t f = e^{-v} S~_t[f e^v] at x0. Needs smooth Bhat with divergence.
// The direct side runs the process with drift B - Bhat and weight exp(int (Q - div Bhat) ds + kappa_L int <Bhat, n> dL).
SemigroupIdentity semigroup_identity_check(const ProblemSpec& spec, const HTransform& h, const Vec& x0,
                                           const ScalarField& f, double t, const McSettings& mc,
                                           double kappa_L = -2.0);

struct MarkovReport {
    Estimate mean_abs;  // E|u0(X_t) - Y_t(X_t)|
    Estimate mean_signed;
    double budget = 0.0;
    bool pass = false;
};

// Compares the fixed-point field at X_t with the regression estimate of Y_t along fresh paths from x0.
MarkovReport markov_consistency_check(const ProblemSpec& spec, const GridFunction& u0, const BsdeSolution& y,
                                      const BsdeProblem& bp, const Vec& x0, double t_probe, const McSettings& mc,
                                      double budget);

struct CalibrationEntry {
    std::string family;
    Vec point;
    double oracle = 0.0;
    Estimate volume;    // E int_0^T Z F dt (unsigned)
    Estimate boundary;  // E int_0^T Z phi dL (unweighted)
};

struct CalibrationResult {
    double kappa_L = 0.0;
    double u1_sign = 0.0;
    double max_error = 0.0;
    std::vector<CalibrationEntry> entries;
    // (kappa, sign, max error) for every candidate.
    std::vector<std::tuple<double, double, double>> table;
};

// Grid search over kappa in {-2, -1, 1, 2} and sign in {-1, 1} on the constant and quadratic manufactured
// families against the finite-difference oracle.
CalibrationResult calibrate(const SolverSettings& s);

}  // namespace rbsde
