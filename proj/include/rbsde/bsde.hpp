#pragma once

#include "rbsde/fields.hpp"
#include "rbsde/functionals.hpp"
#include "rbsde/rsde.hpp"

#include <vector>

namespace rbsde {

// L2: monotone generator with discount d = -d1 + delta d2^2.
// L1: generator is reweighted to f^(t, y) = e^{D_t} f(e^{-D_t} y) - d y with D_t = int_0^t d before solving.
enum class BsdeMode { L2, L1 };

// Y_t = Y_T + int_t^T f(X, Y, Z) ds - int_t^T e^{int_0^s q~} Phi(X) dL_s - int_t^T Z dM.
struct BsdeProblem {
    Nonlinearity generator;
    ScalarField Phi;      // null means 0
    ScalarField q_tilde;  // null means 0
    BsdeMode mode = BsdeMode::L2;
    VectorField drift;    // drift b of the forward process; null means the driftless process
};

struct BsdeSettings {
    McSettings mc;
    int stride = 20;                                  // fine steps per regression step
    int basis_size = 10;
    // Trapezoidal generator step (second order in the regression step); false gives the explicit step.
    bool trapezoidal = true;
    std::vector<double> horizons = {5.0, 10.0, 20.0, 40.0};
    double tol = 1e-2;
    bool track_z = false;  // per-path Z along the whole path (needed for the beta-norm diagnostic)
};

// Polynomials up to degree 2 plus Gaussian bumps, in coordinates scaled to the domain.
class RegressionBasis {
public:
    RegressionBasis(const DomainGeometry& dom, int size);
    int size() const { return size_; }
    void eval(const Vec& x, double* out) const;

private:
    int dim_;
    int size_;
    int n_poly_;
    Vec center_;
    double scale_;
    std::vector<Vec> bumps_;
    double bump_width_;
};

struct BsdeSolution {
    Estimate y0;
    Vec z0;
    double horizon = 0.0;
    double regression_dt = 0.0;
    // Summary of fitted Y at a thinned set of regression times.
    std::vector<double> summary_times, y_mean, y_q05, y_q95;
    // E[e^{2 int_0^{T/2} d} |Y_{T/2}|^2] at half the horizon (Y vanishes identically at T).
    double decay_residual = 0.0;
    double discount_rate = 0.0;  // -log(E e^{2 int_0^{T/2} d}) / T
    std::vector<double> horizon_values, horizon_errors, horizon_decay_residuals;
    bool converged = false;
    // Per-path samples of Y_0, sup_t |Y_t| and int |Z|^2 dt (the last two only with track_z).
    std::vector<double> samples, sup_abs_y, int_z2;
    // Regression coefficients per regression step, for evaluating Y_t(x) off the sample.
    std::vector<std::vector<double>> coefficients;
    int basis_size = 0;

    // Fitted Y at time t (rounded down to a regression step) and point x.
    double y_at(const DomainGeometry& dom, double t, const Vec& x) const;
};

struct BoundaryPotential {
    Estimate p0;
    double tail = 0.0;
    GaugeResult gauge;
};

// p_x(0) = -E[int_0^T e^{int q~} Phi(X) dL] with the gauge of q~ checked first. Throws GaugeDiverges.
BoundaryPotential boundary_potential(const DomainGeometry& dom, const CoefficientSet& coeffs, const BsdeProblem& p,
                                     const Vec& x0, double T_max, const McSettings& mc);

// Zero terminal value at `horizon`. Throws SingularRegression on rank loss of the normal equations.
BsdeSolution solve_truncated(const BsdeProblem& p, const DomainGeometry& dom, const CoefficientSet& coeffs,
                             const Vec& x0, double horizon, const BsdeSettings& s);

// Doubles the horizon until |y0(2n) - y0(n)| <= tol + 3 SE of the paired difference.
// Throws NoDecay when the schedule is exhausted and the discount shows no decay.
BsdeSolution solve_infinite_horizon(const BsdeProblem& p, const DomainGeometry& dom, const CoefficientSet& coeffs,
                                    const Vec& x0, const BsdeSettings& s);

struct Y0BoundScan {
    double max_abs_y0 = 0.0;
    std::vector<Estimate> values;
    double sup_phi = 0.0;
    double gauge_sup = 0.0;
    double generator_part = 0.0;  // sup K / min(-d)
    double bound = 0.0;           // sup|Phi| gauge_sup + generator_part
};

Y0BoundScan y0_bound_scan(const BsdeProblem& p, const DomainGeometry& dom, const CoefficientSet& coeffs,
                          const std::vector<Vec>& x0s, const BsdeSettings& s, double gauge_T_max = 10.0);

struct BetaNorms {
    Estimate sup_y;  // E[sup_t |Y_t|^beta]
    Estimate z_int;  // E[(int |Z|^2 dt)^{beta/2}]
};

BetaNorms beta_norm_diagnostic(const std::vector<double>& sup_abs_y, const std::vector<double>& int_z2, double beta);
BetaNorms beta_norm_diagnostic(const BsdeSolution& sol, double beta);

}  // namespace rbsde
