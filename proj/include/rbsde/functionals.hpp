#pragma once

#include "rbsde/fields.hpp"
#include "rbsde/grid_function.hpp"
#include "rbsde/rsde.hpp"

#include <vector>

namespace rbsde {

// Drift b and potential q entering Z_t = exp(int <A^-1 b, dM0> - 1/2 int b A^-1 b dt + int q dt).
struct WeightFields {
    VectorField b;  // null means b = 0
    ScalarField q;  // null means q = 0
    const GridFunction* v = nullptr;  // enables Zhat = Z exp(v(X_t) - v(X_0))
};

struct WeightTrace {
    std::vector<double> log_mtilde;
    std::vector<double> log_eq;
    std::vector<double> log_z;
    std::vector<double> log_zhat;  // empty unless requested
    const PathBundle* path = nullptr;
};

// Left-point accumulation of the exponents along a driftless path. Throws MissingV when
// want_zhat is set without w.v.
WeightTrace accumulate_weights(const PathBundle& path, const CoefficientSet& coeffs, const WeightFields& w,
                               bool want_zhat = false);

// Streaming version of the same sums.
class WeightAccumulator {
public:
    WeightAccumulator(const CoefficientSet& coeffs, const WeightFields& w) : coeffs_(&coeffs), w_(&w) {}
    void reset() { mt_ = mt_c_ = eq_ = eq_c_ = 0.0; }
    // Adds the increment of step k from state x with martingale increment dM.
    void update(const Vec& x, const Vec& dM, double dt);
    double log_mtilde() const { return mt_ + mt_c_; }
    double log_eq() const { return eq_ + eq_c_; }
    double log_z() const { return log_mtilde() + log_eq(); }

private:
    const CoefficientSet* coeffs_;
    const WeightFields* w_;
    double mt_ = 0.0, mt_c_ = 0.0, eq_ = 0.0, eq_c_ = 0.0;
};

struct GirsanovReport {
    Estimate lhs;  // E0[M~_t f(X0_t)]
    Estimate rhs;  // E[f(X_t)]
    double z = 0.0;
};

GirsanovReport girsanov_consistency(const DomainGeometry& dom, const CoefficientSet& coeffs, const VectorField& b,
                                    const Vec& x0, const ScalarField& f, double t, const McSettings& mc);

// T_t f(x0) = E0[Z_t f(X0_t)] (Zhat when w.v is set).
Estimate semigroup_estimate(const DomainGeometry& dom, const CoefficientSet& coeffs, const WeightFields& w,
                            const Vec& x0, const ScalarField& f, double t, const McSettings& mc);

struct DecayFit {
    double K_hat = 0.0;
    double beta_hat = 0.0;
    double residual = 0.0;              // RMS of the log-linear fit
    std::vector<double> times;          // times used in the fit
    std::vector<double> sup_means;      // sup over x0 of E0[Z_t] at every grid time
    std::vector<double> dropped_times;  // nonpositive means
};

// Unweighted least squares of log sup_x E0[Z_t] against t.
DecayFit fit_decay(const std::vector<double>& t_grid, const std::vector<double>& sup_means);

DecayFit decay_rate_estimate(const DomainGeometry& dom, const CoefficientSet& coeffs, const WeightFields& w,
                             const std::vector<Vec>& x0s, const std::vector<double>& t_grid, const McSettings& mc);

struct GaugeResult {
    Estimate value;  // E0[sum_{t_k <= T_max} Z_{t_k} dL_k]
    double tail = 0.0;
    bool divergent = false;
    double boundary_rate = 0.0;
    DecayFit decay;
    std::vector<double> checkpoints;  // T_max / 4, T_max / 2, T_max
    std::vector<Estimate> partial_sums;
};

// Divergent when no decay of E0[Z_t] is detected or the partial sums do not level off.
GaugeResult gauge_estimate(const DomainGeometry& dom, const CoefficientSet& coeffs, const WeightFields& w,
                           const Vec& x0, double T_max, const McSettings& mc);

struct SandwichResult {
    Estimate min;
    Estimate max;
    std::vector<Estimate> values;
};

SandwichResult weighted_localtime_sandwich(const DomainGeometry& dom, const CoefficientSet& coeffs,
                                           const WeightFields& w, const std::vector<Vec>& x0s, double t,
                                           const McSettings& mc);

inline constexpr double kDecayFloor = 0.02;

}  // namespace rbsde
