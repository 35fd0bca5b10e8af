#pragma once

#include "rbsde/geometry.hpp"
#include "rbsde/grid_function.hpp"
#include "rbsde/types.hpp"

#include <limits>
#include <optional>

namespace rbsde {

// Coefficients of L = 1/2 div(A grad) + B.grad - div(Bhat .) + Q.
struct CoefficientSet {
    int dim = 2;
    MatrixField A;
    VectorField B;
    VectorField Bhat;
    ScalarField Q;
    double lambda = 1.0 + 1e-9;  // ellipticity: A in [1/lambda, lambda]
    double p_exponent = 3.0;     // integrability exponent, p > d/2

    // Optional analytic pieces; finite differences are used when absent.
    std::optional<Mat> A_constant;  // set when A does not depend on x
    VectorField divA;               // (div A)_i = sum_j d_j a_ij
    ScalarField divBhat;
    bool B_zero = false;
    bool Bhat_zero = false;

    // Singular fields are clipped at this magnitude during simulation; reported in output.
    double cap = std::numeric_limits<double>::infinity();
    // Location of an integrable singularity of Bhat, if any; quadratures are graded towards it.
    std::optional<Vec> singular_point;

    // Convenience: A = a0 I, B = Bhat = 0, Q = q0.
    static CoefficientSet isotropic(int dim, double a0, double q0);
};

// Probes ellipticity and symmetry on sample points and unit directions; returns false on violation.
bool check_ellipticity(const CoefficientSet& c, const std::vector<Vec>& points, int n_dirs = 16);

// Clips |v| at cap, keeping direction.
Vec clip_vector(const Vec& v, double cap);

struct TransformedCoefficients {
    VectorField b;
    ScalarField q;
    GridFunction v;
    VectorField grad_v;
};

// F(x, y, z): d1 is the monotonicity coefficient, d2 the Lipschitz constant in z.
struct Nonlinearity {
    std::function<double(const Vec&, double, const Vec&)> eval;
    ScalarField d1;
    double d2 = 0.0;
    double delta = 1.0;  // default 1 / lambda
    ScalarField K;

    // Discount d(x) = -d1(x) + delta d2^2.
    double discount(const Vec& x) const;

    static Nonlinearity from_source(ScalarField F);  // F(x, y, z) = F(x), d1 = 0
    static Nonlinearity linear_in_y(ScalarField a, double slope, double lambda);  // a(x) - slope y
};

// Empirical monotonicity and z-Lipschitz probes.
bool check_monotone(const Nonlinearity& F, const std::vector<Vec>& points, const std::vector<double>& ys,
                    const std::vector<Vec>& zs);

Mat matrix_sqrt(const Mat& A);

// 1/2 div A + b, with b supplied by the caller (raw B or transformed b).
Vec drift_tilde(const CoefficientSet& c, const DomainGeometry& dom, const Vec& b, const Vec& x);
Vec div_A(const CoefficientSet& c, const DomainGeometry& dom, const Vec& x);
inline constexpr double kStepA = 1e-5;

// b = B - Bhat - A grad v, q = Q + 1/2 grad v^T A grad v - <B - Bhat, grad v>.
TransformedCoefficients transform_coefficients(const CoefficientSet& c, const DomainGeometry& dom,
                                               const GridFunction& v);

// Smooth scalar field with analytic first and second derivatives.
struct SmoothField {
    ScalarField value;
    VectorField grad;
    MatrixField hess;
};

struct ManufacturedData {
    ScalarField F_data;  // L u* = -F_data
    ScalarField Phi;     // 1/2 du*/dgamma - <Bhat, n> u* on the boundary
};

ManufacturedData manufactured_problem(const SmoothField& u_star, const CoefficientSet& c,
                                      const DomainGeometry& dom);

// Applies L to a smooth field with analytic derivatives of u (coefficient derivatives by FD when needed).
double apply_operator(const SmoothField& u, const CoefficientSet& c, const DomainGeometry& dom, const Vec& x);
double div_Bhat(const CoefficientSet& c, const DomainGeometry& dom, const Vec& x);

}  // namespace rbsde
