#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace rbsde {

inline constexpr int kMaxDim = 3;

// Fixed-capacity storage: no heap traffic inside the path loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using MatrixField = std::function<Mat(const Vec&)>;

Vec make_vec(std::initializer_list<double> xs);

// Monte-Carlo scalar result.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    double t_max = 0.0;
};

// |a - b| / sqrt(se_a^2 + se_b^2); returns 0 when both are exact and equal.
double z_score(const Estimate& a, const Estimate& b);

enum class ErrorClass { config, hypothesis, numerical, other };

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what, ErrorClass cls = ErrorClass::other)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), cls_(cls) {}
    const std::string& kind() const { return kind_; }
    ErrorClass error_class() const { return cls_; }

private:
    std::string kind_;
    ErrorClass cls_;
};

#define RBSDE_DEFINE_ERROR(Name, Cls)                                        \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name, what, Cls) {}  \
    };

RBSDE_DEFINE_ERROR(ProjectionAmbiguous, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(NotOnBoundary, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(NotPositiveDefinite, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(StencilOutsideDomain, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(MeshMismatch, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(StepTooLarge, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(MissingV, ErrorClass::other)
RBSDE_DEFINE_ERROR(GaugeDiverges, ErrorClass::hypothesis)
RBSDE_DEFINE_ERROR(NoDecay, ErrorClass::hypothesis)
RBSDE_DEFINE_ERROR(SingularRegression, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(PicardStalled, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(NonConvergence, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(SingularSystem, ErrorClass::numerical)
RBSDE_DEFINE_ERROR(ConfigError, ErrorClass::config)

#undef RBSDE_DEFINE_ERROR

}  // namespace rbsde
