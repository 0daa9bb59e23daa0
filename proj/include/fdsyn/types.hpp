#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace fdsyn {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

// An Inverse/Feedback node (or a rational denominator) is singular at s.
struct SingularAt : Error {
    Complex s;
    explicit SingularAt(Complex where, const std::string& what = "singular evaluation")
        : Error(what + " at s=(" + std::to_string(where.real()) + "," +
                std::to_string(where.imag()) + ")"),
          s(where) {}
};

struct RefinementBudgetExceeded : Error {
    explicit RefinementBudgetExceeded(const std::string& msg) : Error(msg) {}
};

struct OriginOnPolygon : Error {
    explicit OriginOnPolygon(const std::string& msg) : Error(msg) {}
};

struct DeclaredInfoInconsistent : Error {
    explicit DeclaredInfoInconsistent(const std::string& msg) : Error(msg) {}
};

struct UnboundedOnAxis : Error {
    explicit UnboundedOnAxis(const std::string& msg) : Error(msg) {}
};

struct TailBoundMissing : Error {
    explicit TailBoundMissing(const std::string& msg) : Error(msg) {}
};

struct ZeroOnContour : Error {
    explicit ZeroOnContour(const std::string& msg) : Error(msg) {}
};

struct NoPositiveRoot : Error {
    explicit NoPositiveRoot(const std::string& msg) : Error(msg) {}
};

struct AOnAxisZero : Error {
    explicit AOnAxisZero(const std::string& msg) : Error(msg) {}
};

struct InitialPointUnstable : Error {
    explicit InitialPointUnstable(const std::string& msg) : Error(msg) {}
};

struct StalledAtStabilityBoundary : Error {
    explicit StalledAtStabilityBoundary(const std::string& msg) : Error(msg) {}
};

struct NotFiniteDimensional : Error {
    explicit NotFiniteDimensional(const std::string& msg) : Error(msg) {}
};

struct NonRealizableController : Error {
    explicit NonRealizableController(const std::string& msg) : Error(msg) {}
};

struct CflViolation : Error {
    explicit CflViolation(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace fdsyn
