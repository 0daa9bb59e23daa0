#pragma once

#include "fdsyn/polynomial.hpp"
#include "fdsyn/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fdsyn {

// Matrix-valued analytic map with an explicit derivative, used for plant
// formulas that are neither rational nor quasi-rational (PDE transfer
// functions, removable-singularity forms, state-space resolvents). Maps are
// identified by a tag and a JSON parameter blob so expressions round-trip.
class AnalyticMap {
  public:
    virtual ~AnalyticMap() = default;
    virtual int outputs() const = 0;
    virtual int inputs() const = 0;
    // deriv may be null when only the value is needed.
    virtual void eval(Complex s, CMat& value, CMat* deriv) const = 0;
    virtual std::string tag() const = 0;
    virtual nlohmann::json params() const = 0;
};

using AnalyticMapPtr = std::shared_ptr<const AnalyticMap>;

void register_analytic_map(const std::string& tag,
                           std::function<AnalyticMapPtr(const nlohmann::json&)> factory);

// Pole of order `order` at s = +/- i*omega (omega >= 0; the conjugate pair is
// implied for omega > 0).
struct AxisPole {
    double omega = 0.0;
    int order = 1;
};

// Declared open-loop pole bookkeeping for the Nyquist test. The winding test
// needs the count n_p of open right-half-plane poles as an input; computing it
// for irrational transfer functions is out of scope, so plants and controller
// structures declare it.
struct RhpPoleInfo {
    int n_p = 0;                       // poles with Re > 0
    std::vector<AxisPole> axis_poles;  // poles on the imaginary axis
    double freq_hint = 0.0;            // magnitude scale of declared poles/zeros

    int total() const { return n_p + static_cast<int>(axis_poles.size()); }
    RhpPoleInfo combined(const RhpPoleInfo& other) const;
};

namespace detail {
struct Node;
}

// Immutable expression tree for irrational transfer matrices. Evaluation is
// pure: the same s always yields the same value, and expressions may be
// evaluated concurrently from many threads.
class TransferExpr {
  public:
    TransferExpr() = default;  // empty; using it throws

    int outputs() const;
    int inputs() const;
    bool valid() const { return node_ != nullptr; }
    bool is_scalar() const { return outputs() == 1 && inputs() == 1; }

    CMat eval(Complex s) const;
    CMat eval_deriv(Complex s) const;
    void eval_with_deriv(Complex s, CMat& value, CMat& deriv) const;

    Complex eval_scalar(Complex s) const { return eval(s)(0, 0); }

    // --- leaf constructors -------------------------------------------------
    static TransferExpr rational(Polynomial num, Polynomial den);
    static TransferExpr delay(double theta);
    static TransferExpr quasi_rational(QuasiPolynomial num, QuasiPolynomial den);
    static TransferExpr closure(AnalyticMapPtr map);
    static TransferExpr constant(double c) { return rational(Polynomial::constant(c), Polynomial::constant(1.0)); }
    static TransferExpr constant(const Mat& m);
    static TransferExpr identity(int n);
    static TransferExpr zero(int m, int p);

    // --- interconnections --------------------------------------------------
    static TransferExpr sum(std::vector<TransferExpr> terms);
    static TransferExpr product(std::vector<TransferExpr> factors);
    static TransferExpr feedback(TransferExpr plant, TransferExpr controller, double sign = 1.0);
    static TransferExpr inverse(TransferExpr expr);
    static TransferExpr scale(double a, TransferExpr expr);
    static TransferExpr hstack(std::vector<TransferExpr> items);
    static TransferExpr vstack(std::vector<TransferExpr> items);
    static TransferExpr det(TransferExpr expr);
    // f * h with h cancelling the declared axis poles; see regularize().
    static TransferExpr regularized(TransferExpr f, std::vector<AxisPole> poles, double beta);

    nlohmann::json to_json() const;
    static TransferExpr from_json(const nlohmann::json& j);

    const detail::Node* node() const { return node_.get(); }

  private:
    explicit TransferExpr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const detail::Node> node_;
};

inline TransferExpr operator+(const TransferExpr& a, const TransferExpr& b) {
    return TransferExpr::sum({a, b});
}
inline TransferExpr operator-(const TransferExpr& a, const TransferExpr& b) {
    return TransferExpr::sum({a, TransferExpr::scale(-1.0, b)});
}
inline TransferExpr operator*(const TransferExpr& a, const TransferExpr& b) {
    return TransferExpr::product({a, b});
}
inline TransferExpr operator*(double a, const TransferExpr& b) { return TransferExpr::scale(a, b); }

// Four-block closed loop of Eq.-(T) shape:
//   [ (I+KG)^-1      -K(I+GK)^-1 ]
//   [ (I+GK)^-1 G     (I+GK)^-1  ]
struct ClosedLoop {
    TransferExpr input_sensitivity;   // (I+KG)^-1,  p x p
    TransferExpr control_transfer;    // -K(I+GK)^-1, p x m
    TransferExpr plant_transfer;      // (I+GK)^-1 G, m x p
    TransferExpr sensitivity;         // (I+GK)^-1,  m x m
    TransferExpr full;                // the (m+p) x (m+p) block matrix
};

ClosedLoop closed_loop(const TransferExpr& plant, const TransferExpr& controller);

// f(s) = det(I + G(s) K(s)). For single-input plants with row controllers this
// reduces structurally to the scalar 1 + K G.
TransferExpr return_difference(const TransferExpr& plant, const TransferExpr& controller);

// Modified Nyquist function f~ = f*h where h is holomorphic on the closed
// right half-plane, nonzero on the open one, h(inf) = 1, and h has zeros
// exactly at the declared axis poles of f (same orders). beta > 0 places the
// cancelling poles of h at -beta.
TransferExpr regularize(const TransferExpr& f, const std::vector<AxisPole>& axis_poles,
                        double beta = 1.0);

}  // namespace fdsyn
