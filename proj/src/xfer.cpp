#include "fdsyn/xfer.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <utility>

using nlohmann::json;

namespace fdsyn {

namespace {

std::map<std::string, std::function<AnalyticMapPtr(const json&)>>& map_registry() {
    static std::map<std::string, std::function<AnalyticMapPtr(const json&)>> reg;
    return reg;
}
std::mutex& map_registry_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

void register_analytic_map(const std::string& tag,
                           std::function<AnalyticMapPtr(const json&)> factory) {
    std::lock_guard<std::mutex> lock(map_registry_mutex());
    map_registry()[tag] = std::move(factory);
}

RhpPoleInfo RhpPoleInfo::combined(const RhpPoleInfo& other) const {
    RhpPoleInfo out = *this;
    out.n_p += other.n_p;
    for (const auto& p : other.axis_poles) {
        auto it = std::find_if(out.axis_poles.begin(), out.axis_poles.end(),
                               [&](const AxisPole& q) { return q.omega == p.omega; });
        if (it != out.axis_poles.end())
            it->order += p.order;
        else
            out.axis_poles.push_back(p);
    }
    out.freq_hint = std::max(out.freq_hint, other.freq_hint);
    return out;
}

namespace detail {

enum class Kind {
    Rational,
    Delay,
    QuasiRational,
    Closure,
    Sum,
    Product,
    Feedback,
    Inverse,
    Scale,
    HStack,
    VStack,
    Det,
    Regularized,
};

struct Node {
    Kind kind;
    int m = 1, p = 1;
    std::vector<std::shared_ptr<const Node>> children;
    Polynomial num, den;
    QuasiPolynomial qnum, qden;
    double scalar = 0.0;  // theta / scale factor / feedback sign / beta
    AnalyticMapPtr map;
    std::vector<AxisPole> poles;
};

namespace {

using NodePtr = std::shared_ptr<const Node>;

void eval_node(const Node& n, Complex s, CMat& value, CMat* deriv);

// h(s) = prod over axis poles of ((s^2+w^2)/(s+beta)^2)^order, with the
// origin contributing (s/(s+beta))^order; log-derivative form for h'/h.
Complex reg_h(const std::vector<AxisPole>& poles, double beta, Complex s, Complex* dlog) {
    Complex h = 1.0, dl = 0.0;
    for (const auto& p : poles) {
        const double k = static_cast<double>(p.order);
        if (p.omega == 0.0) {
            h *= std::pow(s / (s + beta), p.order);
            if (dlog) dl += k * (1.0 / s - 1.0 / (s + beta));
        } else {
            const Complex q = (s * s + p.omega * p.omega) / ((s + beta) * (s + beta));
            h *= std::pow(q, p.order);
            if (dlog) dl += k * (2.0 * s / (s * s + p.omega * p.omega) - 2.0 / (s + beta));
        }
    }
    if (dlog) *dlog = dl;
    return h;
}

double axis_pole_distance(const std::vector<AxisPole>& poles, Complex s) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : poles) {
        d = std::min(d, std::abs(s - Complex(0.0, p.omega)));
        d = std::min(d, std::abs(s - Complex(0.0, -p.omega)));
    }
    return d;
}

void eval_regularized(const Node& n, Complex s, CMat& value, CMat* deriv) {
    constexpr double kNear = 1e-7;   // switch to limit evaluation below this
    constexpr double kStep = 1e-5;   // offset for the two-point limit form
    const Node& f = *n.children[0];
    const double beta = n.scalar;

    auto direct = [&](Complex z, Complex& fv, Complex* fd) {
        CMat v(1, 1), d(1, 1);
        eval_node(f, z, v, fd ? &d : nullptr);
        Complex dlog;
        const Complex h = reg_h(n.poles, beta, z, fd ? &dlog : nullptr);
        fv = v(0, 0) * h;
        if (fd) *fd = d(0, 0) * h + v(0, 0) * h * dlog;
    };

    value.resize(1, 1);
    if (deriv) deriv->resize(1, 1);
    if (axis_pole_distance(n.poles, s) > kNear) {
        Complex fv, fd;
        direct(s, fv, deriv ? &fd : nullptr);
        value(0, 0) = fv;
        if (deriv) (*deriv)(0, 0) = fd;
        return;
    }
    // On (or numerically at) a cancelled axis pole: f*h has a removable
    // singularity there; use a symmetric two-point limit, O(step^2) accurate.
    Complex up, dn;
    direct(s + Complex(0.0, kStep), up, nullptr);
    direct(s - Complex(0.0, kStep), dn, nullptr);
    value(0, 0) = 0.5 * (up + dn);
    if (deriv) (*deriv)(0, 0) = (up - dn) / Complex(0.0, 2.0 * kStep);
}

void eval_node(const Node& n, Complex s, CMat& value, CMat* deriv) {
    switch (n.kind) {
        case Kind::Rational: {
            const Complex den = n.den.eval(s);
            if (den == 0.0) throw SingularAt(s, "rational denominator zero");
            const Complex num = n.num.eval(s);
            value.resize(1, 1);
            value(0, 0) = num / den;
            if (deriv) {
                deriv->resize(1, 1);
                (*deriv)(0, 0) =
                    (n.num.deriv().eval(s) * den - num * n.den.deriv().eval(s)) / (den * den);
            }
            return;
        }
        case Kind::Delay: {
            const Complex e = std::exp(-n.scalar * s);
            value.resize(1, 1);
            value(0, 0) = e;
            if (deriv) {
                deriv->resize(1, 1);
                (*deriv)(0, 0) = -n.scalar * e;
            }
            return;
        }
        case Kind::QuasiRational: {
            const Complex den = n.qden.eval(s);
            if (den == 0.0) throw SingularAt(s, "quasi-rational denominator zero");
            const Complex num = n.qnum.eval(s);
            value.resize(1, 1);
            value(0, 0) = num / den;
            if (deriv) {
                deriv->resize(1, 1);
                (*deriv)(0, 0) =
                    (n.qnum.eval_deriv(s) * den - num * n.qden.eval_deriv(s)) / (den * den);
            }
            return;
        }
        case Kind::Closure: {
            n.map->eval(s, value, deriv);
            return;
        }
        case Kind::Sum: {
            CMat v, d;
            eval_node(*n.children[0], s, value, deriv ? &d : nullptr);
            if (deriv) *deriv = d;
            for (size_t k = 1; k < n.children.size(); ++k) {
                eval_node(*n.children[k], s, v, deriv ? &d : nullptr);
                value += v;
                if (deriv) *deriv += d;
            }
            return;
        }
        case Kind::Product: {
            CMat v, d;
            eval_node(*n.children[0], s, value, deriv ? &d : nullptr);
            CMat dacc;
            if (deriv) dacc = d;
            for (size_t k = 1; k < n.children.size(); ++k) {
                eval_node(*n.children[k], s, v, deriv ? &d : nullptr);
                if (deriv) dacc = dacc * v + value * d;
                value = value * v;
            }
            if (deriv) *deriv = dacc;
            return;
        }
        case Kind::Feedback: {
            // plant G (m x p), controller K (p x m); value = G (I + sign K G)^-1
            CMat g, dg, k, dk;
            eval_node(*n.children[0], s, g, deriv ? &dg : nullptr);
            eval_node(*n.children[1], s, k, deriv ? &dk : nullptr);
            const double sign = n.scalar;
            CMat M = CMat::Identity(n.p, n.p) + sign * (k * g);
            Eigen::FullPivLU<CMat> lu(M);
            if (!lu.isInvertible()) throw SingularAt(s, "feedback loop singular");
            const CMat X = lu.inverse();
            value = g * X;
            if (deriv) {
                const CMat dM = sign * (dk * g + k * dg);
                *deriv = dg * X - g * (X * dM * X);
            }
            return;
        }
        case Kind::Inverse: {
            CMat a, da;
            eval_node(*n.children[0], s, a, deriv ? &da : nullptr);
            Eigen::FullPivLU<CMat> lu(a);
            if (!lu.isInvertible()) throw SingularAt(s, "inverse node singular");
            value = lu.inverse();
            if (deriv) *deriv = -value * da * value;
            return;
        }
        case Kind::Scale: {
            eval_node(*n.children[0], s, value, deriv);
            value *= n.scalar;
            if (deriv) *deriv *= n.scalar;
            return;
        }
        case Kind::HStack: {
            value.resize(n.m, n.p);
            if (deriv) deriv->resize(n.m, n.p);
            int col = 0;
            CMat v, d;
            for (const auto& c : n.children) {
                eval_node(*c, s, v, deriv ? &d : nullptr);
                value.middleCols(col, c->p) = v;
                if (deriv) deriv->middleCols(col, c->p) = d;
                col += c->p;
            }
            return;
        }
        case Kind::VStack: {
            value.resize(n.m, n.p);
            if (deriv) deriv->resize(n.m, n.p);
            int row = 0;
            CMat v, d;
            for (const auto& c : n.children) {
                eval_node(*c, s, v, deriv ? &d : nullptr);
                value.middleRows(row, c->m) = v;
                if (deriv) deriv->middleRows(row, c->m) = d;
                row += c->m;
            }
            return;
        }
        case Kind::Det: {
            CMat a, da;
            eval_node(*n.children[0], s, a, deriv ? &da : nullptr);
            value.resize(1, 1);
            if (!deriv) {
                value(0, 0) = a.determinant();
                return;
            }
            Eigen::FullPivLU<CMat> lu(a);
            const Complex det = lu.determinant();
            value(0, 0) = det;
            deriv->resize(1, 1);
            if (!lu.isInvertible()) throw SingularAt(s, "determinant derivative at singular matrix");
            (*deriv)(0, 0) = det * (lu.inverse() * da).trace();
            return;
        }
        case Kind::Regularized:
            eval_regularized(n, s, value, deriv);
            return;
    }
    throw Error("unreachable node kind");
}

NodePtr make_node(Node&& n) { return std::make_shared<Node>(std::move(n)); }

}  // namespace
}  // namespace detail

using detail::Kind;
using detail::Node;

int TransferExpr::outputs() const {
    if (!node_) throw Error("empty TransferExpr");
    return node_->m;
}

int TransferExpr::inputs() const {
    if (!node_) throw Error("empty TransferExpr");
    return node_->p;
}

CMat TransferExpr::eval(Complex s) const {
    if (!node_) throw Error("empty TransferExpr");
    CMat v;
    detail::eval_node(*node_, s, v, nullptr);
    return v;
}

CMat TransferExpr::eval_deriv(Complex s) const {
    if (!node_) throw Error("empty TransferExpr");
    CMat v, d;
    detail::eval_node(*node_, s, v, &d);
    return d;
}

void TransferExpr::eval_with_deriv(Complex s, CMat& value, CMat& deriv) const {
    if (!node_) throw Error("empty TransferExpr");
    detail::eval_node(*node_, s, value, &deriv);
}

TransferExpr TransferExpr::rational(Polynomial num, Polynomial den) {
    if (den.is_zero()) throw Error("rational block with zero denominator");
    Node n;
    n.kind = Kind::Rational;
    n.num = std::move(num);
    n.den = std::move(den);
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::delay(double theta) {
    if (theta < 0.0) throw Error("delay must be nonnegative");
    Node n;
    n.kind = Kind::Delay;
    n.scalar = theta;
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::quasi_rational(QuasiPolynomial num, QuasiPolynomial den) {
    if (den.is_zero()) throw Error("quasi-rational block with zero denominator");
    Node n;
    n.kind = Kind::QuasiRational;
    n.qnum = std::move(num);
    n.qden = std::move(den);
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::closure(AnalyticMapPtr map) {
    if (!map) throw Error("null analytic map");
    Node n;
    n.kind = Kind::Closure;
    n.m = map->outputs();
    n.p = map->inputs();
    n.map = std::move(map);
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::constant(const Mat& m) {
    std::vector<TransferExpr> rows;
    rows.reserve(static_cast<size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<TransferExpr> cols;
        cols.reserve(static_cast<size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) cols.push_back(constant(m(i, j)));
        rows.push_back(hstack(std::move(cols)));
    }
    return vstack(std::move(rows));
}

TransferExpr TransferExpr::identity(int n) { return constant(Mat::Identity(n, n)); }

TransferExpr TransferExpr::zero(int m, int p) { return constant(Mat::Zero(m, p)); }

TransferExpr TransferExpr::sum(std::vector<TransferExpr> terms) {
    if (terms.empty()) throw Error("sum of nothing");
    Node n;
    n.kind = Kind::Sum;
    n.m = terms[0].outputs();
    n.p = terms[0].inputs();
    for (const auto& t : terms) {
        if (t.outputs() != n.m || t.inputs() != n.p)
            throw DimensionMismatch("sum terms must share dimensions");
        n.children.push_back(t.node_);
    }
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::product(std::vector<TransferExpr> factors) {
    if (factors.empty()) throw Error("product of nothing");
    Node n;
    n.kind = Kind::Product;
    n.m = factors[0].outputs();
    int cur = factors[0].inputs();
    n.children.push_back(factors[0].node_);
    for (size_t k = 1; k < factors.size(); ++k) {
        if (factors[k].outputs() != cur)
            throw DimensionMismatch("product factor dimensions incompatible");
        cur = factors[k].inputs();
        n.children.push_back(factors[k].node_);
    }
    n.p = cur;
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::feedback(TransferExpr plant, TransferExpr controller, double sign) {
    if (controller.outputs() != plant.inputs() || controller.inputs() != plant.outputs())
        throw DimensionMismatch("feedback requires controller dims transposed to plant dims");
    Node n;
    n.kind = Kind::Feedback;
    n.m = plant.outputs();
    n.p = plant.inputs();
    n.scalar = sign;
    n.children = {plant.node_, controller.node_};
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::inverse(TransferExpr expr) {
    if (expr.outputs() != expr.inputs()) throw DimensionMismatch("inverse of non-square expression");
    Node n;
    n.kind = Kind::Inverse;
    n.m = expr.outputs();
    n.p = expr.inputs();
    n.children = {expr.node_};
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::scale(double a, TransferExpr expr) {
    Node n;
    n.kind = Kind::Scale;
    n.m = expr.outputs();
    n.p = expr.inputs();
    n.scalar = a;
    n.children = {expr.node_};
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::hstack(std::vector<TransferExpr> items) {
    if (items.empty()) throw Error("hstack of nothing");
    Node n;
    n.kind = Kind::HStack;
    n.m = items[0].outputs();
    n.p = 0;
    for (const auto& it : items) {
        if (it.outputs() != n.m) throw DimensionMismatch("hstack items must share output count");
        n.p += it.inputs();
        n.children.push_back(it.node_);
    }
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::vstack(std::vector<TransferExpr> items) {
    if (items.empty()) throw Error("vstack of nothing");
    Node n;
    n.kind = Kind::VStack;
    n.m = 0;
    n.p = items[0].inputs();
    for (const auto& it : items) {
        if (it.inputs() != n.p) throw DimensionMismatch("vstack items must share input count");
        n.m += it.outputs();
        n.children.push_back(it.node_);
    }
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::det(TransferExpr expr) {
    if (expr.outputs() != expr.inputs()) throw DimensionMismatch("det of non-square expression");
    Node n;
    n.kind = Kind::Det;
    n.children = {expr.node_};
    return TransferExpr(detail::make_node(std::move(n)));
}

TransferExpr TransferExpr::regularized(TransferExpr f, std::vector<AxisPole> poles, double beta) {
    if (!f.is_scalar()) throw DimensionMismatch("regularize applies to scalar expressions");
    if (beta <= 0.0) throw Error("regularization beta must be positive");
    Node n;
    n.kind = Kind::Regularized;
    n.scalar = beta;
    n.poles = std::move(poles);
    n.children = {f.node_};
    return TransferExpr(detail::make_node(std::move(n)));
}

ClosedLoop closed_loop(const TransferExpr& plant, const TransferExpr& controller) {
    const TransferExpr& g = plant;
    const TransferExpr& k = controller;
    if (k.outputs() != g.inputs() || k.inputs() != g.outputs())
        throw DimensionMismatch("closed_loop requires controller dims transposed to plant dims");
    const int m = g.outputs();
    const int p = g.inputs();
    TransferExpr s_out = TransferExpr::inverse(TransferExpr::identity(m) + g * k);
    TransferExpr s_in = TransferExpr::inverse(TransferExpr::identity(p) + k * g);

    ClosedLoop cl;
    cl.input_sensitivity = s_in;
    cl.control_transfer = TransferExpr::scale(-1.0, k * s_out);
    cl.plant_transfer = s_out * g;
    cl.sensitivity = s_out;
    cl.full = TransferExpr::vstack({TransferExpr::hstack({cl.input_sensitivity, cl.control_transfer}),
                                    TransferExpr::hstack({cl.plant_transfer, cl.sensitivity})});
    return cl;
}

TransferExpr return_difference(const TransferExpr& plant, const TransferExpr& controller) {
    if (controller.outputs() != plant.inputs() || controller.inputs() != plant.outputs())
        throw DimensionMismatch("return_difference requires controller dims transposed to plant dims");
    const int p = plant.inputs();
    if (p == 1) {
        // det(I_m + G K) = 1 + K G for a single-input plant.
        return TransferExpr::constant(1.0) + controller * plant;
    }
    if (p <= plant.outputs())
        return TransferExpr::det(TransferExpr::identity(p) + controller * plant);
    return TransferExpr::det(TransferExpr::identity(plant.outputs()) + plant * controller);
}

TransferExpr regularize(const TransferExpr& f, const std::vector<AxisPole>& axis_poles,
                        double beta) {
    if (axis_poles.empty()) return f;
    return TransferExpr::regularized(f, axis_poles, beta);
}

// ---------------------------------------------------------------------------
// JSON serialization (node-tagged tree)
// ---------------------------------------------------------------------------

namespace {

json poly_to_json(const Polynomial& p) { return json(p.coeffs()); }

Polynomial poly_from_json(const json& j) {
    return Polynomial(j.get<std::vector<double>>());
}

json qpoly_to_json(const QuasiPolynomial& q) {
    json terms = json::array();
    for (const auto& t : q.terms())
        terms.push_back(json{{"poly", poly_to_json(t.poly)}, {"delay", t.delay}});
    return terms;
}

QuasiPolynomial qpoly_from_json(const json& j) {
    QuasiPolynomial q;
    for (const auto& t : j) q.add_term(poly_from_json(t.at("poly")), t.at("delay").get<double>());
    return q;
}

json node_to_json(const Node& n) {
    json j;
    switch (n.kind) {
        case Kind::Rational:
            j["kind"] = "rational";
            j["num"] = poly_to_json(n.num);
            j["den"] = poly_to_json(n.den);
            return j;
        case Kind::Delay:
            j["kind"] = "delay";
            j["theta"] = n.scalar;
            return j;
        case Kind::QuasiRational:
            j["kind"] = "quasi";
            j["num"] = qpoly_to_json(n.qnum);
            j["den"] = qpoly_to_json(n.qden);
            return j;
        case Kind::Closure:
            j["kind"] = "closure";
            j["tag"] = n.map->tag();
            j["params"] = n.map->params();
            return j;
        case Kind::Sum:
        case Kind::Product:
        case Kind::HStack:
        case Kind::VStack: {
            j["kind"] = n.kind == Kind::Sum       ? "sum"
                        : n.kind == Kind::Product ? "product"
                        : n.kind == Kind::HStack  ? "hstack"
                                                  : "vstack";
            json items = json::array();
            for (const auto& c : n.children) items.push_back(node_to_json(*c));
            j["items"] = items;
            return j;
        }
        case Kind::Feedback:
            j["kind"] = "feedback";
            j["plant"] = node_to_json(*n.children[0]);
            j["controller"] = node_to_json(*n.children[1]);
            j["sign"] = n.scalar;
            return j;
        case Kind::Inverse:
            j["kind"] = "inverse";
            j["child"] = node_to_json(*n.children[0]);
            return j;
        case Kind::Scale:
            j["kind"] = "scale";
            j["factor"] = n.scalar;
            j["child"] = node_to_json(*n.children[0]);
            return j;
        case Kind::Det:
            j["kind"] = "det";
            j["child"] = node_to_json(*n.children[0]);
            return j;
        case Kind::Regularized: {
            j["kind"] = "regularized";
            j["child"] = node_to_json(*n.children[0]);
            j["beta"] = n.scalar;
            json poles = json::array();
            for (const auto& p : n.poles)
                poles.push_back(json{{"omega", p.omega}, {"order", p.order}});
            j["axis_poles"] = poles;
            return j;
        }
    }
    throw Error("unreachable node kind in serialization");
}

}  // namespace

json TransferExpr::to_json() const {
    if (!node_) throw Error("empty TransferExpr");
    return node_to_json(*node_);
}

TransferExpr TransferExpr::from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    auto children = [&](const char* key) {
        std::vector<TransferExpr> out;
        for (const auto& c : j.at(key)) out.push_back(from_json(c));
        return out;
    };
    if (kind == "rational") return rational(poly_from_json(j.at("num")), poly_from_json(j.at("den")));
    if (kind == "delay") return delay(j.at("theta").get<double>());
    if (kind == "quasi") return quasi_rational(qpoly_from_json(j.at("num")), qpoly_from_json(j.at("den")));
    if (kind == "closure") {
        const std::string tag = j.at("tag").get<std::string>();
        std::function<AnalyticMapPtr(const json&)> factory;
        {
            std::lock_guard<std::mutex> lock(map_registry_mutex());
            auto it = map_registry().find(tag);
            if (it == map_registry().end())
                throw ConfigError("unknown analytic map tag: " + tag);
            factory = it->second;
        }
        return closure(factory(j.at("params")));
    }
    if (kind == "sum") return sum(children("items"));
    if (kind == "product") return product(children("items"));
    if (kind == "hstack") return hstack(children("items"));
    if (kind == "vstack") return vstack(children("items"));
    if (kind == "feedback")
        return feedback(from_json(j.at("plant")), from_json(j.at("controller")),
                        j.at("sign").get<double>());
    if (kind == "inverse") return inverse(from_json(j.at("child")));
    if (kind == "scale") return scale(j.at("factor").get<double>(), from_json(j.at("child")));
    if (kind == "det") return det(from_json(j.at("child")));
    if (kind == "regularized") {
        std::vector<AxisPole> poles;
        for (const auto& p : j.at("axis_poles"))
            poles.push_back(AxisPole{p.at("omega").get<double>(), p.at("order").get<int>()});
        return regularized(from_json(j.at("child")), std::move(poles), j.at("beta").get<double>());
    }
    throw ConfigError("unknown TransferExpr node kind: " + kind);
}

}  // namespace fdsyn
