#include "fdsyn/polynomial.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace fdsyn {

Polynomial Polynomial::monomial(int degree, double coeff) {
    std::vector<double> c(static_cast<size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Polynomial(std::move(c));
}

Polynomial Polynomial::deriv() const {
    if (coeffs_.size() <= 1) return Polynomial();
    std::vector<double> d(coeffs_.size() - 1);
    for (size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = coeffs_[k] * static_cast<double>(k);
    return Polynomial(std::move(d));
}

double Polynomial::magnitude_bound(double abs_s) const {
    double acc = 0.0, pw = 1.0;
    for (double c : coeffs_) {
        acc += std::abs(c) * pw;
        pw *= abs_s;
    }
    return acc;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    std::vector<double> c(std::max(coeffs_.size(), o.coeffs_.size()), 0.0);
    for (size_t k = 0; k < coeffs_.size(); ++k) c[k] += coeffs_[k];
    for (size_t k = 0; k < o.coeffs_.size(); ++k) c[k] += o.coeffs_[k];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (o * -1.0); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
    if (is_zero() || o.is_zero()) return Polynomial();
    std::vector<double> c(coeffs_.size() + o.coeffs_.size() - 1, 0.0);
    for (size_t i = 0; i < coeffs_.size(); ++i)
        for (size_t j = 0; j < o.coeffs_.size(); ++j) c[i + j] += coeffs_[i] * o.coeffs_[j];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(double a) const {
    std::vector<double> c(coeffs_);
    for (double& x : c) x *= a;
    return Polynomial(std::move(c));
}

std::vector<Complex> Polynomial::roots() const {
    const int n = degree();
    if (n <= 0) return {};
    Mat companion = Mat::Zero(n, n);
    for (int k = 0; k < n; ++k) companion(0, k) = -coeffs_[static_cast<size_t>(n - 1 - k)] / leading();
    companion.block(1, 0, n - 1, n - 1).setIdentity();
    Eigen::EigenSolver<Mat> es(companion, /*computeEigenvectors=*/false);
    std::vector<Complex> out(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) out[static_cast<size_t>(k)] = es.eigenvalues()(k);
    return out;
}

int Polynomial::count_unstable_roots(double margin) const {
    int count = 0;
    for (const Complex& r : roots())
        if (r.real() >= -margin) ++count;
    return count;
}

void QuasiPolynomial::add_term(const Polynomial& p, double delay) {
    if (p.is_zero()) return;
    if (delay < 0.0) throw Error("quasi-polynomial delay must be nonnegative");
    auto it = std::lower_bound(terms_.begin(), terms_.end(), delay,
                               [](const Term& t, double d) { return t.delay < d; });
    if (it != terms_.end() && it->delay == delay) {
        it->poly = it->poly + p;
        if (it->poly.is_zero()) terms_.erase(it);
    } else {
        terms_.insert(it, Term{p, delay});
    }
}

int QuasiPolynomial::degree() const {
    int d = -1;
    for (const auto& t : terms_) d = std::max(d, t.poly.degree());
    return d;
}

bool QuasiPolynomial::is_retarded() const {
    const int d = degree();
    if (d < 0) return true;
    if (terms_.empty() || terms_.front().delay != 0.0) return false;
    if (terms_.front().poly.degree() != d) return false;
    for (size_t k = 1; k < terms_.size(); ++k)
        if (terms_[k].poly.degree() >= d) return false;
    return true;
}

Complex QuasiPolynomial::eval(Complex s) const {
    Complex acc = 0.0;
    for (const auto& t : terms_) acc += t.poly.eval(s) * std::exp(-t.delay * s);
    return acc;
}

Complex QuasiPolynomial::eval_deriv(Complex s) const {
    Complex acc = 0.0;
    for (const auto& t : terms_)
        acc += (t.poly.deriv().eval(s) - t.delay * t.poly.eval(s)) * std::exp(-t.delay * s);
    return acc;
}

QuasiPolynomial QuasiPolynomial::operator+(const QuasiPolynomial& o) const {
    QuasiPolynomial out = *this;
    for (const auto& t : o.terms_) out.add_term(t.poly, t.delay);
    return out;
}

QuasiPolynomial QuasiPolynomial::operator-(const QuasiPolynomial& o) const {
    return *this + (o * -1.0);
}

QuasiPolynomial QuasiPolynomial::operator*(const QuasiPolynomial& o) const {
    QuasiPolynomial out;
    for (const auto& a : terms_)
        for (const auto& b : o.terms_) out.add_term(a.poly * b.poly, a.delay + b.delay);
    return out;
}

QuasiPolynomial QuasiPolynomial::operator*(double a) const {
    QuasiPolynomial out;
    if (a == 0.0) return out;
    for (const auto& t : terms_) out.add_term(t.poly * a, t.delay);
    return out;
}

double QuasiPolynomial::rhp_zero_radius_bound() const {
    // On Re s >= 0 every |exp(-delay s)| <= 1, so |P(s)| >= |lead| |s|^d -
    // (sum of all lower-order magnitude bounds). A zero needs the remainder
    // to reach the leading term.
    const int d = degree();
    if (d < 0) throw Error("zero quasi-polynomial has no zero radius bound");
    if (terms_.empty() || terms_.front().delay != 0.0)
        throw Error("rhp_zero_radius_bound requires a delay-0 term of top degree");
    double lead = std::abs(terms_.front().poly.coeff(d));
    double lead_others = 0.0;
    for (size_t k = 1; k < terms_.size(); ++k)
        lead_others += std::abs(terms_[k].poly.coeff(d));
    if (lead <= lead_others)
        throw Error("quasi-polynomial leading term does not dominate on the right half-plane");

    // Cauchy-style bound: for |s| > 1 + C/(lead - lead_others) the top-degree
    // term outweighs all lower-degree contributions collected across delays.
    double c_max = 0.0;
    for (int k = 0; k < d; ++k) {
        double col = 0.0;
        for (const auto& t : terms_) col += std::abs(t.poly.coeff(k));
        c_max = std::max(c_max, col);
    }
    return 1.0 + c_max / (lead - lead_others);
}

}  // namespace fdsyn
