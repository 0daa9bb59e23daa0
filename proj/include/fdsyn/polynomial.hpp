#pragma once

#include "fdsyn/types.hpp"

#include <initializer_list>
#include <vector>

namespace fdsyn {

// Real polynomial, coefficients stored ascending by degree. The zero
// polynomial has an empty coefficient list and degree -1. Trailing zero
// coefficients are trimmed exactly (no tolerance).
class Polynomial {
  public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> ascending) : coeffs_(ascending) { trim(); }
    explicit Polynomial(std::vector<double> ascending) : coeffs_(std::move(ascending)) { trim(); }

    static Polynomial constant(double c) { return Polynomial({c}); }
    static Polynomial monomial(int degree, double coeff = 1.0);

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }
    const std::vector<double>& coeffs() const { return coeffs_; }
    double coeff(int k) const {
        return (k >= 0 && k < static_cast<int>(coeffs_.size())) ? coeffs_[k] : 0.0;
    }
    double leading() const { return coeffs_.empty() ? 0.0 : coeffs_.back(); }

    template <typename S>
    S eval(const S& s) const {
        S acc = S(0);
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + S(*it);
        return acc;
    }

    Polynomial deriv() const;

    // Sum of |c_k| |s|^k, an upper bound for |p(s)| on |s| fixed.
    double magnitude_bound(double abs_s) const;

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(double a) const;
    Polynomial operator-() const { return *this * -1.0; }
    bool operator==(const Polynomial& o) const { return coeffs_ == o.coeffs_; }

    // Roots via companion-matrix eigenvalues; empty for degree <= 0.
    std::vector<Complex> roots() const;

    // Count of roots with Re >= -margin (margin 0 counts the closed RHP).
    int count_unstable_roots(double margin = 0.0) const;

  private:
    void trim() {
        while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
    }
    std::vector<double> coeffs_;
};

inline Polynomial operator*(double a, const Polynomial& p) { return p * a; }

// Finite sum of polynomial * exp(-delay * s) terms, delays strictly
// increasing, no zero-polynomial terms.
class QuasiPolynomial {
  public:
    struct Term {
        Polynomial poly;
        double delay = 0.0;
    };

    QuasiPolynomial() = default;
    explicit QuasiPolynomial(const Polynomial& p) { add_term(p, 0.0); }
    QuasiPolynomial(std::initializer_list<Term> terms) {
        for (const auto& t : terms) add_term(t.poly, t.delay);
    }

    void add_term(const Polynomial& p, double delay);

    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    // Largest polynomial degree across terms, -1 if zero.
    int degree() const;
    // True when the highest-degree coefficient appears only in the delay-0 term
    // (retarded type; otherwise neutral).
    bool is_retarded() const;

    Complex eval(Complex s) const;
    Complex eval_deriv(Complex s) const;

    QuasiPolynomial operator+(const QuasiPolynomial& o) const;
    QuasiPolynomial operator-(const QuasiPolynomial& o) const;
    QuasiPolynomial operator*(const QuasiPolynomial& o) const;
    QuasiPolynomial operator*(double a) const;
    QuasiPolynomial operator-() const { return *this * -1.0; }

    // Radius R such that no zero of the quasi-polynomial lies in the closed
    // right half-plane with |s| > R (from coefficient bounds; requires a
    // delay-0 term whose degree strictly dominates on Re s >= 0, i.e. a
    // retarded quasi-polynomial, or a neutral one whose delay-0 leading
    // coefficient dominates the sum of the others).
    double rhp_zero_radius_bound() const;

  private:
    std::vector<Term> terms_;  // sorted by delay, strictly increasing
};

}  // namespace fdsyn
