#pragma once

#include <cstddef>
#include <vector>

#include "catenode/errors.hpp"

namespace catenode {

/// Dense univariate polynomial over the complex numbers, coefficients stored
/// in ascending degree order. The zero polynomial is represented by {0}.
class ComplexPolynomial {
  public:
    ComplexPolynomial() : coeffs_{Complex(0.0, 0.0)} {}
    explicit ComplexPolynomial(std::vector<Complex> coeffs);

    /// Monic polynomial with the given roots.
    static ComplexPolynomial from_roots(const std::vector<Complex>& roots);
    static ComplexPolynomial constant(Complex value) { return ComplexPolynomial({value}); }
    /// The monomial z.
    static ComplexPolynomial identity() { return ComplexPolynomial({Complex(0.0), Complex(1.0)}); }

    const std::vector<Complex>& coeffs() const { return coeffs_; }
    std::size_t degree() const { return coeffs_.size() - 1; }
    Complex leading() const { return coeffs_.back(); }
    bool is_zero(double tol = 0.0) const;

    Complex eval(Complex z) const;
    ComplexPolynomial derivative() const;

    ComplexPolynomial operator+(const ComplexPolynomial& rhs) const;
    ComplexPolynomial operator-(const ComplexPolynomial& rhs) const;
    ComplexPolynomial operator*(const ComplexPolynomial& rhs) const;
    ComplexPolynomial operator*(Complex scalar) const;

    /// Drops trailing coefficients smaller than tol relative to the largest
    /// coefficient magnitude.
    ComplexPolynomial trimmed(double rel_tol = 1e-14) const;

    /// Largest coefficient magnitude.
    double max_coeff() const;

    /// True when every coefficient has negligible imaginary part.
    bool has_real_coeffs(double rel_tol = 1e-12) const;

    /// Quotient and remainder of *this divided by divisor.
    struct DivRem;
    DivRem divrem(const ComplexPolynomial& divisor) const;

  private:
    std::vector<Complex> coeffs_;
};

struct ComplexPolynomial::DivRem {
    ComplexPolynomial quotient;
    ComplexPolynomial remainder;
};

/// All complex roots via Ehrlich-Aberth simultaneous iteration with Newton
/// polishing. Guarantees the backward error bound
///     |p(root)| <= 1e-10 * max|coeff| * max(1, |root|)^degree
/// for every returned root, and returns conjugate-closed sets for real
/// coefficient inputs. Roots are sorted by (real, imag). Throws degree_zero
/// for (near-)constant input.
std::vector<Complex> poly_roots(const ComplexPolynomial& p);

/// Backward error bound factor used by poly_roots.
inline constexpr double kRootBackwardTol = 1e-10;

}  // namespace catenode
