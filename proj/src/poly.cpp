#include "catenode/poly.hpp"

#include <algorithm>
#include <cmath>

namespace catenode {

namespace {

/// max(1, |z|)^n without pow() drift for moderate n.
double growth(Complex z, std::size_t n) {
    const double a = std::max(1.0, std::abs(z));
    double g = 1.0;
    for (std::size_t i = 0; i < n; ++i) g *= a;
    return g;
}

}  // namespace

ComplexPolynomial::ComplexPolynomial(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(Complex(0.0));
    while (coeffs_.size() > 1 && coeffs_.back() == Complex(0.0)) coeffs_.pop_back();
}

ComplexPolynomial ComplexPolynomial::from_roots(const std::vector<Complex>& roots) {
    std::vector<Complex> c{Complex(1.0)};
    for (Complex r : roots) {
        c.push_back(Complex(0.0));
        for (std::size_t i = c.size() - 1; i >= 1; --i) c[i] = c[i - 1] - r * c[i];
        c[0] = -r * c[0];
    }
    return ComplexPolynomial(std::move(c));
}

bool ComplexPolynomial::is_zero(double tol) const {
    for (Complex c : coeffs_)
        if (std::abs(c) > tol) return false;
    return true;
}

Complex ComplexPolynomial::eval(Complex z) const {
    Complex acc(0.0);
    for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * z + coeffs_[i];
    return acc;
}

ComplexPolynomial ComplexPolynomial::derivative() const {
    if (coeffs_.size() == 1) return ComplexPolynomial();
    std::vector<Complex> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return ComplexPolynomial(std::move(d));
}

ComplexPolynomial ComplexPolynomial::operator+(const ComplexPolynomial& rhs) const {
    std::vector<Complex> c(std::max(coeffs_.size(), rhs.coeffs_.size()), Complex(0.0));
    for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
    for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) c[i] += rhs.coeffs_[i];
    return ComplexPolynomial(std::move(c));
}

ComplexPolynomial ComplexPolynomial::operator-(const ComplexPolynomial& rhs) const {
    std::vector<Complex> c(std::max(coeffs_.size(), rhs.coeffs_.size()), Complex(0.0));
    for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
    for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) c[i] -= rhs.coeffs_[i];
    return ComplexPolynomial(std::move(c));
}

ComplexPolynomial ComplexPolynomial::operator*(const ComplexPolynomial& rhs) const {
    std::vector<Complex> c(coeffs_.size() + rhs.coeffs_.size() - 1, Complex(0.0));
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        for (std::size_t j = 0; j < rhs.coeffs_.size(); ++j) c[i + j] += coeffs_[i] * rhs.coeffs_[j];
    return ComplexPolynomial(std::move(c));
}

ComplexPolynomial ComplexPolynomial::operator*(Complex scalar) const {
    std::vector<Complex> c = coeffs_;
    for (Complex& v : c) v *= scalar;
    return ComplexPolynomial(std::move(c));
}

ComplexPolynomial ComplexPolynomial::trimmed(double rel_tol) const {
    const double cutoff = rel_tol * max_coeff();
    std::vector<Complex> c = coeffs_;
    while (c.size() > 1 && std::abs(c.back()) <= cutoff) c.pop_back();
    return ComplexPolynomial(std::move(c));
}

double ComplexPolynomial::max_coeff() const {
    double m = 0.0;
    for (Complex c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

bool ComplexPolynomial::has_real_coeffs(double rel_tol) const {
    const double cutoff = rel_tol * std::max(1.0, max_coeff());
    for (Complex c : coeffs_)
        if (std::abs(c.imag()) > cutoff) return false;
    return true;
}

ComplexPolynomial::DivRem ComplexPolynomial::divrem(const ComplexPolynomial& divisor) const {
    if (divisor.is_zero()) throw Error(Errc::bad_input, "polynomial division by zero");
    if (degree() < divisor.degree()) return {ComplexPolynomial(), *this};
    std::vector<Complex> rem = coeffs_;
    std::vector<Complex> quot(degree() - divisor.degree() + 1, Complex(0.0));
    const Complex lead = divisor.leading();
    for (std::size_t i = quot.size(); i-- > 0;) {
        const Complex f = rem[i + divisor.degree()] / lead;
        quot[i] = f;
        for (std::size_t j = 0; j < divisor.coeffs().size(); ++j)
            rem[i + j] -= f * divisor.coeffs()[j];
    }
    rem.resize(divisor.degree() == 0 ? 1 : divisor.degree());
    return {ComplexPolynomial(std::move(quot)), ComplexPolynomial(std::move(rem))};
}

namespace {

bool backward_ok(const ComplexPolynomial& p, const std::vector<Complex>& roots) {
    const double scale = kRootBackwardTol * p.max_coeff();
    for (Complex r : roots)
        if (std::abs(p.eval(r)) > scale * growth(r, p.degree())) return false;
    return true;
}

std::vector<Complex> aberth_pass(const ComplexPolynomial& p, double start_angle) {
    const std::size_t n = p.degree();
    const ComplexPolynomial dp = p.derivative();

    // Start on a circle whose radius reflects the geometric mean of the roots.
    double radius = 1.0;
    const double a0 = std::abs(p.coeffs().front());
    const double an = std::abs(p.leading());
    if (a0 > 0.0 && an > 0.0) radius = std::pow(a0 / an, 1.0 / static_cast<double>(n));
    radius = std::clamp(radius, 1e-3, 1e3);

    std::vector<Complex> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ang =
            start_angle + 2.0 * M_PI * (static_cast<double>(k) + 0.25) / static_cast<double>(n);
        z[k] = radius * Complex(std::cos(ang), std::sin(ang));
    }

    for (int sweep = 0; sweep < 200; ++sweep) {
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const Complex pv = p.eval(z[k]);
            const Complex dv = dp.eval(z[k]);
            if (pv == Complex(0.0)) continue;
            Complex newton;
            if (dv == Complex(0.0)) {
                newton = Complex(0.1, 0.1);  // nudge away from a critical point
            } else {
                newton = pv / dv;
            }
            Complex rep(0.0);
            for (std::size_t j = 0; j < n; ++j)
                if (j != k) rep += 1.0 / (z[k] - z[j]);
            const Complex denom = 1.0 - newton * rep;
            const Complex step = (std::abs(denom) > 1e-300) ? newton / denom : newton;
            z[k] -= step;
            worst = std::max(worst, std::abs(step) / (1.0 + std::abs(z[k])));
        }
        if (worst < 1e-15) break;
    }

    // Newton polish; keep a step only if it does not grow the residual.
    for (std::size_t k = 0; k < n; ++k) {
        for (int it = 0; it < 3; ++it) {
            const Complex pv = p.eval(z[k]);
            const Complex dv = dp.eval(z[k]);
            if (dv == Complex(0.0)) break;
            const Complex cand = z[k] - pv / dv;
            if (std::abs(p.eval(cand)) <= std::abs(pv))
                z[k] = cand;
            else
                break;
        }
    }
    return z;
}

/// For real-coefficient polynomials, snap near-real roots to the axis and
/// average conjugate partners so the returned set is exactly closed under
/// conjugation. Perturbations stay well inside the backward error budget.
void enforce_conjugate_closure(std::vector<Complex>& roots) {
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        if (std::abs(roots[i].imag()) <= 1e-12 * (1.0 + std::abs(roots[i]))) {
            roots[i] = Complex(roots[i].real(), 0.0);
            used[i] = true;
            continue;
        }
        std::size_t best = i;
        double best_dist = 1e300;
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(roots[j] - std::conj(roots[i]));
            if (d < best_dist) {
                best_dist = d;
                best = j;
            }
        }
        if (best != i && best_dist <= 1e-7 * (1.0 + std::abs(roots[i]))) {
            const Complex w = 0.5 * (roots[i] + std::conj(roots[best]));
            roots[i] = w;
            roots[best] = std::conj(w);
            used[i] = used[best] = true;
        } else {
            used[i] = true;  // genuinely unpaired; leave untouched
        }
    }
}

}  // namespace

std::vector<Complex> poly_roots(const ComplexPolynomial& p_in) {
    const ComplexPolynomial p = p_in.trimmed();
    if (p.degree() == 0)
        throw Error(Errc::degree_zero, "root extraction needs degree >= 1");

    // Exact zero roots from vanishing trailing coefficients.
    std::vector<Complex> coeffs = p.coeffs();
    std::size_t zeros_at_origin = 0;
    while (coeffs.size() > 1 && coeffs.front() == Complex(0.0)) {
        coeffs.erase(coeffs.begin());
        ++zeros_at_origin;
    }
    const ComplexPolynomial q{coeffs};

    std::vector<Complex> roots;
    if (q.degree() == 1) {
        roots = {-q.coeffs()[0] / q.coeffs()[1]};
    } else if (q.degree() == 2) {
        const Complex a = q.coeffs()[2], b = q.coeffs()[1], c = q.coeffs()[0];
        Complex s = std::sqrt(b * b - 4.0 * a * c);
        if (std::real(std::conj(b) * s) < 0.0) s = -s;  // avoid cancellation in -b - s
        const Complex r1 = (-b - s) / (2.0 * a);
        const Complex r2 = (std::abs(r1) > 0.0) ? c / (a * r1) : (-b + s) / (2.0 * a);
        roots = {r1, r2};
    } else if (q.degree() >= 1) {
        roots = aberth_pass(q, 0.0);
        if (!backward_ok(q, roots)) roots = aberth_pass(q, 0.7);  // retry, rotated start
        if (!backward_ok(q, roots))
            throw Error(Errc::no_convergence, "root iteration failed the backward error bound");
    }

    if (q.has_real_coeffs()) enforce_conjugate_closure(roots);

    for (std::size_t i = 0; i < zeros_at_origin; ++i) roots.push_back(Complex(0.0));

    if (!backward_ok(p, roots))
        throw Error(Errc::no_convergence, "root iteration failed the backward error bound");

    std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return roots;
}

}  // namespace catenode
