#include <doctest.h>

#include <cmath>
#include <random>

#include "catenode/engine.hpp"
#include "catenode/polynomial_method.hpp"
#include "test_util.hpp"

using namespace catenode;

namespace {

double max_force(const Configuration& c) {
    return force(c, derive_residues(c)).max_abs_force;
}

/// Pochhammer product (x)_m.
double poch(double x, int m) {
    double p = 1.0;
    for (int i = 0; i < m; ++i) p *= x + static_cast<double>(i);
    return p;
}

}  // namespace

TEST_CASE("roots-of-unity rings are balanced for every n") {
    for (int n = 2; n <= 8; ++n) {
        const auto c = four_end_config(n);
        CHECK(theta1(c) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(theta2(c) == doctest::Approx(0.0).epsilon(1e-14));
        const auto res = derive_residues(c);
        CHECK(res.at(1) == doctest::Approx(1.0));
        CHECK(c.left_gap(0) == doctest::Approx(-static_cast<double>(n)));
        CHECK(max_force(c) < 1e-13);
    }
}

TEST_CASE("ring rotation shifts the end speed split but keeps the balance") {
    const auto base = four_end_config(3);
    const auto rot = four_end_config(3, 0.7);
    CHECK(rot.theta_left[0] == doctest::Approx(base.theta_left[0] + 0.7));
    CHECK(rot.theta_right[0] == doctest::Approx(base.theta_right[0] - 0.7));
    CHECK(rot.left_gap(0) == doctest::Approx(base.left_gap(0)));
    CHECK(theta1(rot) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(theta2(rot) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(max_force(rot) < 1e-13);
}

TEST_CASE("terminating series has the known small coefficients") {
    const auto p = hypergeometric_poly(2, -1.5, 0.5);
    REQUIRE(p.degree() == 2);
    CHECK(p.coeffs()[0].real() == doctest::Approx(1.0));
    CHECK(p.coeffs()[1].real() == doctest::Approx(6.0));
    CHECK(p.coeffs()[2].real() == doctest::Approx(1.0));

    const auto q = hypergeometric_poly(3, -2.5, 0.5);
    REQUIRE(q.degree() == 3);
    CHECK(q.coeffs()[0].real() == doctest::Approx(1.0));
    CHECK(q.coeffs()[1].real() == doctest::Approx(15.0));
    CHECK(q.coeffs()[2].real() == doctest::Approx(15.0));
    CHECK(q.coeffs()[3].real() == doctest::Approx(1.0));
}

TEST_CASE("series value at 1 telescopes to a Pochhammer ratio") {
    struct Case {
        int n;
        double b, c;
    };
    for (const Case t : {Case{2, -1.5, 0.5}, Case{3, -2.5, 0.5}, Case{4, 0.7, 1.3},
                         Case{5, -3.2, 0.4}}) {
        const auto p = hypergeometric_poly(t.n, t.b, t.c);
        const double expected = poch(t.c - t.b, t.n) / poch(t.c, t.n);
        CHECK(p.eval(Complex(1.0)).real() ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("series parameter guards") {
    try {
        hypergeometric_poly(3, -1.5, 0.0);
        FAIL("expected bad_c");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::bad_c);
    }
    CHECK_THROWS_AS(hypergeometric_poly(3, -1.5, -2.0), Error);
    try {
        hypergeometric_poly(3, -1.0, 0.5);
        FAIL("expected degenerate_degree");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_degree);
    }
    // b = -n only kills coefficients beyond the kept range.
    CHECK_NOTHROW(hypergeometric_poly(3, -3.0, 0.5));
}

TEST_CASE("coefficient recurrence rigidity flags") {
    CHECK(hypergeom_rigidity_recurrence(2, -1.5, 0.5));
    CHECK_FALSE(hypergeom_rigidity_recurrence(2, -1.0, 0.7));
    CHECK_FALSE(hypergeom_rigidity_recurrence(3, 0.5, -2.0));
    CHECK(hypergeom_rigidity_recurrence(3, 0.5, -2.5));
    // Near-integer detection is a 1e-12 window.
    CHECK_FALSE(hypergeom_rigidity_recurrence(2, -1.0 + 1e-13, 0.7));
    CHECK(hypergeom_rigidity_recurrence(2, -1.0 + 1e-9, 0.7));
}

TEST_CASE("single-node tower over a series ring is balanced with known speeds") {
    const auto c = n1_config(2, -1.5, 0.5);
    REQUIRE(c.layers == std::vector<int>{2, 1});
    CHECK(std::abs(c.nodes[1][0] - Complex(1.0)) < 1e-14);
    // Roots of 1 + 6z + z^2.
    CHECK(std::abs(c.nodes[0][0] - Complex(-3.0 - 2.0 * std::sqrt(2.0))) < 1e-10);
    CHECK(std::abs(c.nodes[0][1] - Complex(-3.0 + 2.0 * std::sqrt(2.0))) < 1e-10);
    const std::vector<double> left = {0.0, -0.5, -2.5};
    const std::vector<double> right = {2.0, 1.5, -0.5};
    for (std::size_t p = 0; p < 3; ++p) {
        CHECK(c.theta_left[p] == doctest::Approx(left[p]).epsilon(1e-12));
        CHECK(c.theta_right[p] == doctest::Approx(right[p]).epsilon(1e-12));
    }
    CHECK(max_force(c) < 1e-11);
}

TEST_CASE("reciprocal parameter line gives reciprocal root multisets") {
    for (int n : {2, 3, 4}) {
        const double cc = 0.4;
        const double b = 1.0 - static_cast<double>(n) - cc;
        const auto config = n1_config(n, b, cc);
        CHECK(max_force(config) < 1e-10);
        for (Complex r : config.nodes[0]) {
            bool found = false;
            for (Complex s : config.nodes[0])
                if (std::abs(s - 1.0 / r) < 1e-9 * (1.0 + std::abs(s))) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("single-node tower parameter guards") {
    try {
        n1_config(2, 1.5, 0.5);  // c2 = n - 1 - b + c = 0
        FAIL("expected zero_c2");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::zero_c2);
    }
    try {
        n1_config(3, 1.5, 0.5);  // series vanishes at the upper node
        FAIL("expected root_at_puncture");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::root_at_puncture);
    }
}

TEST_CASE("embeddedness flags for the tower parameters") {
    const auto good = n1_embeddedness_flags(2, -1.5, 0.5);
    CHECK(good.c_below_one);
    CHECK(good.b_above_minus_n);
    CHECK(good.c2sq_above_minus_nb);
    CHECK(good.c2sq_above_n_c2_plus_b);
    CHECK(good.all());

    const auto bad = n1_embeddedness_flags(2, -1.5, 1.5);
    CHECK_FALSE(bad.c_below_one);
    CHECK(bad.b_above_minus_n);
    CHECK_FALSE(bad.all());
}

namespace {

/// Operator data of the two-layer tower: one outer puncture at 1 with log
/// derivative coefficient -c2, accessory residues +-nb.
LameData n1_lame_data(int n, double b, double c) {
    const double c2 = static_cast<double>(n) - 1.0 - b + c;
    LameData data;
    data.degree = n;
    data.c0_prime = c;
    data.punctures = {Complex(1.0)};
    data.prime_coeffs = {-c2};
    data.gamma0 = Complex(static_cast<double>(n) * b);
    data.gammas = {Complex(-static_cast<double>(n) * b)};
    data.b = b;
    return data;
}

}  // namespace

TEST_CASE("operator residual vanishes on the terminating series") {
    for (int n : {2, 3, 5}) {
        const double b = -1.5, c = 0.5;
        const auto data = n1_lame_data(n, b, c);
        CHECK_NOTHROW(check_lame_invariants(data));
        const auto P = hypergeometric_poly(n, b, c);
        const auto res = lame_operator_residual(P, data);
        CHECK(res.max_coeff() < 1e-10 * P.max_coeff());
        // A wrong polynomial leaves a visible residual.
        const auto wrong = lame_operator_residual(P + ComplexPolynomial::identity(), data);
        CHECK(wrong.max_coeff() > 1e-3);
    }
}

TEST_CASE("operator invariants are enforced") {
    auto data = n1_lame_data(2, -1.5, 0.5);
    data.gamma0 += 0.1;  // residues no longer sum to zero
    try {
        check_lame_invariants(data);
        FAIL("expected invariant_violation");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invariant_violation);
    }

    data = n1_lame_data(2, -1.5, 0.5);
    data.prime_coeffs[0] += 0.1;  // index relation broken
    CHECK_THROWS_AS(check_lame_invariants(data), Error);

    data = n1_lame_data(2, -1.5, 0.5);
    data.gammas[0] *= 1.5;
    data.gamma0 = -data.gammas[0];  // sum ok, weighted sum wrong
    CHECK_THROWS_AS(check_lame_invariants(data), Error);
}

TEST_CASE("coincident outer punctures reduce to the terminating series") {
    // s1 == s2 removes the accessory freedom: only kernel vectors survive and
    // they solve the single-puncture equation with c = c1 + c3 + 1 - n + b.
    const auto result = heun_polynomials(2, 1.0, 1.0, 1.5, 1.5, -1.5);
    REQUIRE(result.solutions.size() == 1);
    CHECK_FALSE(result.rejected.empty());
    const auto& sol = result.solutions[0];
    CHECK(std::abs(sol.eigenvalue) < 1e-12);
    const auto expected = hypergeometric_poly(2, -1.5, 0.5);
    for (std::size_t i = 0; i <= 2; ++i)
        CHECK(std::abs(sol.poly.coeffs()[i] - expected.coeffs()[i]) < 1e-8);
}

TEST_CASE("offset tower operator has the known rational eigenpair") {
    const double q3 = 2.0 / 3.0;
    const double c1 = 8.0 / 5.0;
    const double c3 = 4189.0 / 2890.0;
    const double b = -9857.0 / 8670.0;
    const auto result = heun_polynomials(2, 1.0, q3, c1, c3, b);
    REQUIRE_FALSE(result.solutions.empty());
    const HeunSolution* hit = nullptr;
    for (const auto& sol : result.solutions)
        if (std::abs(sol.eigenvalue - Complex(-19.0 / 45.0)) < 1e-9) hit = &sol;
    REQUIRE(hit != nullptr);
    CHECK(std::abs(hit->poly.coeffs()[0] - Complex(23.0 / 3.0)) < 1e-9);
    CHECK(std::abs(hit->poly.coeffs()[1] - Complex(70.0 / 3.0)) < 1e-9);
    CHECK(std::abs(hit->poly.coeffs()[2] - Complex(1.0)) < 1e-12);
    // Accessory residues attached to the punctures 1 and q3.
    CHECK(std::abs(hit->data.gammas[0] - Complex(19.0 / 15.0)) < 1e-9);
    CHECK(std::abs(hit->data.gammas[1] - Complex(2183.0 / 1445.0)) < 1e-9);
    CHECK(std::abs(hit->data.gamma0 - Complex(-2408.0 / 867.0)) < 1e-9);
    CHECK_NOTHROW(check_lame_invariants(hit->data));
    CHECK(lame_operator_residual(hit->poly, hit->data).max_coeff() < 1e-8);
}

TEST_CASE("offset tower configuration is balanced") {
    const auto P = ComplexPolynomial(
        {Complex(23.0 / 3.0), Complex(70.0 / 3.0), Complex(1.0)});
    const auto c = one_n_one_config(P, 2.0 / 3.0, 8.0 / 5.0, 4189.0 / 2890.0, -9857.0 / 8670.0);
    REQUIRE(c.layers == std::vector<int>{1, 2, 1});
    CHECK(std::abs(c.nodes[0][0] - Complex(1.0)) < 1e-14);
    CHECK(std::abs(c.nodes[2][0] - Complex(2.0 / 3.0)) < 1e-14);
    CHECK(c.left_gap(0) == doctest::Approx(-97.0 / 120.0).epsilon(1e-12));
    CHECK(c.left_gap(1) == doctest::Approx(-379.0 / 4335.0).epsilon(1e-12));
    CHECK(c.left_gap(2) == doctest::Approx(148.0 / 213.0 - 4189.0 / 2890.0).epsilon(1e-12));
    CHECK(max_force(c) < 1e-10);
}

TEST_CASE("polynomial residual vanishes exactly on a telescoping chain") {
    const std::vector<ComplexPolynomial> polys = {
        ComplexPolynomial::from_roots({Complex(1.0)}),
        ComplexPolynomial::from_roots({Complex(-1.0)})};
    LayerResidues res;
    res.c = {0.0, 2.0, 2.0, 0.0};
    const std::vector<double> gaps = {-1.0, -1.0};
    const auto r = fp_residual(polys, res, gaps);
    CHECK(r.max_coeff() < 1e-14);
}

TEST_CASE("top residual coefficient is the flux invariant") {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<int> layers = {2, 1, 2};
        std::vector<ComplexPolynomial> polys;
        polys.push_back(ComplexPolynomial::from_roots({Complex(U(rng), 1.0 + U(rng)),
                                                       Complex(U(rng), -2.0 + U(rng))}));
        polys.push_back(ComplexPolynomial::from_roots({Complex(3.0 + U(rng), U(rng))}));
        polys.push_back(ComplexPolynomial::from_roots({Complex(-3.0 + U(rng), U(rng)),
                                                       Complex(U(rng), 4.0 + U(rng))}));
        LayerResidues res;
        res.c = {0.0, U(rng), U(rng), U(rng), 0.0};
        const std::vector<double> gaps = {U(rng), U(rng), U(rng)};
        const auto r = fp_residual(polys, res, gaps);
        double expected = 0.0;
        for (std::size_t l = 1; l <= 3; ++l) {
            const double nl = static_cast<double>(layers[l - 1]);
            const double nup = l < 3 ? static_cast<double>(layers[l]) : 0.0;
            expected += res.at(l) * res.at(l) * nl * nl + res.at(l) * nl * gaps[l - 1] -
                        res.at(l) * res.at(l + 1) * nl * nup;
        }
        REQUIRE(r.degree() >= 4);
        CHECK(r.coeffs()[4].real() == doctest::Approx(expected).epsilon(1e-10));
        CHECK(std::abs(r.coeffs()[4].imag()) < 1e-12 * (1.0 + std::abs(expected)));
    }
}

TEST_CASE("residual and forces vanish together") {
    // Balanced ring: residual is zero.
    std::vector<Complex> coeffs(5, Complex(0.0));
    coeffs[0] = Complex(-1.0);
    coeffs[4] = Complex(1.0);
    const std::vector<ComplexPolynomial> ring = {ComplexPolynomial(coeffs)};
    LayerResidues res;
    res.c = {0.0, 1.0, 0.0};
    const std::vector<double> gaps = {-4.0};
    CHECK(fp_residual(ring, res, gaps).max_coeff() < 1e-12 * fp_term_scale(ring, res, gaps));

    // Perturbed ring: residual and forces are both visibly nonzero.
    auto bent = coeffs;
    bent[2] = Complex(0.25, 0.1);
    const std::vector<ComplexPolynomial> bad = {ComplexPolynomial(bent)};
    CHECK(fp_residual(bad, res, gaps).max_coeff() > 1e-3);
    const auto config = config_from_polys(bad, res, gaps);
    CHECK(max_force(config) > 1e-3);
}

TEST_CASE("adjacent layers may not share a root") {
    const std::vector<ComplexPolynomial> polys = {
        ComplexPolynomial::from_roots({Complex(1.0)}),
        ComplexPolynomial::from_roots({Complex(1.0), Complex(2.0)})};
    LayerResidues res;
    res.c = {0.0, 1.0, 0.5, 0.0};
    const std::vector<double> gaps = {-1.0, -1.0};
    try {
        fp_residual(polys, res, gaps);
        FAIL("expected shared_roots");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::shared_roots);
    }

    const std::vector<ComplexPolynomial> doubled = {
        ComplexPolynomial::from_roots({Complex(1.0), Complex(1.0)})};
    LayerResidues res1;
    res1.c = {0.0, 1.0, 0.0};
    CHECK_THROWS_AS(fp_residual(doubled, res1, {-2.0}), Error);
}

TEST_CASE("coefficient solver recovers the ring from a bent seed") {
    // Constant coefficient of the first polynomial is pinned, so the solver
    // must land on z^2 - 1.2 (the ring scaled to match the pinned gauge).
    const std::vector<ComplexPolynomial> seeds = {
        ComplexPolynomial({Complex(-1.2), Complex(0.3), Complex(1.0)})};
    LayerResidues res;
    res.c = {0.0, 1.0, 0.0};
    const std::vector<double> gaps = {-2.0};
    std::vector<SolveTraceEntry> trace;
    const auto solved = fp_solve(seeds, res, gaps, {}, &trace);
    REQUIRE(solved.size() == 1);
    CHECK(std::abs(solved[0].coeffs()[0] - Complex(-1.2)) < 1e-15);
    CHECK(std::abs(solved[0].coeffs()[1]) < 1e-9);
    CHECK_FALSE(trace.empty());
    CHECK(trace.back().residual < 1e-11);
    const auto config = config_from_polys(solved, res, gaps);
    CHECK(max_force(config) < 1e-9);
}

TEST_CASE("coefficient solver stalls at a nonzero flux invariant") {
    const std::vector<ComplexPolynomial> seeds = {
        ComplexPolynomial({Complex(-1.0), Complex(0.1), Complex(1.0)})};
    LayerResidues res;
    res.c = {0.0, 1.0, 0.0};
    const std::vector<double> gaps = {-1.9};  // theta2 = 0.2
    try {
        fp_solve(seeds, res, gaps);
        FAIL("expected no_convergence");
    } catch (const ConvergenceError& e) {
        CHECK(e.code() == Errc::no_convergence);
        CHECK_FALSE(e.residual_history.empty());
        CHECK(e.residual_history.back() > 1e-6);
    }
}

TEST_CASE("config_from_polys reconstructs nodes and end speeds") {
    const std::vector<ComplexPolynomial> polys = {
        ComplexPolynomial::from_roots({Complex(1.0), Complex(-1.0)})};
    LayerResidues res;
    res.c = {0.0, 1.0, 0.0};
    const auto config = config_from_polys(polys, res, {-2.0});
    REQUIRE(config.layers == std::vector<int>{2});
    CHECK(config.theta_left[0] == 0.0);
    CHECK(config.theta_left[1] == doctest::Approx(-2.0));
    CHECK(config.theta_right[0] == doctest::Approx(2.0));
    CHECK(config.theta_right[1] == doctest::Approx(0.0));
    CHECK(max_force(config) < 1e-13);
}
