#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "catenode/engine.hpp"
#include "catenode/polynomial_method.hpp"
#include "test_util.hpp"

using namespace catenode;

namespace {

double max_force(const Configuration& c) {
    return force(c, derive_residues(c)).max_abs_force;
}

/// Balanced two-layer example with a decoupled top node: the middle residue
/// vanishes, so the single upper node feels no force at all and contributes a
/// zero row and column to the Jacobian.
Configuration decoupled_config(int n) {
    Configuration c = four_end_config(n);
    c.layers.push_back(1);
    c.nodes.push_back({Complex(0.4, 1.9)});
    const double half = 0.5 * static_cast<double>(n);
    c.theta_left = {half, -half, 0.3};
    c.theta_right = {half, -half, -0.3};
    return c;
}

}  // namespace

TEST_CASE("newton recovers a bent ring without moving the pinned node") {
    const auto exact = four_end_config(3);
    auto start = exact;
    start.nodes[0][1] *= Complex(1.02, 0.015);
    start.nodes[0][2] *= Complex(0.99, -0.02);
    const auto result = newton_balance(start);
    CHECK(max_force(result.config) < 1e-11);
    CHECK(std::abs(result.config.nodes[0][0] - exact.nodes[0][0]) < 1e-15);
    for (std::size_t k = 1; k < 3; ++k)
        CHECK(std::abs(result.config.nodes[0][k] - exact.nodes[0][k]) < 1e-8);
    CHECK_FALSE(result.trace.empty());
    CHECK(result.trace.back().residual < result.trace.front().residual);
}

TEST_CASE("newton refuses a nonzero flux invariant") {
    Configuration c;
    c.layers = {2};
    c.nodes = {{Complex(1.0, 0.0), Complex(-1.0, 0.0)}};
    c.theta_left = {1.0, 0.0};
    c.theta_right = {0.5, -1.5};  // theta1 = 0, theta2 = 0.75
    try {
        newton_balance(c);
        FAIL("expected theta2_nonzero");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::theta2_nonzero);
    }
}

TEST_CASE("newton reports a singular step when a node is decoupled") {
    auto c = decoupled_config(3);
    c.nodes[0][1] *= Complex(1.05, 0.04);  // unbalance the ring
    try {
        newton_balance(c);
        FAIL("expected singular_step");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::singular_step);
    }
}

TEST_CASE("newton iteration limit raises a convergence error with history") {
    auto start = four_end_config(4);
    for (std::size_t k = 1; k < 4; ++k)
        start.nodes[0][k] *= Complex(1.0 + 0.2 * static_cast<double>(k), 0.3);
    SolveOptions opts;
    opts.max_iter = 1;
    opts.tol = 1e-14;
    try {
        newton_balance(start, opts);
        FAIL("expected no_convergence");
    } catch (const ConvergenceError& e) {
        CHECK(e.code() == Errc::no_convergence);
        CHECK_FALSE(e.residual_history.empty());
        CHECK_FALSE(e.best_nodes.empty());
    }
}

TEST_CASE("multistart is deterministic and finds the ring") {
    const auto ring = four_end_config(4);
    const auto a =
        balance_multistart(ring.layers, ring.theta_left, ring.theta_right, BalanceMethod::newton, 6);
    const auto b =
        balance_multistart(ring.layers, ring.theta_left, ring.theta_right, BalanceMethod::newton, 6);
    CHECK(a.seed == b.seed);
    CHECK(a.attempted == 6);
    CHECK(a.succeeded >= 1);
    CHECK(a.residual < 1e-11);
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(std::abs(a.config.nodes[0][k] - b.config.nodes[0][k]) < 1e-14);
    // The solution is the ring up to the scaling gauge: node ratios are 4th
    // roots of unity.
    auto norm = normalize_scale(a.config);
    for (Complex q : norm.nodes[0])
        CHECK(std::abs(std::pow(q, 4) - Complex(1.0)) < 1e-8);
}

TEST_CASE("multistart with the coefficient solver agrees with newton") {
    const auto ring = four_end_config(3);
    const auto via_fp =
        balance_multistart(ring.layers, ring.theta_left, ring.theta_right, BalanceMethod::fp, 6);
    CHECK(via_fp.residual < 1e-10);
    auto norm = normalize_scale(via_fp.config);
    for (Complex q : norm.nodes[0])
        CHECK(std::abs(std::pow(q, 3) - Complex(1.0)) < 1e-8);
}

TEST_CASE("rigidity distinguishes rings from decoupled stacks") {
    for (int n : {2, 3, 5}) {
        const auto rep = rigidity(four_end_config(n));
        CHECK(rep.rank == static_cast<std::size_t>(n) - 1);
        CHECK(rep.rigid);
        CHECK(rep.singular_values.size() == static_cast<std::size_t>(n));
    }
    const auto loose = rigidity(decoupled_config(3));
    CHECK(loose.rank == 4 - 2);  // N = 4 nodes, two zero directions
    CHECK_FALSE(loose.rigid);
}

TEST_CASE("embeddedness checks strict end speed decrease") {
    CHECK(embeddedness_check(four_end_config(3)).embedded);
    CHECK(embeddedness_check(n1_config(2, -1.5, 0.5)).embedded);

    auto c = decoupled_config(3);  // both chains rise at the last plane
    const auto rep = embeddedness_check(c);
    CHECK_FALSE(rep.embedded);
    CHECK(rep.left_violation == 2);
    CHECK(rep.right_violation == 2);
}

TEST_CASE("flux concavity against the zero boundary") {
    // n_l c_l = ln(1 + l) is strictly concave including the boundary zeros.
    std::vector<int> layers(5, 1);
    LayerResidues res;
    res.c.assign(7, 0.0);
    for (int l = 1; l <= 5; ++l) res.c[static_cast<std::size_t>(l)] = std::log1p(l);
    CHECK(concavity_check(layers, res));

    LayerResidues flat;
    flat.c = {0.0, 1.0, 1.0, 1.0, 0.0};
    CHECK_FALSE(concavity_check({1, 1, 1}, flat));
}

TEST_CASE("single-node towers solve in closed form") {
    const std::vector<double> left = {1.0, 0.0, -1.0};
    const std::vector<double> right = {1.0, 0.0, -1.0};
    const auto c = genus0_solve(left, right);
    REQUIRE(c.layers == std::vector<int>{1, 1});
    CHECK(std::abs(c.nodes[0][0] - Complex(1.0)) < 1e-14);
    CHECK(std::abs(c.nodes[1][0] - Complex(-1.0)) < 1e-12);
    CHECK(max_force(c) < 1e-13);
}

TEST_CASE("random single-node towers balance and alternate in sign") {
    std::mt19937_64 rng(8675309);
    for (int trial = 0; trial < 10; ++trial) {
        const int L = 2 + static_cast<int>(rng() % 5);
        std::vector<double> left, right;
        testutil::random_genus0_theta(rng, L, left, right);
        const auto c = genus0_solve(left, right);
        CHECK(max_force(c) < 1e-11);
        for (std::size_t l = 0; l + 1 < c.nodes.size(); ++l) {
            CHECK(std::abs(c.nodes[l][0].imag()) < 1e-12);
            CHECK(c.nodes[l][0].real() * c.nodes[l + 1][0].real() < 0.0);
        }
    }
}

TEST_CASE("degenerate residue chains are rejected in closed form") {
    // First residue vanishes: left + right speeds cancel at the bottom plane.
    const std::vector<double> left = {1.0, 0.0, -1.0};
    const std::vector<double> right = {-1.0, 0.0, 1.0};
    try {
        genus0_solve(left, right);
        FAIL("expected degenerate_qtilde");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_qtilde);
    }
}

TEST_CASE("a tower block concatenates with itself into a taller tower") {
    // Block with unit bottom residue: stacking one copy reproduces it.
    const auto P = hypergeometric_poly(2, -1.5, 0.5);
    const auto block = one_n_one_config(P, 1.0, 1.0, 2.0, -1.5);
    CHECK(max_force(block) < 1e-11);
    const auto same = concatenate({block});
    REQUIRE(same.layers == block.layers);
    for (std::size_t l = 0; l < block.nodes.size(); ++l)
        for (std::size_t k = 0; k < block.nodes[l].size(); ++k)
            CHECK(std::abs(same.nodes[l][k] - block.nodes[l][k]) < 1e-10);
    for (std::size_t p = 0; p < block.theta_left.size(); ++p) {
        CHECK(same.theta_left[p] == doctest::Approx(block.theta_left[p]).epsilon(1e-10));
        CHECK(same.theta_right[p] == doctest::Approx(block.theta_right[p]).epsilon(1e-10));
    }

    const auto twice = concatenate({block, block});
    REQUIRE(twice.layers == std::vector<int>{1, 2, 1, 2, 1});
    CHECK(max_force(twice) < 1e-9);
}

TEST_CASE("concatenate validates its blocks") {
    const auto P = hypergeometric_poly(2, -1.5, 0.5);
    auto block = one_n_one_config(P, 1.0, 1.0, 2.0, -1.5);

    auto shifted = block;
    for (auto& layer : shifted.nodes)
        for (auto& q : layer) q *= 2.0;  // first node no longer at 1
    try {
        concatenate({shifted});
        FAIL("expected block_not_normalized");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::block_not_normalized);
    }

    auto bent = block;
    bent.nodes[1][0] *= Complex(1.1, 0.05);
    try {
        concatenate({bent});
        FAIL("expected block_not_balanced");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::block_not_balanced);
    }

    auto wrong_shape = four_end_config(3);
    CHECK_THROWS_AS(concatenate({wrong_shape}), Error);
}

TEST_CASE("two offset rings obstruct each other except at aligned phases") {
    const auto scan = glue_phase_scan(1, 1, 0.1, 101);
    REQUIRE(scan.phi.size() == 101);
    REQUIRE(scan.zeros.size() >= 2);
    CHECK(scan.zeros.front() == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(scan.zeros.back() == doctest::Approx(std::acos(-1.0)).epsilon(1e-10));
    // Strictly negative obstruction between the aligned phases.
    for (std::size_t i = 1; i + 1 < scan.phi.size(); ++i) CHECK(scan.im_g2[i] < 0.0);
}

TEST_CASE("ring glue obstruction matches its closed form") {
    // Im G2 = -2 n1 n2 Im(w / (1 - w)) with w = lambda^mu e^{i mu phi},
    // mu = lcm(n1, n2). Test-only closed form.
    const double pi = std::acos(-1.0);
    for (int n1 : {1, 2}) {
        for (int n2 : {1, 3}) {
            const int mu = n1 * n2 / std::gcd(n1, n2);
            for (double phi : {0.3, 1.1, 2.4}) {
                const double lambda = 0.2;
                const Complex w = std::pow(lambda, mu) *
                                  Complex(std::cos(mu * phi), std::sin(mu * phi));
                const double expected =
                    -2.0 * n1 * n2 * (w / (1.0 - w)).imag();
                const Complex g2 = glue_second_ring_force(n1, n2, lambda, phi);
                CHECK(g2.imag() == doctest::Approx(expected).epsilon(1e-9));
            }
            // Zeros of the scan sit at multiples of pi / mu.
            const auto scan = glue_phase_scan(n1, n2, 0.15, 301);
            for (double z : scan.zeros) {
                const double nearest = std::round(z * mu / pi) * pi / mu;
                CHECK(std::abs(z - nearest) < 1e-6);
            }
        }
    }
}

TEST_CASE("glue obstruction ignores the end speed gap") {
    // The gap enters each force as a real shift, so the imaginary part of the
    // ring force sum cannot see it: rotating the end speed split changes
    // nothing at all.
    const Complex base = glue_second_ring_force(2, 3, 0.2, 0.7);
    const auto cfg = glue_config(2, 3, 0.2, 0.7);
    auto bent = cfg;
    bent.theta_left[1] += 0.4;   // changes the gap across the layer
    bent.theta_right[1] -= 0.4;  // keeps theta1 and the residues
    const auto rep = force(bent, derive_residues(bent));
    Complex sum(0.0);
    for (std::size_t k = 2; k < 5; ++k) sum += rep.forces[0][k];
    CHECK(sum.imag() == doctest::Approx(base.imag()).epsilon(1e-12));
    CHECK(std::abs(sum.real() - base.real()) > 0.1);  // the real part does move
}
