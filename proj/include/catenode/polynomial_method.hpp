#pragma once

#include <string>
#include <vector>

#include "catenode/config.hpp"
#include "catenode/forces.hpp"
#include "catenode/poly.hpp"

namespace catenode {

/// Single-layer configuration whose nodes are the n-th roots of unity, with
/// end speeds chosen so the layer residue is 1 and the interaction constant
/// is -(n-1); every force then vanishes identically. `rotation` shifts the
/// left/right end speed split without affecting forces (horizontal rotation
/// gauge); 0 gives the symmetric embedded choice (n/2, -n/2 on both sides).
Configuration four_end_config(int n, double rotation = 0.0);

/// Terminating Gauss series sum_k (-1)^k C(n,k) (b)_k / (c)_k z^k of degree n.
/// Coefficients are built with running Pochhammer products, which keeps them
/// exact in the envelope n <= 30, |b|, |c| < 50. Throws bad_c when c is a
/// non-positive integer (a Pochhammer factor in the denominator vanishes) and
/// degenerate_degree when b in {0,-1,...,-(n-1)} kills the leading term.
ComplexPolynomial hypergeometric_poly(int n, double b, double c);

/// True when fixing the leading coefficient forces every lower coefficient of
/// a degree-n solution of the Gauss equation, i.e. the three-term coefficient
/// recurrence has no vanishing factor: b and c both avoid {0,-1,...,-(n-1)}.
bool hypergeom_rigidity_recurrence(int n, double b, double c);

/// Two-layer configuration (n nodes, then a single node at 1) whose first
/// layer consists of the roots of hypergeometric_poly(n, b, c). The end speed
/// gaps are c - 1 across the first layer and -n*b/c2 - c2 across the second,
/// with c2 = n - 1 - b + c; the configuration is balanced. Throws zero_c2
/// when c2 vanishes, non_simple_roots / root_at_puncture when the polynomial
/// roots collide or hit 0 or 1.
Configuration n1_config(int n, double b, double c);

/// The four scalar inequalities equivalent to strict end speed monotonicity
/// for n1_config parameters (valid when c2 > 0).
struct N1EmbedFlags {
    bool c_below_one = false;
    bool b_above_minus_n = false;
    bool c2sq_above_minus_nb = false;
    bool c2sq_above_n_c2_plus_b = false;
    bool all() const {
        return c_below_one && b_above_minus_n && c2sq_above_minus_nb && c2sq_above_n_c2_plus_b;
    }
};
N1EmbedFlags n1_embeddedness_flags(int n, double b, double c);

/// Data of the degree-n Fuchsian operator
///   P'' + (c0/z + sum_i m_i/(z - s_i)) P' + (g0/z + sum_i g_i/(z - s_i)) P
/// acting on polynomials, where s_i are the outer punctures, m_i the log
/// derivative coefficients and g_i the accessory residues. The residues must
/// satisfy sum(g) = 0 and sum(g_i s_i) = -n*b, and the coefficients the index
/// relation c0 + sum(m_i) = 1 - n + b.
struct LameData {
    int degree = 0;
    double c0_prime = 0.0;               // coefficient at the origin puncture
    std::vector<Complex> punctures;      // outer punctures, all nonzero
    std::vector<double> prime_coeffs;    // m_i, aligned with punctures
    Complex gamma0{0.0};
    std::vector<Complex> gammas;         // g_i, aligned with punctures
    double b = 0.0;
};

/// Throws invariant_violation when the three LameData side conditions fail.
void check_lame_invariants(const LameData& data);

/// Polynomial left over after applying the operator to P and clearing all
/// denominators with z * prod(z - s_i). Vanishes exactly when P solves the
/// equation. Checks the LameData invariants first.
ComplexPolynomial lame_operator_residual(const ComplexPolynomial& P, const LameData& data);

/// One polynomial solution of the two-outer-puncture operator together with
/// the accessory data that produced it.
struct HeunSolution {
    ComplexPolynomial poly;
    LameData data;
    Complex eigenvalue{0.0};
};

struct HeunResult {
    std::vector<HeunSolution> solutions;
    std::vector<std::string> rejected;  // degree drops, repeated or puncture-hitting roots
};

/// All monic degree-n polynomial solutions for outer punctures s1, s2 with
/// log derivative coefficients -c1, -c3 and parameter b (the origin
/// coefficient is pinned by the index relation). Restricting the cleared
/// operator to monic degree-n coefficient space turns the free accessory
/// scalar into a plain eigenvalue, so candidates are eigenpairs of one real
/// (n+1) x (n+1) matrix: at most n+1 solutions. When s1 == s2 the accessory
/// scalar drops out and only kernel vectors qualify.
HeunResult heun_polynomials(int n, double s1, double s2, double c1, double c3, double b);

/// Three-layer configuration (single node at s1=1, the roots of P, single
/// node at q3) balanced by construction when P solves the operator from
/// heun_polynomials(n, 1, q3, c1, c3, b).
Configuration one_n_one_config(const ComplexPolynomial& P, double q3, double c1, double c3,
                               double b);

/// Configuration whose layer nodes are the roots of the given monic
/// polynomials, with end speeds reconstructed from the layer residues and
/// left-speed gaps (left speed of the first plane gauged to 0).
Configuration config_from_polys(const std::vector<ComplexPolynomial>& polys,
                                const LayerResidues& residues, const std::vector<double>& gaps);

/// The polynomial form of the balance map: a single polynomial of degree
/// < N = sum(n_l) whose coefficients vanish exactly when every force does
/// (for simple, adjacent-disjoint root sets). The degree-(N-1) coefficient
/// always equals theta2 and is independent of the node positions.
/// Preconditions: monic inputs, simple roots, no root shared between
/// adjacent layers (shared_roots); the internal exact divisions are checked
/// (inexact_division).
ComplexPolynomial fp_residual(const std::vector<ComplexPolynomial>& polys,
                              const LayerResidues& residues, const std::vector<double>& gaps);

/// Magnitude scale of the terms entering fp_residual, for relative tests.
double fp_term_scale(const std::vector<ComplexPolynomial>& polys, const LayerResidues& residues,
                     const std::vector<double>& gaps);

struct FpOptions {
    double tol = 1e-12;   // relative to the term scale
    int max_iter = 100;
};

struct SolveTraceEntry {
    int iter = 0;
    double residual = 0.0;
    double step_norm = 0.0;
};

/// Damped Newton iteration on the coefficients of the layer polynomials
/// (monic, constant coefficient of the first polynomial pinned to fix the
/// scaling gauge), driving fp_residual to zero. The degree-(N-1) residual
/// coefficient equals theta2 identically, so gaps with theta2 != 0 stall at
/// that value and raise no_convergence. The analytic coefficient Jacobian is
/// used; steps are halved until the residual decreases (floor 2^-20).
std::vector<ComplexPolynomial> fp_solve(const std::vector<ComplexPolynomial>& seeds,
                                        const LayerResidues& residues,
                                        const std::vector<double>& gaps,
                                        const FpOptions& options = {},
                                        std::vector<SolveTraceEntry>* trace = nullptr);

}  // namespace catenode
