#pragma once

#include <cstddef>
#include <vector>

#include "catenode/config.hpp"
#include "catenode/forces.hpp"
#include "catenode/polynomial_method.hpp"

namespace catenode {

struct SolveOptions {
    double tol = 1e-12;        // absolute force residual target
    int max_iter = 100;
    double rank_rel_tol = 1e-8;  // singular values below this times the largest count as zero
};

struct BalanceResult {
    Configuration config;
    std::vector<SolveTraceEntry> trace;
};

/// Damped Newton iteration on the node positions with the first node pinned
/// (scaling gauge). One force equation is redundant because the forces always
/// sum to theta2, so the pinned node's equation is dropped and recovered at
/// the solution. Requires |theta2| <= tol; converges when the remaining
/// residuals drop below tol/2, which bounds the full residual by 10*tol.
/// Throws ConvergenceError (with residual history) on stall or iteration
/// limit, Error(singular_step) when the reduced Jacobian degenerates.
BalanceResult newton_balance(const Configuration& start, const SolveOptions& options = {});

enum class BalanceMethod { newton, fp };

struct MultiStartResult {
    Configuration config;
    int seed = -1;          // seed index that produced the accepted solution
    double residual = 0.0;  // its max |F|
    int attempted = 0;
    int succeeded = 0;
};

/// Runs newton_balance (on random node seeds) or fp_solve (on the matching
/// random layer polynomials) from `num_seeds` deterministic starting points
/// and returns the best converged solution: lowest residual, ties broken by
/// lowest seed index. Seed 0 is a structured start (roots of unity per layer
/// on staggered radii), later seeds draw nodes from log-uniform annuli.
/// Throws ConvergenceError when every seed fails.
MultiStartResult balance_multistart(const std::vector<int>& layers,
                                    const std::vector<double>& theta_left,
                                    const std::vector<double>& theta_right, BalanceMethod method,
                                    int num_seeds, const SolveOptions& options = {});

struct RigidityReport {
    std::vector<double> singular_values;  // descending
    std::size_t rank = 0;
    bool rigid = false;  // rank == N - 1: only the scaling gauge moves
};

/// Singular value decomposition of the force Jacobian. The scaling direction
/// J q = 0 always contributes one zero, so a balanced configuration is rigid
/// exactly when the rank is N - 1.
RigidityReport rigidity(const Configuration& config, const SolveOptions& options = {});

struct EmbedReport {
    bool embedded = false;
    int left_violation = -1;   // first plane whose left speed fails to decrease
    int right_violation = -1;
};

/// Checks that both end speed chains are strictly decreasing in the plane
/// index, the condition for the ends to stack without crossings.
EmbedReport embeddedness_check(const Configuration& config);

/// Strict concavity of l -> n_l c_l against the zero boundary values. Holds
/// for all flux patterns reachable by stacking balanced blocks with positive
/// residues.
bool concavity_check(const std::vector<int>& layers, const LayerResidues& residues);

/// Closed-form node positions for single-node layers: with all n_l = 1 the
/// balance equations telescope into one product recurrence. Requires theta1
/// and theta2 to vanish; throws degenerate_qtilde when a residue or a partial
/// sum in the recurrence vanishes (the product step would divide by zero or
/// collide adjacent nodes).
Configuration genus0_solve(const std::vector<double>& theta_left,
                           const std::vector<double>& theta_right);

/// Stacks balanced three-layer blocks (single node, n_r nodes, single node,
/// first node at 1) into one tower, merging each block's top node with the
/// next block's bottom node. Residues are rescaled so adjacent blocks agree
/// on the shared layer and the end speed gaps are reassembled from the block
/// data, so the result is balanced by construction (verified). With `tail`
/// the last block is a two-layer (single node, n_R nodes) cap. Throws
/// block_not_normalized / block_not_balanced on bad blocks.
Configuration concatenate(const std::vector<Configuration>& blocks, bool tail = false);

/// Single-layer configuration holding two concentric rings: n1 unit roots and
/// n2 nodes at lambda e^{i phi} times the n2-th roots of unity, with the
/// four-end end speeds for n1 + n2 nodes.
Configuration glue_config(int n1, int n2, double lambda, double phi);

struct PhaseScan {
    std::vector<double> phi;     // grid on [0, pi]
    std::vector<double> im_g2;   // imaginary part of the second ring's force sum
    std::vector<double> zeros;   // interpolated sign changes
};

/// Scans the relative phase of the second ring and records the imaginary
/// part of its total force, the obstruction to balancing the two rings. Its
/// zeros mark the phases where gluing can proceed.
PhaseScan glue_phase_scan(int n1, int n2, double lambda, int grid_points = 201);

/// Total force on the second ring of a glue_config.
Complex glue_second_ring_force(int n1, int n2, double lambda, double phi);

}  // namespace catenode
