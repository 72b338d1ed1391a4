#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace catenode {

using Complex = std::complex<double>;

/// Failure categories used across the library. The CLI maps these onto
/// process exit codes (input / precondition / convergence).
enum class Errc {
    // input & shape validation
    zero_node,
    duplicate_node,
    shape_mismatch,
    bad_input,
    // analytic preconditions
    theta1_nonzero,
    theta2_nonzero,
    cross_layer_collision,
    consistency_failure,
    degenerate_qtilde,
    block_not_normalized,
    block_not_balanced,
    shared_roots,
    inexact_division,
    invariant_violation,
    root_at_puncture,
    non_simple_roots,
    bad_c,
    degenerate_degree,
    zero_c2,
    degree_zero,
    no_solutions,
    // iteration outcomes
    no_convergence,
    singular_step,
};

/// Exit-code class of an error category: 2 = malformed input, 3 = violated
/// precondition, 4 = iteration did not converge.
int exit_class(Errc code);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

  private:
    Errc code_;
};

/// Thrown when an iterative solver gives up. Carries the residual history
/// (one entry per accepted iteration) and, when the solver works on node
/// positions, the best iterate reached, so callers can dump diagnostics.
class ConvergenceError : public Error {
  public:
    ConvergenceError(Errc code, const std::string& what, std::vector<double> history,
                     std::vector<std::vector<Complex>> nodes = {})
        : Error(code, what), residual_history(std::move(history)), best_nodes(std::move(nodes)) {}

    std::vector<double> residual_history;
    std::vector<std::vector<Complex>> best_nodes;
};

}  // namespace catenode
