#pragma once

#include <cstddef>
#include <vector>

#include "catenode/errors.hpp"

namespace catenode {

/// Absolute tolerance below which two nodes count as coincident.
inline constexpr double kNodeCoincidenceTol = 1e-12;
/// |theta1| must stay below this for the flux recurrence to be solvable.
inline constexpr double kTheta1Tol = 1e-10;
/// Residual allowed when checking the flux recurrence at the last plane.
inline constexpr double kFluxCheckTol = 1e-10;

/// A periodic arrangement of catenoid necks grouped into horizontal layers,
/// together with the end speeds of the bounding planar levels.
///
/// Layer l (0-based, l = 0..L-1) holds nodes[l].size() == layers[l] neck
/// positions, as nonzero complex numbers q; the neck sits at ln(q) + 2*pi*i*m
/// in the periodic strip. Planes are indexed 0..L; theta_left[p] is the end
/// speed of plane p on the 0-side of the cylinder and theta_right[p] the one
/// on the infinity side.
struct Configuration {
    std::vector<int> layers;
    std::vector<std::vector<Complex>> nodes;
    std::vector<double> theta_left;
    std::vector<double> theta_right;

    std::size_t layer_count() const { return layers.size(); }
    std::size_t plane_count() const { return layers.size() + 1; }

    std::size_t total_nodes() const {
        std::size_t n = 0;
        for (int nl : layers) n += static_cast<std::size_t>(nl);
        return n;
    }

    /// Flat node index in lexicographic (layer, node) order.
    std::size_t flat_index(std::size_t layer, std::size_t k) const {
        std::size_t idx = 0;
        for (std::size_t l = 0; l < layer; ++l) idx += static_cast<std::size_t>(layers[l]);
        return idx + k;
    }

    /// Gap of left end speeds across layer l: theta_left[l+1] - theta_left[l].
    double left_gap(std::size_t layer) const { return theta_left[layer + 1] - theta_left[layer]; }
};

/// Neck residues c_l derived from the flux recurrence, padded with the
/// boundary zeros: c[0] = c[L+1] = 0 and c[l] belongs to layer l-1 of the
/// configuration. The padding keeps neighbour lookups branch-free.
struct LayerResidues {
    std::vector<double> c;

    double at(std::size_t padded_index) const { return c[padded_index]; }
    std::size_t padded_size() const { return c.size(); }
};

/// Checks shapes, nonzero nodes and within-layer distinctness.
/// Throws Error with codes shape_mismatch / zero_node / duplicate_node.
void validate(const Configuration& config);

/// Sum of all end speeds. Must vanish for a closed configuration.
double theta1(const Configuration& config);

/// Half sum of (right^2 - left^2) over planes; equals the total force by the
/// residue identity, hence must vanish for a balanced configuration to exist.
double theta2(const Configuration& config);

/// Solves the flux recurrence 	n_l c_l = n_{l-1} c_{l-1} + left_l + right_l
/// forward and checks that the final plane closes it. Requires theta1 ~ 0.
LayerResidues derive_residues(const Configuration& config);

/// Same recurrence from raw layer counts and end speeds (node positions do
/// not enter the residues).
LayerResidues derive_residues(const std::vector<int>& layers, const std::vector<double>& left,
                              const std::vector<double>& right);

/// End speeds from the per-layer left gaps: the first left speed is gauged to
/// 0, the remaining left speeds accumulate the gaps, and the right speeds are
/// whatever the flux recurrence demands for the given residues.
void complete_end_speeds(const std::vector<int>& layers, const LayerResidues& residues,
                         const std::vector<double>& gaps, std::vector<double>& left,
                         std::vector<double>& right);

/// Rescales all nodes by 1/q_{0,0} so the first node sits at 1. End speeds
/// are untouched (forces are scale invariant). Idempotent.
Configuration normalize_scale(const Configuration& config);

/// The configuration seen after a half-turn about a horizontal axis: layer
/// order reversed, q -> 1/q, and end speeds swapped between the two sides
/// with a sign flip. Balanced configurations stay balanced.
Configuration reverse(const Configuration& config);

}  // namespace catenode
