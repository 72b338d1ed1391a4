#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "catenode/config.hpp"

namespace catenode {

/// Nodes in adjacent layers closer than this are rejected before force
/// evaluation (the interaction kernel blows up).
inline constexpr double kCrossLayerTol = 1e-12;
/// Slack allowed in |sum F - theta2| relative to (1 + max |F|).
inline constexpr double kForceSumTol = 1e-10;

/// Pole data of the meromorphic 1-form attached to one plane: simple poles at
/// the nodes of the two neighbouring layers, at the origin and at infinity.
/// The residues always sum to zero (counting the one at infinity).
struct PsiForm {
    struct Pole {
        Complex position;      // ignored when at_infinity
        double residue;
        bool at_infinity;
    };
    std::size_t plane;         // 0-based plane index
    std::vector<Pole> poles;   // layer-above nodes, layer-below nodes, origin, infinity
};

/// Per-node forces plus the two global flux invariants.
struct ForceReport {
    std::vector<std::vector<Complex>> forces;  // ragged, same shape as config.nodes
    double theta1 = 0.0;
    double theta2 = 0.0;
    double max_abs_force = 0.0;

    Complex total() const {
        Complex s(0.0);
        for (const auto& layer : forces)
            for (Complex f : layer) s += f;
        return s;
    }
};

/// The 1-form for plane p (0..L). Its poles: nodes of the layer above p with
/// residue -c, nodes of the layer below with residue +c of that layer, the
/// origin with the left end speed, infinity with the right end speed.
PsiForm psi_form(const Configuration& config, const LayerResidues& residues, std::size_t plane);

/// Force on every node from the closed-form interaction sums. Verifies the
/// residue identity sum(F) = theta2 before returning.
ForceReport force(const Configuration& config, const LayerResidues& residues);

/// Same forces computed by expanding quadratic residues of the plane forms at
/// each node. Independent route used to cross-check `force`.
ForceReport force_residue_oracle(const Configuration& config, const LayerResidues& residues);

enum class ForceVariant { odd, even };

/// Historical force expressions; each differs from `force` by a multiple of
/// the flux recurrence, so the numbers agree whenever the residues were
/// derived from the end speeds. The selected variant is applied to every
/// layer.
ForceReport force_alt(const Configuration& config, const LayerResidues& residues,
                      ForceVariant variant);

/// Sum of forces over one layer (0-based).
Complex layer_force_sum(const ForceReport& report, std::size_t layer);

/// Analytic derivative of the force map with respect to node positions, in
/// lexicographic (layer, node) order for both rows and columns. Satisfies
/// J q = 0 (scale invariance).
Eigen::MatrixXcd jacobian(const Configuration& config, const LayerResidues& residues);

}  // namespace catenode
