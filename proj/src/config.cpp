#include "catenode/config.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace catenode {

int exit_class(Errc code) {
    switch (code) {
        case Errc::zero_node:
        case Errc::duplicate_node:
        case Errc::shape_mismatch:
        case Errc::bad_input:
        case Errc::bad_c:
        case Errc::degenerate_degree:
        case Errc::zero_c2:
        case Errc::degree_zero:
            return 2;
        case Errc::no_convergence:
        case Errc::singular_step:
        case Errc::no_solutions:
            return 4;
        default:
            return 3;
    }
}

void validate(const Configuration& config) {
    const std::size_t L = config.layer_count();
    if (L == 0) throw Error(Errc::shape_mismatch, "configuration has no layers");
    if (config.nodes.size() != L)
        throw Error(Errc::shape_mismatch, "nodes array does not match layer count");
    if (config.theta_left.size() != L + 1 || config.theta_right.size() != L + 1)
        throw Error(Errc::shape_mismatch, "theta_dot arrays must have one entry per plane");

    for (std::size_t l = 0; l < L; ++l) {
        if (config.layers[l] < 1)
            throw Error(Errc::shape_mismatch, "layer " + std::to_string(l + 1) + " is empty");
        if (config.nodes[l].size() != static_cast<std::size_t>(config.layers[l]))
            throw Error(Errc::shape_mismatch,
                        "layer " + std::to_string(l + 1) + " node count mismatch");
        for (std::size_t k = 0; k < config.nodes[l].size(); ++k) {
            const Complex q = config.nodes[l][k];
            if (!(std::isfinite(q.real()) && std::isfinite(q.imag())))
                throw Error(Errc::bad_input, "node position is not finite");
            if (std::abs(q) <= kNodeCoincidenceTol)
                throw Error(Errc::zero_node, "node at origin in layer " + std::to_string(l + 1));
            for (std::size_t j = 0; j < k; ++j) {
                if (std::abs(q - config.nodes[l][j]) <= kNodeCoincidenceTol)
                    throw Error(Errc::duplicate_node,
                                "coincident nodes in layer " + std::to_string(l + 1));
            }
        }
    }

    for (double v : config.theta_left)
        if (!std::isfinite(v)) throw Error(Errc::bad_input, "theta_dot entry is not finite");
    for (double v : config.theta_right)
        if (!std::isfinite(v)) throw Error(Errc::bad_input, "theta_dot entry is not finite");
}

double theta1(const Configuration& config) {
    double sum = 0.0;
    for (double v : config.theta_left) sum += v;
    for (double v : config.theta_right) sum += v;
    return sum;
}

double theta2(const Configuration& config) {
    double sum = 0.0;
    for (std::size_t p = 0; p < config.plane_count(); ++p) {
        const double to = config.theta_left[p];
        const double ti = config.theta_right[p];
        sum += 0.5 * (ti * ti - to * to);
    }
    return sum;
}

LayerResidues derive_residues(const std::vector<int>& layers, const std::vector<double>& left,
                              const std::vector<double>& right) {
    const std::size_t L = layers.size();
    if (L == 0 || left.size() != L + 1 || right.size() != L + 1)
        throw Error(Errc::shape_mismatch, "theta_dot arrays must have one entry per plane");
    double t1 = 0.0;
    for (double v : left) t1 += v;
    for (double v : right) t1 += v;
    if (std::abs(t1) > kTheta1Tol)
        throw Error(Errc::theta1_nonzero,
                    "end speeds do not sum to zero (theta1 = " + std::to_string(t1) + ")");

    LayerResidues res;
    res.c.assign(L + 2, 0.0);
    double scale = 1.0;
    for (std::size_t l = 1; l <= L; ++l) {
        const double nl = static_cast<double>(layers[l - 1]);
        const double nprev = (l >= 2) ? static_cast<double>(layers[l - 2]) : 0.0;
        res.c[l] = (nprev * res.c[l - 1] + left[l - 1] + right[l - 1]) / nl;
        scale = std::max(scale, std::abs(res.c[l]));
    }
    // Closing relation at the last plane; holds automatically when theta1 = 0,
    // so a violation signals inconsistent inputs rather than roundoff.
    const double nL = static_cast<double>(layers[L - 1]);
    const double residual = nL * res.c[L] + left[L] + right[L];
    if (std::abs(residual) > kFluxCheckTol * scale)
        throw Error(Errc::consistency_failure, "flux recurrence does not close at the last plane");
    return res;
}

LayerResidues derive_residues(const Configuration& config) {
    validate(config);
    return derive_residues(config.layers, config.theta_left, config.theta_right);
}

void complete_end_speeds(const std::vector<int>& layers, const LayerResidues& residues,
                         const std::vector<double>& gaps, std::vector<double>& left,
                         std::vector<double>& right) {
    const std::size_t planes = layers.size() + 1;
    if (gaps.size() != layers.size())
        throw Error(Errc::shape_mismatch, "need one end speed gap per layer");
    if (residues.padded_size() != layers.size() + 2)
        throw Error(Errc::shape_mismatch, "residues not padded to layer count + 2");
    left.assign(planes, 0.0);
    for (std::size_t p = 1; p < planes; ++p) left[p] = left[p - 1] + gaps[p - 1];
    right.assign(planes, 0.0);
    for (std::size_t p = 0; p < planes; ++p) {
        const double n_above = p < layers.size() ? static_cast<double>(layers[p]) : 0.0;
        const double n_below = p > 0 ? static_cast<double>(layers[p - 1]) : 0.0;
        right[p] = n_above * residues.at(p + 1) - n_below * residues.at(p) - left[p];
    }
}

Configuration normalize_scale(const Configuration& config) {
    validate(config);
    Configuration out = config;
    const Complex pivot = config.nodes[0][0];
    for (auto& layer : out.nodes)
        for (auto& q : layer) q /= pivot;
    out.nodes[0][0] = Complex(1.0, 0.0);  // pin exactly, the division already lands within eps
    return out;
}

Configuration reverse(const Configuration& config) {
    validate(config);
    const std::size_t L = config.layer_count();
    Configuration out;
    out.layers.resize(L);
    out.nodes.resize(L);
    out.theta_left.resize(L + 1);
    out.theta_right.resize(L + 1);
    for (std::size_t l = 0; l < L; ++l) {
        out.layers[l] = config.layers[L - 1 - l];
        out.nodes[l].resize(config.nodes[L - 1 - l].size());
        for (std::size_t k = 0; k < out.nodes[l].size(); ++k)
            out.nodes[l][k] = 1.0 / config.nodes[L - 1 - l][k];
    }
    for (std::size_t p = 0; p <= L; ++p) {
        out.theta_left[p] = -config.theta_right[L - p];
        out.theta_right[p] = -config.theta_left[L - p];
    }
    return out;
}

}  // namespace catenode
