#include "catenode/forces.hpp"

#include <cmath>
#include <string>

namespace catenode {

namespace {

void check_cross_layer(const Configuration& config) {
    for (std::size_t l = 0; l + 1 < config.layer_count(); ++l)
        for (Complex a : config.nodes[l])
            for (Complex b : config.nodes[l + 1])
                if (std::abs(a - b) <= kCrossLayerTol)
                    throw Error(Errc::cross_layer_collision,
                                "node collision between layers " + std::to_string(l + 1) +
                                    " and " + std::to_string(l + 2));
}

ForceReport finalize(const Configuration& config, std::vector<std::vector<Complex>> forces) {
    ForceReport report;
    report.forces = std::move(forces);
    report.theta1 = theta1(config);
    report.theta2 = theta2(config);
    for (const auto& layer : report.forces)
        for (Complex f : layer) report.max_abs_force = std::max(report.max_abs_force, std::abs(f));
    const double drift = std::abs(report.total() - report.theta2);
    if (drift > kForceSumTol * (1.0 + report.max_abs_force))
        throw Error(Errc::consistency_failure,
                    "total force does not reproduce theta2 (drift " + std::to_string(drift) + ")");
    return report;
}

}  // namespace

PsiForm psi_form(const Configuration& config, const LayerResidues& residues, std::size_t plane) {
    validate(config);
    if (plane >= config.plane_count())
        throw Error(Errc::shape_mismatch, "plane index out of range");
    if (residues.padded_size() != config.layer_count() + 2)
        throw Error(Errc::shape_mismatch, "residue array does not match layer count");

    PsiForm form;
    form.plane = plane;
    const std::size_t L = config.layer_count();
    // Layer above the plane (one-based layer plane+1) carries residue -c_{plane+1}.
    if (plane < L)
        for (Complex q : config.nodes[plane])
            form.poles.push_back({q, -residues.at(plane + 1), false});
    // Layer below (one-based layer plane) carries +c_{plane}.
    if (plane >= 1)
        for (Complex q : config.nodes[plane - 1])
            form.poles.push_back({q, residues.at(plane), false});
    form.poles.push_back({Complex(0.0), config.theta_left[plane], false});
    form.poles.push_back({Complex(0.0), config.theta_right[plane], true});

    double sum = 0.0, mag = 0.0;
    for (const auto& p : form.poles) {
        sum += p.residue;
        mag = std::max(mag, std::abs(p.residue));
    }
    if (std::abs(sum) > 1e-10 * (1.0 + mag))
        throw Error(Errc::consistency_failure, "plane form residues do not sum to zero");
    return form;
}

ForceReport force(const Configuration& config, const LayerResidues& residues) {
    validate(config);
    check_cross_layer(config);
    const std::size_t L = config.layer_count();
    if (residues.padded_size() != L + 2)
        throw Error(Errc::shape_mismatch, "residue array does not match layer count");

    std::vector<std::vector<Complex>> forces(L);
    for (std::size_t l = 0; l < L; ++l) {
        const double cl = residues.at(l + 1);
        const double cup = residues.at(l + 2);
        const double cdown = residues.at(l);
        const double gap = config.left_gap(l);
        forces[l].resize(config.nodes[l].size());
        for (std::size_t k = 0; k < config.nodes[l].size(); ++k) {
            const Complex q = config.nodes[l][k];
            Complex f(cl * cl + cl * gap);
            for (std::size_t j = 0; j < config.nodes[l].size(); ++j)
                if (j != k) f += 2.0 * cl * cl * q / (q - config.nodes[l][j]);
            if (l + 1 < L)
                for (Complex r : config.nodes[l + 1]) f -= cl * cup * q / (q - r);
            if (l >= 1)
                for (Complex r : config.nodes[l - 1]) f -= cl * cdown * q / (q - r);
            forces[l][k] = f;
        }
    }
    return finalize(config, std::move(forces));
}

ForceReport force_residue_oracle(const Configuration& config, const LayerResidues& residues) {
    validate(config);
    check_cross_layer(config);
    const std::size_t L = config.layer_count();

    std::vector<PsiForm> forms;
    forms.reserve(L + 1);
    for (std::size_t p = 0; p <= L; ++p) forms.push_back(psi_form(config, residues, p));

    // The node (l,k) is a simple pole of the plane-l and plane-(l+1) forms.
    // Writing either form as a/(z-q) + h(z) near the node, the quadratic
    // residue of z*(form)^2 at q is a^2 + 2*a*q*h(q); the force is the
    // half-sum of the two contributions.
    auto contribution = [](const PsiForm& form, std::size_t pole_index) {
        const Complex q = form.poles[pole_index].position;
        const double a = form.poles[pole_index].residue;
        Complex h(0.0);
        for (std::size_t i = 0; i < form.poles.size(); ++i) {
            if (i == pole_index || form.poles[i].at_infinity) continue;
            h += form.poles[i].residue / (q - form.poles[i].position);
        }
        return 0.5 * (a * a + 2.0 * a * q * h);
    };

    std::vector<std::vector<Complex>> forces(L);
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t nl = config.nodes[l].size();
        forces[l].resize(nl);
        for (std::size_t k = 0; k < nl; ++k) {
            // In the plane-l form the layer's nodes come first; in the
            // plane-(l+1) form they follow the nodes of layer l+1.
            const std::size_t upper = (l + 1 < L) ? config.nodes[l + 1].size() : 0;
            forces[l][k] = contribution(forms[l], k) + contribution(forms[l + 1], upper + k);
        }
    }
    return finalize(config, std::move(forces));
}

ForceReport force_alt(const Configuration& config, const LayerResidues& residues,
                      ForceVariant variant) {
    validate(config);
    check_cross_layer(config);
    const std::size_t L = config.layer_count();
    if (residues.padded_size() != L + 2)
        throw Error(Errc::shape_mismatch, "residue array does not match layer count");

    std::vector<std::vector<Complex>> forces(L);
    for (std::size_t l = 0; l < L; ++l) {
        const double cl = residues.at(l + 1);
        const double cup = residues.at(l + 2);
        const double cdown = residues.at(l);
        forces[l].resize(config.nodes[l].size());
        for (std::size_t k = 0; k < config.nodes[l].size(); ++k) {
            const Complex q = config.nodes[l][k];
            Complex f(0.0);
            for (std::size_t j = 0; j < config.nodes[l].size(); ++j)
                if (j != k) f += cl * cl * (q + config.nodes[l][j]) / (q - config.nodes[l][j]);
            if (variant == ForceVariant::odd) {
                if (l + 1 < L)
                    for (Complex r : config.nodes[l + 1]) f -= cl * cup * q / (q - r);
                if (l >= 1)
                    for (Complex r : config.nodes[l - 1]) f -= cl * cdown * r / (q - r);
                f += cl * (config.theta_right[l] + config.theta_left[l + 1]);
            } else {
                if (l + 1 < L)
                    for (Complex r : config.nodes[l + 1]) f -= cl * cup * r / (q - r);
                if (l >= 1)
                    for (Complex r : config.nodes[l - 1]) f -= cl * cdown * q / (q - r);
                f -= cl * (config.theta_left[l] + config.theta_right[l + 1]);
            }
            forces[l][k] = f;
        }
    }
    return finalize(config, std::move(forces));
}

Complex layer_force_sum(const ForceReport& report, std::size_t layer) {
    if (layer >= report.forces.size())
        throw Error(Errc::shape_mismatch, "layer index out of range");
    Complex s(0.0);
    for (Complex f : report.forces[layer]) s += f;
    return s;
}

Eigen::MatrixXcd jacobian(const Configuration& config, const LayerResidues& residues) {
    validate(config);
    check_cross_layer(config);
    const std::size_t L = config.layer_count();
    if (residues.padded_size() != L + 2)
        throw Error(Errc::shape_mismatch, "residue array does not match layer count");

    const std::size_t N = config.total_nodes();
    Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(N, N);

    for (std::size_t l = 0; l < L; ++l) {
        const double cl = residues.at(l + 1);
        const double cup = residues.at(l + 2);
        const double cdown = residues.at(l);
        for (std::size_t k = 0; k < config.nodes[l].size(); ++k) {
            const Complex q = config.nodes[l][k];
            const std::size_t row = config.flat_index(l, k);
            Complex diag(0.0);
            for (std::size_t j = 0; j < config.nodes[l].size(); ++j) {
                if (j == k) continue;
                const Complex d = q - config.nodes[l][j];
                J(row, config.flat_index(l, j)) = 2.0 * cl * cl * q / (d * d);
                diag -= 2.0 * cl * cl * config.nodes[l][j] / (d * d);
            }
            if (l + 1 < L)
                for (std::size_t j = 0; j < config.nodes[l + 1].size(); ++j) {
                    const Complex r = config.nodes[l + 1][j];
                    const Complex d = q - r;
                    J(row, config.flat_index(l + 1, j)) = -cl * cup * q / (d * d);
                    diag += cl * cup * r / (d * d);
                }
            if (l >= 1)
                for (std::size_t j = 0; j < config.nodes[l - 1].size(); ++j) {
                    const Complex r = config.nodes[l - 1][j];
                    const Complex d = q - r;
                    J(row, config.flat_index(l - 1, j)) = -cl * cdown * q / (d * d);
                    diag += cl * cdown * r / (d * d);
                }
            J(row, row) = diag;
        }
    }
    return J;
}

}  // namespace catenode
