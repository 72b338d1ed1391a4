#include "catenode/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace catenode {

namespace {

const double kPi = std::acos(-1.0);

std::vector<Complex> flatten_nodes(const Configuration& config) {
    std::vector<Complex> flat;
    for (const auto& layer : config.nodes) flat.insert(flat.end(), layer.begin(), layer.end());
    return flat;
}

void unflatten_nodes(Configuration& config, const std::vector<Complex>& flat) {
    std::size_t idx = 0;
    for (auto& layer : config.nodes)
        for (auto& q : layer) q = flat[idx++];
}

/// Max |F| over all nodes and over the non-pinned nodes; infinity when the
/// evaluation itself fails (collision mid-step).
struct ResidualPair {
    double full = std::numeric_limits<double>::infinity();
    double rest = std::numeric_limits<double>::infinity();
};

ResidualPair residual_of(const Configuration& config, const LayerResidues& residues) {
    ResidualPair r;
    try {
        ForceReport report = force(config, residues);
        r.full = report.max_abs_force;
        r.rest = 0.0;
        std::size_t flat = 0;
        for (const auto& layer : report.forces)
            for (Complex f : layer) {
                if (flat++ > 0) r.rest = std::max(r.rest, std::abs(f));
            }
    } catch (const Error&) {
        // leave both at infinity: the damping loop treats this as "worse"
    }
    return r;
}

}  // namespace

BalanceResult newton_balance(const Configuration& start, const SolveOptions& options) {
    validate(start);
    LayerResidues residues = derive_residues(start);
    const double t2 = theta2(start);
    if (std::abs(t2) > options.tol)
        throw Error(Errc::theta2_nonzero, "theta2 = " + std::to_string(t2) +
                                              " exceeds the balance tolerance; no solution exists");

    BalanceResult result;
    result.config = start;
    const std::size_t N = start.total_nodes();
    if (N < 2) {
        // A single pinned node has no free unknowns; it is balanced iff its
        // force vanishes already (theta2 = 0 makes it so).
        ResidualPair r0 = residual_of(result.config, residues);
        if (r0.full > 10.0 * options.tol)
            throw ConvergenceError(Errc::no_convergence, "single node is not balanced",
                                   {r0.full});
        return result;
    }

    std::vector<Complex> q = flatten_nodes(result.config);
    std::vector<double> history;
    ResidualPair res = residual_of(result.config, residues);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        history.push_back(res.full);
        if (res.rest <= 0.5 * options.tol) {
            if (res.full > 10.0 * options.tol)
                throw ConvergenceError(Errc::no_convergence,
                                       "pinned node keeps a residual force", history);
            return result;
        }

        Eigen::MatrixXcd J = jacobian(result.config, residues);
        ForceReport report = force(result.config, residues);
        const Eigen::Index n_red = static_cast<Eigen::Index>(N) - 1;
        Eigen::MatrixXcd Jred = J.block(1, 1, n_red, n_red);
        Eigen::VectorXcd rhs(n_red);
        {
            std::size_t flat = 0;
            for (const auto& layer : report.forces)
                for (Complex f : layer) {
                    if (flat > 0) rhs(static_cast<Eigen::Index>(flat) - 1) = -f;
                    ++flat;
                }
        }
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(Jred);
        if (!lu.isInvertible())
            throw Error(Errc::singular_step, "force Jacobian is singular at the iterate");
        Eigen::VectorXcd delta = lu.solve(rhs);

        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= std::ldexp(1.0, -20)) {
            std::vector<Complex> q_next = q;
            for (Eigen::Index i = 0; i < n_red; ++i)
                q_next[static_cast<std::size_t>(i) + 1] += alpha * delta(i);
            Configuration cand = result.config;
            unflatten_nodes(cand, q_next);
            ResidualPair r_next = residual_of(cand, residues);
            if (r_next.rest < res.rest) {
                q = std::move(q_next);
                result.config = std::move(cand);
                res = r_next;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError(Errc::no_convergence,
                                   "residual stalled; no damping step decreases it", history,
                                   result.config.nodes);
        result.trace.push_back({iter + 1, res.full, alpha * delta.norm()});
    }
    history.push_back(res.full);
    throw ConvergenceError(Errc::no_convergence, "iteration limit reached", history,
                           result.config.nodes);
}

namespace {

/// Deterministic starting nodes for one multi-start attempt. Seed 0 stacks
/// rotated roots of unity on staggered radii; higher seeds widen a
/// log-uniform annulus and resample nodes that land too close.
std::vector<std::vector<Complex>> seeded_nodes(const std::vector<int>& layers, int seed) {
    const std::size_t L = layers.size();
    std::vector<std::vector<Complex>> nodes(L);
    if (seed == 0) {
        for (std::size_t l = 0; l < L; ++l) {
            const int nl = layers[l];
            const double radius =
                std::pow(1.7, static_cast<double>(l) - 0.5 * static_cast<double>(L - 1));
            const double twist = 0.37 * static_cast<double>(l + 1);
            for (int k = 0; k < nl; ++k) {
                const double phi = 2.0 * kPi * static_cast<double>(k) / nl + twist;
                nodes[l].push_back(radius * Complex(std::cos(phi), std::sin(phi)));
            }
        }
        return nodes;
    }
    std::mt19937_64 rng(0x5DEECE66DULL + 1000003ULL * static_cast<unsigned long long>(seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Alternate the radial stagger sign between consecutive seeds so symmetric
    // targets above and below the unit circle are both reachable early.
    const double stagger = (seed % 2 == 0) ? 0.5 : -0.5;
    const double spread = 0.4 + 0.15 * static_cast<double>((seed - 1) / 2 % 5);
    for (std::size_t l = 0; l < L; ++l) {
        const double center = stagger * (static_cast<double>(l) - 0.5 * (L - 1));
        for (int k = 0; k < layers[l]; ++k) {
            Complex q;
            for (int tries = 0; tries < 200; ++tries) {
                const double lr = center + spread * (2.0 * unit(rng) - 1.0);
                const double phi = 2.0 * kPi * unit(rng);
                q = std::exp(lr) * Complex(std::cos(phi), std::sin(phi));
                bool clear = true;
                for (Complex other : nodes[l])
                    if (std::abs(q - other) < 0.05) clear = false;
                if (l > 0)
                    for (Complex other : nodes[l - 1])
                        if (std::abs(q - other) < 1e-3) clear = false;
                if (clear) break;
            }
            nodes[l].push_back(q);
        }
    }
    return nodes;
}

}  // namespace

MultiStartResult balance_multistart(const std::vector<int>& layers,
                                    const std::vector<double>& theta_left,
                                    const std::vector<double>& theta_right, BalanceMethod method,
                                    int num_seeds, const SolveOptions& options) {
    if (num_seeds < 1) throw Error(Errc::bad_input, "need at least one seed");
    LayerResidues residues = derive_residues(layers, theta_left, theta_right);
    std::vector<double> gaps(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) gaps[l] = theta_left[l + 1] - theta_left[l];

    MultiStartResult best;
    best.attempted = num_seeds;
    std::vector<double> last_history;
    for (int seed = 0; seed < num_seeds; ++seed) {
        Configuration attempt;
        attempt.layers = layers;
        attempt.nodes = seeded_nodes(layers, seed);
        attempt.theta_left = theta_left;
        attempt.theta_right = theta_right;
        try {
            Configuration solved;
            if (method == BalanceMethod::newton) {
                solved = newton_balance(attempt, options).config;
            } else {
                std::vector<ComplexPolynomial> seeds_p;
                for (const auto& layer : attempt.nodes)
                    seeds_p.push_back(ComplexPolynomial::from_roots(layer));
                FpOptions fp_opt;
                fp_opt.tol = options.tol;
                fp_opt.max_iter = options.max_iter;
                std::vector<ComplexPolynomial> polys =
                    fp_solve(seeds_p, residues, gaps, fp_opt, nullptr);
                solved = config_from_polys(polys, residues, gaps);
                solved.theta_left = theta_left;   // restore the caller's gauge; forces only
                solved.theta_right = theta_right; // see the gaps, which agree
            }
            const double residual = force(solved, residues).max_abs_force;
            ++best.succeeded;
            if (best.seed < 0 || residual < best.residual) {
                best.config = solved;
                best.seed = seed;
                best.residual = residual;
            }
        } catch (const ConvergenceError& e) {
            last_history = e.residual_history;
        } catch (const Error&) {
            // degenerate seed (collision, singular step): just move on
        }
    }
    if (best.seed < 0)
        throw ConvergenceError(Errc::no_convergence,
                               "no seed converged after " + std::to_string(num_seeds) +
                                   " attempts",
                               last_history);
    return best;
}

RigidityReport rigidity(const Configuration& config, const SolveOptions& options) {
    LayerResidues residues = derive_residues(config);
    Eigen::MatrixXcd J = jacobian(config, residues);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(J);
    RigidityReport report;
    const auto& sv = svd.singularValues();
    report.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double cutoff = options.rank_rel_tol * (sv.size() > 0 ? sv(0) : 0.0);
    for (double s : report.singular_values)
        if (s > cutoff) ++report.rank;
    report.rigid = (report.rank + 1 == config.total_nodes());
    return report;
}

static EmbedReport embed_chains(const std::vector<double>& left,
                                const std::vector<double>& right) {
    EmbedReport report;
    report.embedded = true;
    for (std::size_t p = 1; p < left.size(); ++p) {
        if (!(left[p] < left[p - 1])) {
            report.left_violation = static_cast<int>(p);
            report.embedded = false;
            break;
        }
    }
    for (std::size_t p = 1; p < right.size(); ++p) {
        if (!(right[p] < right[p - 1])) {
            report.right_violation = static_cast<int>(p);
            report.embedded = false;
            break;
        }
    }
    return report;
}

EmbedReport embeddedness_check(const Configuration& config) {
    validate(config);
    return embed_chains(config.theta_left, config.theta_right);
}

bool concavity_check(const std::vector<int>& layers, const LayerResidues& residues) {
    const std::size_t L = layers.size();
    if (residues.padded_size() != L + 2)
        throw Error(Errc::shape_mismatch, "residues not padded to layer count + 2");
    auto flux = [&](std::size_t padded) {
        if (padded == 0 || padded == L + 1) return 0.0;
        return static_cast<double>(layers[padded - 1]) * residues.at(padded);
    };
    for (std::size_t l = 1; l <= L; ++l)
        if (!(2.0 * flux(l) > flux(l - 1) + flux(l + 1))) return false;
    return true;
}

Configuration genus0_solve(const std::vector<double>& theta_left,
                           const std::vector<double>& theta_right) {
    if (theta_left.size() != theta_right.size() || theta_left.size() < 2)
        throw Error(Errc::shape_mismatch, "theta_dot arrays must have one entry per plane");
    const std::size_t L = theta_left.size() - 1;
    std::vector<int> layers(L, 1);

    double scale = 1.0;
    for (std::size_t p = 0; p <= L; ++p)
        scale = std::max({scale, std::abs(theta_left[p]), std::abs(theta_right[p])});
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t p = 0; p <= L; ++p) {
        t1 += theta_left[p] + theta_right[p];
        t2 += 0.5 * (theta_right[p] * theta_right[p] - theta_left[p] * theta_left[p]);
    }
    if (std::abs(t1) > 1e-10 * scale)
        throw Error(Errc::theta1_nonzero, "end speeds do not sum to zero");
    if (std::abs(t2) > 1e-10 * scale * scale)
        throw Error(Errc::theta2_nonzero, "theta2 does not vanish; no balanced positions exist");

    LayerResidues residues = derive_residues(layers, theta_left, theta_right);
    for (std::size_t l = 1; l <= L; ++l)
        if (std::abs(residues.at(l)) <= 1e-12 * scale)
            throw Error(Errc::degenerate_qtilde,
                        "vanishing residue collapses the product recurrence");

    Configuration config;
    config.layers = layers;
    config.theta_left = theta_left;
    config.theta_right = theta_right;
    config.nodes.assign(L, {});
    config.nodes[0] = {Complex(1.0)};
    double qtilde = 0.0;
    for (std::size_t l = 1; l < L; ++l) {
        // Partial sums Q~_l = sum_{i<=l} c_i (left_{i+1} + right_i), the
        // telescoped interaction of node l with everything below it.
        qtilde += residues.at(l) * (theta_left[l] + theta_right[l - 1]);
        if (std::abs(qtilde) <= 1e-12 * scale * scale)
            throw Error(Errc::degenerate_qtilde, "vanishing partial sum in the recurrence");
        const double factor = 1.0 - residues.at(l + 1) * residues.at(l) / qtilde;
        config.nodes[l] = {config.nodes[l - 1][0] * factor};
    }

    validate(config);
    ForceReport report = force(config, residues);
    if (report.max_abs_force > 1e-10 * scale * scale)
        throw Error(Errc::consistency_failure, "recurrence positions fail the balance check");
    return config;
}

Configuration concatenate(const std::vector<Configuration>& blocks, bool tail) {
    const std::size_t R = blocks.size();
    if (R == 0) throw Error(Errc::bad_input, "no blocks to concatenate");

    struct BlockData {
        std::vector<Complex> middle;  // nodes of the wide layer, block scale
        Complex q3{0.0};              // top node (absent for the tail cap)
        double c1_hat = 0.0, c3_hat = 0.0;
        double x_hat = 0.0;  // interaction of the bottom node with the middle
        double y_hat = 0.0;  // interaction of the top node with the middle
        double g2_hat = 0.0; // middle gap per unit of flux
        bool has_top = false;
    };

    std::vector<BlockData> data(R);
    for (std::size_t r = 0; r < R; ++r) {
        const Configuration& block = blocks[r];
        const bool is_cap = tail && r + 1 == R;
        validate(block);
        const std::size_t Lb = block.layer_count();
        if ((is_cap && (Lb != 2 || block.layers[0] != 1)) ||
            (!is_cap && (Lb != 3 || block.layers[0] != 1 || block.layers[2] != 1)))
            throw Error(Errc::bad_input, "block " + std::to_string(r + 1) +
                                             " is not a single/wide/single stack");
        if (std::abs(block.nodes[0][0] - Complex(1.0)) > 1e-12)
            throw Error(Errc::block_not_normalized,
                        "block " + std::to_string(r + 1) + " bottom node is not at 1");

        LayerResidues rb = derive_residues(block);
        double maxc = 0.0;
        for (double c : rb.c) maxc = std::max(maxc, std::abs(c));
        ForceReport report = force(block, rb);
        if (report.max_abs_force >
            1e-9 * (1.0 + maxc * maxc * static_cast<double>(block.total_nodes())))
            throw Error(Errc::block_not_balanced,
                        "block " + std::to_string(r + 1) + " carries residual forces");

        const double c2b = rb.at(2);
        if (std::abs(rb.at(1)) <= 1e-12 || std::abs(c2b) <= 1e-12)
            throw Error(Errc::bad_input,
                        "block " + std::to_string(r + 1) + " has a vanishing residue");
        BlockData& d = data[r];
        d.middle = block.nodes[1];
        d.c1_hat = rb.at(1) / c2b;
        d.x_hat = (block.left_gap(0) + rb.at(1)) / c2b;
        d.g2_hat = block.left_gap(1) / c2b;
        if (!is_cap) {
            d.has_top = true;
            d.q3 = block.nodes[2][0];
            d.c3_hat = rb.at(3) / c2b;
            d.y_hat = (block.left_gap(2) + rb.at(3)) / c2b;
        }
    }

    Configuration out;
    for (std::size_t r = 0; r < R; ++r) {
        out.layers.push_back(1);
        out.layers.push_back(static_cast<int>(data[r].middle.size()));
    }
    if (!tail) out.layers.push_back(1);
    const std::size_t Lg = out.layers.size();

    LayerResidues residues;
    residues.c.assign(Lg + 2, 0.0);
    residues.c[1] = data[0].c1_hat;
    for (std::size_t r = 0; r < R; ++r) {
        residues.c[2 * r + 2] = residues.c[2 * r + 1] / data[r].c1_hat;
        if (data[r].has_top) residues.c[2 * r + 3] = residues.c[2 * r + 2] * data[r].c3_hat;
    }

    Complex anchor(1.0);
    for (std::size_t r = 0; r < R; ++r) {
        out.nodes.push_back({anchor});
        std::vector<Complex> scaled;
        for (Complex q : data[r].middle) scaled.push_back(anchor * q);
        out.nodes.push_back(std::move(scaled));
        if (data[r].has_top) anchor *= data[r].q3;
    }
    if (!tail) out.nodes.push_back({anchor});

    std::vector<double> gaps(Lg, 0.0);
    for (std::size_t r = 0; r <= R; ++r) {
        if (tail && r == R) break;          // no single layer above the cap
        double gap = -residues.c[2 * r + 1];
        if (r < R) gap += residues.c[2 * r + 2] * data[r].x_hat;
        if (r > 0) gap += residues.c[2 * r] * data[r - 1].y_hat;
        gaps[2 * r] = gap;
        if (r < R) gaps[2 * r + 1] = residues.c[2 * r + 2] * data[r].g2_hat;
    }

    complete_end_speeds(out.layers, residues, gaps, out.theta_left, out.theta_right);
    validate(out);
    double maxc = 0.0;
    for (double c : residues.c) maxc = std::max(maxc, std::abs(c));
    ForceReport report = force(out, residues);
    if (report.max_abs_force >
        1e-9 * (1.0 + maxc * maxc * static_cast<double>(out.total_nodes())))
        throw Error(Errc::consistency_failure, "concatenated tower fails the balance check");
    return out;
}

Configuration glue_config(int n1, int n2, double lambda, double phi) {
    if (n1 < 1 || n2 < 1) throw Error(Errc::bad_input, "ring sizes must be positive");
    if (lambda <= 0.0) throw Error(Errc::bad_input, "ring radius must be positive");
    const int n = n1 + n2;
    Configuration config = four_end_config(n);
    config.nodes[0].clear();
    for (int k = 0; k < n1; ++k) {
        const double a = 2.0 * kPi * static_cast<double>(k) / n1;
        config.nodes[0].push_back(Complex(std::cos(a), std::sin(a)));
    }
    for (int k = 0; k < n2; ++k) {
        const double a = phi + 2.0 * kPi * static_cast<double>(k) / n2;
        config.nodes[0].push_back(lambda * Complex(std::cos(a), std::sin(a)));
    }
    validate(config);
    return config;
}

Complex glue_second_ring_force(int n1, int n2, double lambda, double phi) {
    Configuration config = glue_config(n1, n2, lambda, phi);
    LayerResidues residues = derive_residues(config);
    ForceReport report = force(config, residues);
    Complex sum(0.0);
    for (int k = n1; k < n1 + n2; ++k) sum += report.forces[0][static_cast<std::size_t>(k)];
    return sum;
}

PhaseScan glue_phase_scan(int n1, int n2, double lambda, int grid_points) {
    if (grid_points < 2) throw Error(Errc::bad_input, "need at least two grid points");
    PhaseScan scan;
    scan.phi.reserve(static_cast<std::size_t>(grid_points));
    scan.im_g2.reserve(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) {
        const double phi = kPi * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        scan.phi.push_back(phi);
        scan.im_g2.push_back(glue_second_ring_force(n1, n2, lambda, phi).imag());
    }
    double scale = 0.0;
    for (double v : scan.im_g2) scale = std::max(scale, std::abs(v));
    const double snap = 1e-12 * (1.0 + scale);
    for (int i = 0; i < grid_points; ++i) {
        const double v = scan.im_g2[static_cast<std::size_t>(i)];
        if (std::abs(v) <= snap) {
            if (scan.zeros.empty() ||
                scan.phi[static_cast<std::size_t>(i)] - scan.zeros.back() > 1e-9)
                scan.zeros.push_back(scan.phi[static_cast<std::size_t>(i)]);
            continue;
        }
        if (i == 0) continue;
        const double prev = scan.im_g2[static_cast<std::size_t>(i) - 1];
        if (std::abs(prev) <= snap || (prev < 0.0) == (v < 0.0)) continue;
        const double p0 = scan.phi[static_cast<std::size_t>(i) - 1];
        const double p1 = scan.phi[static_cast<std::size_t>(i)];
        scan.zeros.push_back(p0 + (p1 - p0) * (-prev) / (v - prev));
    }
    return scan;
}

}  // namespace catenode
