#include "catenode/polynomial_method.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "catenode/forces.hpp"

namespace catenode {

namespace {

bool near_nonpositive_integer(double x, double lower_bound) {
    double r = std::round(x);
    return std::abs(x - r) <= 1e-12 && r <= 0.0 && r >= lower_bound;
}

/// Residual tolerance for the post-construction balance check of the
/// closed-form builders, scaled by the interaction magnitude.
double builder_force_tol(const LayerResidues& residues, std::size_t total_nodes) {
    double maxc = 0.0;
    for (double c : residues.c) maxc = std::max(maxc, std::abs(c));
    return 1e-9 * (1.0 + maxc * maxc * static_cast<double>(total_nodes));
}

void check_built_balance(const Configuration& config, const LayerResidues& residues,
                         const char* builder) {
    ForceReport report = force(config, residues);
    double tol = builder_force_tol(residues, config.total_nodes());
    if (report.max_abs_force > tol) {
        std::ostringstream os;
        os << builder << ": construction left a residual force " << report.max_abs_force
           << " above " << tol;
        throw Error(Errc::consistency_failure, os.str());
    }
}

constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

ComplexPolynomial prod_except(const std::vector<ComplexPolynomial>& polys, std::size_t skip_a,
                              std::size_t skip_b, std::size_t skip_c = kNoSkip) {
    ComplexPolynomial prod = ComplexPolynomial::constant(Complex(1.0));
    for (std::size_t m = 0; m < polys.size(); ++m) {
        if (m == skip_a || m == skip_b || m == skip_c) continue;
        prod = prod * polys[m];
    }
    return prod;
}

void check_fp_shapes(const std::vector<ComplexPolynomial>& polys, const LayerResidues& residues,
                     const std::vector<double>& gaps) {
    std::size_t L = polys.size();
    if (L == 0) throw Error(Errc::bad_input, "no layer polynomials");
    if (residues.padded_size() != L + 2)
        throw Error(Errc::shape_mismatch, "residues not padded to layer count + 2");
    if (gaps.size() != L) throw Error(Errc::shape_mismatch, "need one end speed gap per layer");
    for (const auto& p : polys) {
        if (p.degree() == 0) throw Error(Errc::bad_input, "layer polynomial of degree zero");
        if (std::abs(p.leading() - Complex(1.0)) > 1e-12)
            throw Error(Errc::bad_input, "layer polynomials must be monic");
    }
}

/// The three balance-map terms of one layer. `upper` is empty when l is the
/// top layer. All inputs monic; the caller supplies the products over the
/// complementary layers.
ComplexPolynomial fp_layer_terms(const ComplexPolynomial& P, const ComplexPolynomial& others,
                                 const ComplexPolynomial& upper_prime,
                                 const ComplexPolynomial& others_no_upper, double cl, double cup,
                                 double gap, double* scale) {
    const ComplexPolynomial z = ComplexPolynomial::identity();
    ComplexPolynomial t1 = z * P.derivative().derivative() * others * Complex(cl * cl);
    ComplexPolynomial t2 = P.derivative() * others * Complex(cl * cl + cl * gap);
    ComplexPolynomial sum = t1 + t2;
    if (scale) *scale = std::max({*scale, t1.max_coeff(), t2.max_coeff()});
    if (cup != 0.0) {
        ComplexPolynomial t3 =
            z * P.derivative() * upper_prime * others_no_upper * Complex(-cl * cup);
        if (scale) *scale = std::max(*scale, t3.max_coeff());
        sum = sum + t3;
    }
    return sum;
}

ComplexPolynomial fp_assemble(const std::vector<ComplexPolynomial>& polys,
                              const LayerResidues& residues, const std::vector<double>& gaps,
                              double* scale) {
    std::size_t L = polys.size();
    ComplexPolynomial total;
    for (std::size_t l = 0; l < L; ++l) {
        double cl = residues.at(l + 1);
        double cup = residues.at(l + 2);
        ComplexPolynomial others = prod_except(polys, l, kNoSkip);
        ComplexPolynomial upper_prime, others_no_upper;
        if (l + 1 < L && cup != 0.0) {
            upper_prime = polys[l + 1].derivative();
            others_no_upper = prod_except(polys, l, l + 1);
        } else {
            cup = 0.0;
        }
        total = total + fp_layer_terms(polys[l], others, upper_prime, others_no_upper, cl, cup,
                                       gaps[l], scale);
    }
    return total;
}

std::string format_complex(Complex z) {
    std::ostringstream os;
    os << "(" << z.real() << ", " << z.imag() << ")";
    return os.str();
}

}  // namespace

Configuration four_end_config(int n, double rotation) {
    if (n < 1) throw Error(Errc::bad_input, "need at least one node");
    Configuration config;
    config.layers = {n};
    config.nodes.resize(1);
    const double pi = std::acos(-1.0);
    for (int k = 0; k < n; ++k) {
        double phi = 2.0 * pi * static_cast<double>(k) / static_cast<double>(n);
        config.nodes[0].push_back(Complex(std::cos(phi), std::sin(phi)));
    }
    double t = 0.5 * static_cast<double>(n) + rotation;
    config.theta_left = {t, t - static_cast<double>(n)};
    config.theta_right = {static_cast<double>(n) - t, -t};
    return config;
}

ComplexPolynomial hypergeometric_poly(int n, double b, double c) {
    if (n < 1) throw Error(Errc::bad_input, "degree must be positive");
    if (near_nonpositive_integer(c, -1e18))
        throw Error(Errc::bad_c, "c is a nonpositive integer; series coefficients divide by zero");
    if (near_nonpositive_integer(b, -static_cast<double>(n - 1)))
        throw Error(Errc::degenerate_degree, "b kills the degree-n coefficient");
    std::vector<Complex> coeffs(static_cast<std::size_t>(n) + 1);
    double a = 1.0;
    coeffs[0] = Complex(1.0);
    for (int k = 0; k < n; ++k) {
        double dk = static_cast<double>(k);
        a *= -(static_cast<double>(n) - dk) / (dk + 1.0) * (b + dk) / (c + dk);
        coeffs[static_cast<std::size_t>(k) + 1] = Complex(a);
    }
    return ComplexPolynomial(coeffs);
}

bool hypergeom_rigidity_recurrence(int n, double b, double c) {
    double lower = -static_cast<double>(n - 1);
    return !near_nonpositive_integer(b, lower) && !near_nonpositive_integer(c, lower);
}

Configuration n1_config(int n, double b, double c) {
    double c2 = static_cast<double>(n) - 1.0 - b + c;
    if (std::abs(c2) <= 1e-12)
        throw Error(Errc::zero_c2, "second layer residue vanishes for these parameters");
    ComplexPolynomial P = hypergeometric_poly(n, b, c);
    // A multiple root at the puncture scatters the computed roots by far more
    // than the coincidence tolerance, so test the polynomial value directly.
    if (std::abs(P.eval(Complex(1.0))) <= 1e-10 * P.max_coeff())
        throw Error(Errc::root_at_puncture, "series polynomial vanishes at the upper node");
    std::vector<Complex> roots = poly_roots(P);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        double local = 1e-10 * (1.0 + std::abs(roots[i]));
        if (std::abs(roots[i]) <= local || std::abs(roots[i] - Complex(1.0)) <= local)
            throw Error(Errc::root_at_puncture, "polynomial root hits a puncture");
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) <= local)
                throw Error(Errc::non_simple_roots, "polynomial has a repeated root");
    }

    Configuration config;
    config.layers = {n, 1};
    config.nodes = {roots, {Complex(1.0)}};
    LayerResidues residues{{0.0, 1.0, c2, 0.0}};
    std::vector<double> gaps = {c - 1.0,
                                -static_cast<double>(n) * b / c2 - c2};
    complete_end_speeds(config.layers, residues, gaps, config.theta_left, config.theta_right);
    check_built_balance(config, residues, "n1_config");
    return config;
}

N1EmbedFlags n1_embeddedness_flags(int n, double b, double c) {
    double dn = static_cast<double>(n);
    double c2 = dn - 1.0 - b + c;
    N1EmbedFlags flags;
    flags.c_below_one = c < 1.0;
    flags.b_above_minus_n = b > -dn;
    flags.c2sq_above_minus_nb = c2 * c2 > -dn * b;
    flags.c2sq_above_n_c2_plus_b = c2 * c2 > dn * (c2 + b);
    return flags;
}

void check_lame_invariants(const LameData& data) {
    std::size_t m = data.punctures.size();
    if (data.prime_coeffs.size() != m || data.gammas.size() != m)
        throw Error(Errc::shape_mismatch, "puncture, coefficient and residue counts differ");
    if (data.degree < 1) throw Error(Errc::bad_input, "operator degree must be positive");
    for (Complex s : data.punctures)
        if (std::abs(s) <= kNodeCoincidenceTol)
            throw Error(Errc::bad_input, "outer puncture at the origin");

    Complex gamma_sum = data.gamma0;
    Complex moment(0.0);
    double prime_sum = data.c0_prime;
    double scale = std::abs(data.gamma0) + std::abs(data.c0_prime) + 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        gamma_sum += data.gammas[i];
        moment += data.gammas[i] * data.punctures[i];
        prime_sum += data.prime_coeffs[i];
        scale += std::abs(data.gammas[i]) * (1.0 + std::abs(data.punctures[i])) +
                 std::abs(data.prime_coeffs[i]);
    }
    double nb = static_cast<double>(data.degree) * data.b;
    double index = 1.0 - static_cast<double>(data.degree) + data.b;
    const double tol = 1e-10;
    if (std::abs(gamma_sum) > tol * scale)
        throw Error(Errc::invariant_violation, "accessory residues do not sum to zero");
    if (std::abs(moment + nb) > tol * (scale + std::abs(nb)))
        throw Error(Errc::invariant_violation, "accessory first moment differs from -n*b");
    if (std::abs(prime_sum - index) > tol * (scale + std::abs(index)))
        throw Error(Errc::invariant_violation, "log derivative coefficients break the index relation");
}

ComplexPolynomial lame_operator_residual(const ComplexPolynomial& P, const LameData& data) {
    check_lame_invariants(data);
    const ComplexPolynomial z = ComplexPolynomial::identity();
    std::size_t m = data.punctures.size();

    // outer = prod (z - s_i); partial[i] = z * prod_{j != i} (z - s_j)
    ComplexPolynomial outer = ComplexPolynomial::constant(Complex(1.0));
    for (Complex s : data.punctures) outer = outer * ComplexPolynomial({-s, Complex(1.0)});

    ComplexPolynomial B = outer * Complex(data.c0_prime);
    ComplexPolynomial C = outer * data.gamma0;
    for (std::size_t i = 0; i < m; ++i) {
        ComplexPolynomial partial = z;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            partial = partial * ComplexPolynomial({-data.punctures[j], Complex(1.0)});
        }
        B = B + partial * Complex(data.prime_coeffs[i]);
        C = C + partial * data.gammas[i];
    }
    ComplexPolynomial A = z * outer;
    return (A * P.derivative().derivative() + B * P.derivative() + C * P).trimmed();
}

HeunResult heun_polynomials(int n, double s1, double s2, double c1, double c3, double b) {
    if (n < 1) throw Error(Errc::bad_input, "degree must be positive");
    if (std::abs(s1) <= kNodeCoincidenceTol || std::abs(s2) <= kNodeCoincidenceTol)
        throw Error(Errc::bad_input, "outer puncture at the origin");
    double c0 = 1.0 - static_cast<double>(n) + b + c1 + c3;
    double nb = static_cast<double>(n) * b;
    double kappa = s1 * (s1 - s2);
    bool kernel_mode = std::abs(kappa) <= 1e-12 * (1.0 + std::abs(s1) * (std::abs(s1) + std::abs(s2)));

    // Cleared operator with the accessory direction removed:
    //   L0[P] = z(z-s1)(z-s2) P'' + (c0 (z-s1)(z-s2) - c1 z(z-s2) - c3 z(z-s1)) P'
    //           - n b (z-s1) P,
    // and the accessory scalar enters as + t * s1(s1-s2) * P. On monic degree
    // n polynomials the z^{n+1} output coefficient cancels through the index
    // relation, so L0 restricted to degree <= n is square and t is read off
    // an eigenpair: L0 V = lambda V with t = -lambda / kappa.
    const ComplexPolynomial z = ComplexPolynomial::identity();
    ComplexPolynomial f1({Complex(-s1), Complex(1.0)});
    ComplexPolynomial f2({Complex(-s2), Complex(1.0)});
    ComplexPolynomial A = z * f1 * f2;
    ComplexPolynomial B = f1 * f2 * Complex(c0) + z * f2 * Complex(-c1) + z * f1 * Complex(-c3);
    ComplexPolynomial C0 = f1 * Complex(-nb);

    std::size_t dim = static_cast<std::size_t>(n) + 1;
    Eigen::MatrixXd L0 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                               static_cast<Eigen::Index>(dim));
    double basis_scale = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        std::vector<Complex> mono(k + 1, Complex(0.0));
        mono[k] = Complex(1.0);
        ComplexPolynomial zk(mono);
        ComplexPolynomial image =
            A * zk.derivative().derivative() + B * zk.derivative() + C0 * zk;
        basis_scale = std::max(basis_scale, image.max_coeff());
        const auto& ic = image.coeffs();
        for (std::size_t r = 0; r < ic.size(); ++r) {
            if (r < dim) {
                L0(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = ic[r].real();
            } else if (std::abs(ic[r]) > 1e-10 * (1.0 + basis_scale)) {
                throw Error(Errc::invariant_violation,
                            "operator leaks above degree n; index relation broken");
            }
        }
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(L0);
    if (es.info() != Eigen::Success)
        throw Error(Errc::no_convergence, "eigenvalue iteration failed");

    struct Candidate {
        Complex lambda;
        Eigen::VectorXcd vec;
    };
    std::vector<Candidate> candidates;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        candidates.push_back({es.eigenvalues()(i), es.eigenvectors().col(i)});
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b2) {
        if (a.lambda.real() != b2.lambda.real()) return a.lambda.real() < b2.lambda.real();
        return a.lambda.imag() < b2.lambda.imag();
    });

    HeunResult result;
    double op_scale = 1.0 + L0.cwiseAbs().maxCoeff();
    for (const Candidate& cand : candidates) {
        std::string tag = "eigenvalue " + format_complex(cand.lambda);
        if (kernel_mode && std::abs(cand.lambda) > 1e-8 * op_scale) {
            result.rejected.push_back(tag + ": accessory direction degenerate, not a kernel vector");
            continue;
        }
        double vmax = cand.vec.cwiseAbs().maxCoeff();
        Complex lead = cand.vec(static_cast<Eigen::Index>(n));
        if (std::abs(lead) <= 1e-8 * vmax) {
            result.rejected.push_back(tag + ": leading coefficient vanishes (degree drop)");
            continue;
        }
        std::vector<Complex> coeffs(dim);
        for (std::size_t k = 0; k < dim; ++k)
            coeffs[k] = cand.vec(static_cast<Eigen::Index>(k)) / lead;
        coeffs[dim - 1] = Complex(1.0);
        ComplexPolynomial P(coeffs);

        std::vector<Complex> roots = poly_roots(P);
        bool clean = true;
        for (std::size_t i = 0; i < roots.size() && clean; ++i) {
            double local = 1e-8 * (1.0 + std::abs(roots[i]));
            if (std::abs(roots[i]) <= local || std::abs(roots[i] - Complex(s1)) <= local ||
                std::abs(roots[i] - Complex(s2)) <= local) {
                result.rejected.push_back(tag + ": root at a puncture");
                clean = false;
            }
            for (std::size_t j = i + 1; j < roots.size() && clean; ++j)
                if (std::abs(roots[i] - roots[j]) <= local) {
                    result.rejected.push_back(tag + ": repeated root");
                    clean = false;
                }
        }
        if (!clean) continue;

        bool duplicate = false;
        for (const HeunSolution& sol : result.solutions) {
            const auto& pc = sol.poly.coeffs();
            double dist = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dist = std::max(dist, std::abs(pc[k] - coeffs[k]));
            if (dist <= 1e-8 * (1.0 + P.max_coeff())) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) {
            result.rejected.push_back(tag + ": duplicate of an accepted solution");
            continue;
        }

        Complex t = kernel_mode ? Complex(0.0) : -cand.lambda / kappa;
        LameData data;
        data.degree = n;
        data.c0_prime = c0;
        data.punctures = {Complex(s1), Complex(s2)};
        data.prime_coeffs = {-c1, -c3};
        data.b = b;
        Complex g1 = t;
        Complex g3 = (Complex(-nb) - t * s1) / s2;
        data.gammas = {g1, g3};
        data.gamma0 = -g1 - g3;

        ComplexPolynomial residual = lame_operator_residual(P, data);
        if (residual.max_coeff() > 1e-7 * op_scale * (1.0 + P.max_coeff()))
            throw Error(Errc::consistency_failure,
                        "eigenpair does not satisfy the operator it came from");

        result.solutions.push_back({P, data, cand.lambda});
    }
    return result;
}

Configuration one_n_one_config(const ComplexPolynomial& P, double q3, double c1, double c3,
                               double b) {
    int n = static_cast<int>(P.degree());
    if (n < 1) throw Error(Errc::bad_input, "middle polynomial must have positive degree");
    if (std::abs(q3) <= kNodeCoincidenceTol)
        throw Error(Errc::bad_input, "outer node at the origin");
    double c0 = 1.0 - static_cast<double>(n) + b + c1 + c3;
    // Direct value test: a multiple root sitting on a puncture evades the
    // root-distance tolerance below.
    if (std::abs(P.eval(Complex(1.0))) <= 1e-10 * P.max_coeff() ||
        std::abs(P.eval(Complex(q3))) <= 1e-10 * P.max_coeff())
        throw Error(Errc::root_at_puncture, "middle polynomial vanishes at an outer node");

    std::vector<Complex> roots = poly_roots(P);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        double local = 1e-10 * (1.0 + std::abs(roots[i]));
        if (std::abs(roots[i]) <= local || std::abs(roots[i] - Complex(1.0)) <= local ||
            std::abs(roots[i] - Complex(q3)) <= local)
            throw Error(Errc::root_at_puncture, "polynomial root hits a puncture");
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) <= local)
                throw Error(Errc::non_simple_roots, "polynomial has a repeated root");
    }

    Complex p1 = P.eval(Complex(1.0));
    Complex p3 = P.eval(Complex(q3));
    Complex d1 = P.derivative().eval(Complex(1.0));
    Complex d3 = P.derivative().eval(Complex(q3));
    Complex log1 = d1 / p1;
    Complex log3 = Complex(q3) * d3 / p3;
    if (std::abs(log1.imag()) > 1e-9 * (1.0 + std::abs(log1)) ||
        std::abs(log3.imag()) > 1e-9 * (1.0 + std::abs(log3)))
        throw Error(Errc::bad_input, "end speed gaps would be complex for this polynomial");

    Configuration config;
    config.layers = {1, n, 1};
    config.nodes = {{Complex(1.0)}, roots, {Complex(q3)}};
    LayerResidues residues{{0.0, c1, 1.0, c3, 0.0}};
    std::vector<double> gaps = {log1.real() - c1, c0 - 1.0, log3.real() - c3};
    complete_end_speeds(config.layers, residues, gaps, config.theta_left, config.theta_right);
    check_built_balance(config, residues, "one_n_one_config");
    return config;
}

Configuration config_from_polys(const std::vector<ComplexPolynomial>& polys,
                                const LayerResidues& residues, const std::vector<double>& gaps) {
    check_fp_shapes(polys, residues, gaps);
    Configuration config;
    for (const auto& p : polys) {
        config.layers.push_back(static_cast<int>(p.degree()));
        config.nodes.push_back(poly_roots(p));
    }
    complete_end_speeds(config.layers, residues, gaps, config.theta_left, config.theta_right);
    validate(config);
    return config;
}

ComplexPolynomial fp_residual(const std::vector<ComplexPolynomial>& polys,
                              const LayerResidues& residues, const std::vector<double>& gaps) {
    check_fp_shapes(polys, residues, gaps);
    std::size_t L = polys.size();

    // Simple roots within a layer, disjoint roots across adjacent layers.
    std::vector<std::vector<Complex>> roots(L);
    for (std::size_t l = 0; l < L; ++l) roots[l] = poly_roots(polys[l]);
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t i = 0; i < roots[l].size(); ++i) {
            double local = 1e-10 * (1.0 + std::abs(roots[l][i]));
            for (std::size_t j = i + 1; j < roots[l].size(); ++j)
                if (std::abs(roots[l][i] - roots[l][j]) <= local)
                    throw Error(Errc::non_simple_roots, "repeated root within a layer");
            if (l + 1 < L)
                for (Complex r : roots[l + 1])
                    if (std::abs(roots[l][i] - r) <= local)
                        throw Error(Errc::shared_roots, "adjacent layers share a root");
        }
    }

    // Assemble through the full product and checked exact divisions.
    ComplexPolynomial P = ComplexPolynomial::constant(Complex(1.0));
    for (const auto& p : polys) P = P * p;
    double div_scale = P.max_coeff();
    const ComplexPolynomial z = ComplexPolynomial::identity();
    ComplexPolynomial total;
    for (std::size_t l = 0; l < L; ++l) {
        double cl = residues.at(l + 1);
        double cup = residues.at(l + 2);
        auto own = P.divrem(polys[l]);
        if (own.remainder.max_coeff() > 1e-10 * div_scale)
            throw Error(Errc::inexact_division, "full product not divisible by a layer factor");
        ComplexPolynomial others = own.quotient;
        total = total + z * polys[l].derivative().derivative() * others * Complex(cl * cl);
        total = total + polys[l].derivative() * others * Complex(cl * cl + cl * gaps[l]);
        if (l + 1 < L && cup != 0.0) {
            auto cross = others.divrem(polys[l + 1]);
            if (cross.remainder.max_coeff() > 1e-10 * div_scale)
                throw Error(Errc::inexact_division, "cofactor not divisible by the layer above");
            total = total + z * polys[l].derivative() * polys[l + 1].derivative() *
                                cross.quotient * Complex(-cl * cup);
        }
    }
    return total.trimmed();
}

double fp_term_scale(const std::vector<ComplexPolynomial>& polys, const LayerResidues& residues,
                     const std::vector<double>& gaps) {
    check_fp_shapes(polys, residues, gaps);
    double scale = 0.0;
    fp_assemble(polys, residues, gaps, &scale);
    return std::max(scale, 1e-300);
}

std::vector<ComplexPolynomial> fp_solve(const std::vector<ComplexPolynomial>& seeds,
                                        const LayerResidues& residues,
                                        const std::vector<double>& gaps, const FpOptions& options,
                                        std::vector<SolveTraceEntry>* trace) {
    check_fp_shapes(seeds, residues, gaps);
    std::size_t L = seeds.size();
    std::size_t N = 0;
    for (const auto& p : seeds) N += p.degree();
    if (std::abs(seeds[0].coeffs()[0]) <= 1e-14)
        throw Error(Errc::bad_input, "first polynomial has a root at the origin; cannot pin scale");

    // Unknowns: all non-leading coefficients except the constant coefficient
    // of the first polynomial, which pins the scaling gauge. Equations: the
    // residual coefficients below degree N-1 (the top one is the constant
    // theta2 and carries no unknown dependence).
    struct UnknownRef {
        std::size_t layer;
        std::size_t power;
    };
    std::vector<UnknownRef> unknowns;
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t j = (l == 0 ? 1u : 0u); j < seeds[l].degree(); ++j)
            unknowns.push_back({l, j});
    if (unknowns.size() != N - 1)
        throw Error(Errc::shape_mismatch, "unknown count mismatch");

    std::vector<ComplexPolynomial> polys = seeds;
    std::vector<double> history;
    auto full_residual = [&](const std::vector<ComplexPolynomial>& ps, double* scale) {
        double s = 0.0;
        ComplexPolynomial r = fp_assemble(ps, residues, gaps, &s);
        if (scale) *scale = std::max(s, 1e-300);
        return r;
    };
    auto residual_norm = [&](const ComplexPolynomial& r) {
        double m = 0.0;
        for (Complex a : r.coeffs()) m = std::max(m, std::abs(a));
        return m;
    };

    const std::size_t rows = N - 1;
    const ComplexPolynomial z = ComplexPolynomial::identity();
    double scale = 1.0;
    ComplexPolynomial r = full_residual(polys, &scale);
    double res = residual_norm(r);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        history.push_back(res / scale);
        if (res <= options.tol * scale) {
            if (trace && iter == 0) trace->push_back({0, res / scale, 0.0});
            // Reject pseudo-solutions whose root sets degenerated on the way.
            fp_residual(polys, residues, gaps);
            return polys;
        }

        Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows),
                                                    static_cast<Eigen::Index>(unknowns.size()));
        for (std::size_t u = 0; u < unknowns.size(); ++u) {
            std::size_t m = unknowns[u].layer;
            std::size_t j = unknowns[u].power;
            ComplexPolynomial col;
            for (std::size_t l = 0; l < L; ++l) {
                double cl = residues.at(l + 1);
                double cup = (l + 1 < L) ? residues.at(l + 2) : 0.0;
                double gl = gaps[l];
                // d/dp_{m,j} of the three terms of layer l.
                std::vector<Complex> mono(j + 1, Complex(0.0));
                mono[j] = Complex(1.0);
                ComplexPolynomial zj(mono);
                if (l == m) {
                    if (j >= 2) {
                        ComplexPolynomial d2 = zj.derivative().derivative();
                        col = col + z * d2 * prod_except(polys, l, kNoSkip) * Complex(cl * cl);
                    }
                    if (j >= 1) {
                        ComplexPolynomial d1 = zj.derivative();
                        col = col + d1 * prod_except(polys, l, kNoSkip) *
                                        Complex(cl * cl + cl * gl);
                        if (cup != 0.0)
                            col = col + z * d1 * polys[l + 1].derivative() *
                                            prod_except(polys, l, l + 1) * Complex(-cl * cup);
                    }
                } else {
                    col = col + z * polys[l].derivative().derivative() *
                                    prod_except(polys, l, m) * zj * Complex(cl * cl);
                    col = col + polys[l].derivative() * prod_except(polys, l, m) * zj *
                                    Complex(cl * cl + cl * gl);
                    if (cup != 0.0) {
                        if (m == l + 1) {
                            if (j >= 1)
                                col = col + z * polys[l].derivative() * zj.derivative() *
                                                prod_except(polys, l, l + 1) * Complex(-cl * cup);
                        } else {
                            col = col + z * polys[l].derivative() * polys[l + 1].derivative() *
                                            prod_except(polys, l, l + 1, m) * zj *
                                            Complex(-cl * cup);
                        }
                    }
                }
            }
            const auto& cc = col.coeffs();
            for (std::size_t rrow = 0; rrow < rows; ++rrow)
                J(static_cast<Eigen::Index>(rrow), static_cast<Eigen::Index>(u)) =
                    rrow < cc.size() ? cc[rrow] : Complex(0.0);
        }

        Eigen::VectorXcd rhs(static_cast<Eigen::Index>(rows));
        const auto& rc = r.coeffs();
        for (std::size_t i = 0; i < rows; ++i)
            rhs(static_cast<Eigen::Index>(i)) = -(i < rc.size() ? rc[i] : Complex(0.0));

        Eigen::FullPivLU<Eigen::MatrixXcd> lu(J);
        if (!lu.isInvertible())
            throw Error(Errc::singular_step, "balance map Jacobian is singular at the iterate");
        Eigen::VectorXcd delta = lu.solve(rhs);

        double alpha = 1.0;
        bool accepted = false;
        std::vector<ComplexPolynomial> next;
        ComplexPolynomial r_next;
        double res_next = 0.0, scale_next = scale;
        while (alpha >= std::ldexp(1.0, -20)) {
            next = polys;
            for (std::size_t u = 0; u < unknowns.size(); ++u) {
                auto coeffs = next[unknowns[u].layer].coeffs();
                coeffs[unknowns[u].power] += alpha * delta(static_cast<Eigen::Index>(u));
                next[unknowns[u].layer] = ComplexPolynomial(coeffs);
            }
            r_next = full_residual(next, &scale_next);
            res_next = residual_norm(r_next);
            if (res_next < res) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError(Errc::no_convergence,
                                   "residual stalled; no damping step decreases it", history);

        polys = std::move(next);
        r = r_next;
        res = res_next;
        scale = scale_next;
        if (trace) trace->push_back({iter + 1, res / scale, alpha * delta.norm()});
    }
    history.push_back(res / scale);
    throw ConvergenceError(Errc::no_convergence, "iteration limit reached", history);
}

}  // namespace catenode
