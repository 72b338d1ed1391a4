#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "catenode/engine.hpp"
#include "catenode/io.hpp"
#include "catenode/polynomial_method.hpp"

namespace {

using namespace catenode;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::bad_input, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::bad_input, "cannot write " + path);
    out << text;
}

int run(int argc, char** argv) {
    CLI::App app{"balanced configurations of catenoid necks: forces, solvers, reports"};
    app.require_subcommand(1);

    std::string in_path, out_path;
    double tol = 1e-12;
    int max_iter = 100;
    int seeds = 0;
    std::string method = "newton";
    bool tail = false;
    std::vector<std::string> block_paths;
    int periods = 1;
    int n = 2;
    double b = 0.0, c = 0.0, q3 = 0.0, c1 = 0.0, c3 = 0.0;
    int n1 = 1, n2 = 1, grid = 201;
    double lambda = 0.1;

    auto* cmd_force = app.add_subcommand("force", "per-node force report as CSV");
    cmd_force->add_option("config", in_path, "configuration JSON file")->required();
    cmd_force->add_option("-o,--output", out_path, "output file (default stdout)");

    auto* cmd_balance = app.add_subcommand("balance", "solve for balanced node positions");
    cmd_balance->add_option("config", in_path, "seed configuration JSON file")->required();
    cmd_balance->add_option("-o,--output", out_path, "output file (default stdout)");
    cmd_balance->add_option("--tol", tol, "force residual target");
    cmd_balance->add_option("--max-iter", max_iter, "iteration limit");
    cmd_balance->add_option("--seeds", seeds,
                            "random multi-starts (0: iterate from the file's nodes)");
    cmd_balance->add_option("--method", method, "newton | fp")
        ->check(CLI::IsMember({"newton", "fp"}));

    auto* cmd_rigidity = app.add_subcommand("rigidity", "singular value report of the Jacobian");
    cmd_rigidity->add_option("config", in_path, "configuration JSON file")->required();
    cmd_rigidity->add_option("-o,--output", out_path, "output file (default stdout)");

    auto* cmd_embed = app.add_subcommand("embed", "end speed monotonicity check");
    cmd_embed->add_option("config", in_path, "configuration JSON file")->required();

    auto* cmd_concat = app.add_subcommand("concat", "stack balanced blocks into a tower");
    cmd_concat->add_option("blocks", block_paths, "block JSON files, bottom to top")->required();
    cmd_concat->add_flag("--tail", tail, "last block is a two-layer cap");
    cmd_concat->add_option("-o,--output", out_path, "output file (default stdout)");

    auto* cmd_hyper = app.add_subcommand("hypergeom", "two-layer configuration from the "
                                                      "terminating Gauss series");
    cmd_hyper->add_option("-n", n, "node count of the wide layer")->required();
    cmd_hyper->add_option("-b", b, "series parameter b")->required();
    cmd_hyper->add_option("-c", c, "series parameter c")->required();
    cmd_hyper->add_option("-o,--output", out_path, "output file (default stdout)");

    auto* cmd_heun = app.add_subcommand("heun", "polynomial solutions of the two-puncture "
                                                "operator");
    cmd_heun->add_option("-n", n, "polynomial degree")->required();
    cmd_heun->add_option("--q3", q3, "second outer puncture (first is at 1)")->required();
    cmd_heun->add_option("--c1", c1, "log derivative coefficient at 1")->required();
    cmd_heun->add_option("--c3", c3, "log derivative coefficient at q3")->required();
    cmd_heun->add_option("-b", b, "index parameter b")->required();
    cmd_heun->add_option("-o,--output", out_path, "output file (default stdout)");

    auto* cmd_glue = app.add_subcommand("glue-scan", "phase scan of the second ring's force");
    cmd_glue->add_option("--n1", n1, "first ring size")->required();
    cmd_glue->add_option("--n2", n2, "second ring size")->required();
    cmd_glue->add_option("--lambda", lambda, "second ring radius")->required();
    cmd_glue->add_option("--grid", grid, "grid points on [0, pi]");
    cmd_glue->add_option("-o,--output", out_path, "output file (default stdout)");

    auto* cmd_plot = app.add_subcommand("plot", "SVG of node logarithms in the periodic strip");
    cmd_plot->add_option("config", in_path, "configuration JSON file")->required();
    cmd_plot->add_option("-o,--output", out_path, "output SVG file")->required();
    cmd_plot->add_option("--periods", periods, "strip copies to draw");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (cmd_force->parsed()) {
            Configuration config = config_from_json(read_file(in_path));
            LayerResidues residues = derive_residues(config);
            write_output(out_path, force_report_csv(force(config, residues)));
        } else if (cmd_balance->parsed()) {
            Configuration seed = config_from_json(read_file(in_path));
            SolveOptions options;
            options.tol = tol;
            options.max_iter = max_iter;
            Configuration solved;
            if (seeds > 0) {
                solved = balance_multistart(seed.layers, seed.theta_left, seed.theta_right,
                                            method == "fp" ? BalanceMethod::fp
                                                           : BalanceMethod::newton,
                                            seeds, options)
                             .config;
            } else if (method == "fp") {
                LayerResidues residues = derive_residues(seed);
                std::vector<double> gaps(seed.layer_count());
                for (std::size_t l = 0; l < gaps.size(); ++l) gaps[l] = seed.left_gap(l);
                std::vector<ComplexPolynomial> polys;
                for (const auto& layer : seed.nodes)
                    polys.push_back(ComplexPolynomial::from_roots(layer));
                FpOptions fp_opt;
                fp_opt.tol = tol;
                fp_opt.max_iter = max_iter;
                polys = fp_solve(polys, residues, gaps, fp_opt, nullptr);
                solved = config_from_polys(polys, residues, gaps);
                solved.theta_left = seed.theta_left;
                solved.theta_right = seed.theta_right;
            } else {
                solved = newton_balance(seed, options).config;
            }
            write_output(out_path, config_to_json(solved));
        } else if (cmd_rigidity->parsed()) {
            Configuration config = config_from_json(read_file(in_path));
            write_output(out_path, rigidity_report_json(rigidity(config)));
        } else if (cmd_embed->parsed()) {
            Configuration config = config_from_json(read_file(in_path));
            EmbedReport report = embeddedness_check(config);
            std::cout << "embedded: " << (report.embedded ? "true" : "false") << "\n";
            if (report.left_violation >= 0)
                std::cout << "left chain fails to decrease at plane " << report.left_violation
                          << "\n";
            if (report.right_violation >= 0)
                std::cout << "right chain fails to decrease at plane " << report.right_violation
                          << "\n";
        } else if (cmd_concat->parsed()) {
            std::vector<Configuration> blocks;
            for (const auto& path : block_paths)
                blocks.push_back(config_from_json(read_file(path)));
            write_output(out_path, config_to_json(concatenate(blocks, tail)));
        } else if (cmd_hyper->parsed()) {
            Configuration config = n1_config(n, b, c);
            N1EmbedFlags flags = n1_embeddedness_flags(n, b, c);
            std::cerr << "embeddedness: c<1 " << (flags.c_below_one ? "yes" : "no") << ", b>-n "
                      << (flags.b_above_minus_n ? "yes" : "no") << ", c2^2>-nb "
                      << (flags.c2sq_above_minus_nb ? "yes" : "no") << ", c2^2>n(c2+b) "
                      << (flags.c2sq_above_n_c2_plus_b ? "yes" : "no") << "\n";
            write_output(out_path, config_to_json(config));
        } else if (cmd_heun->parsed()) {
            HeunResult result = heun_polynomials(n, 1.0, q3, c1, c3, b);
            std::ostringstream os;
            os << "{\n  \"solutions\": [\n";
            for (std::size_t i = 0; i < result.solutions.size(); ++i) {
                const auto& sol = result.solutions[i];
                std::string poly = polynomial_json(sol.poly);
                poly.erase(poly.find_last_not_of("\n") + 1);
                os << "    {\"eigenvalue\": [" << sol.eigenvalue.real() << ", "
                   << sol.eigenvalue.imag() << "], \"poly\": " << poly << "}"
                   << (i + 1 < result.solutions.size() ? "," : "") << "\n";
            }
            os << "  ],\n  \"rejected\": [\n";
            for (std::size_t i = 0; i < result.rejected.size(); ++i)
                os << "    \"" << result.rejected[i] << "\""
                   << (i + 1 < result.rejected.size() ? "," : "") << "\n";
            os << "  ]\n}\n";
            write_output(out_path, os.str());
        } else if (cmd_glue->parsed()) {
            write_output(out_path, phase_scan_csv(glue_phase_scan(n1, n2, lambda, grid)));
        } else if (cmd_plot->parsed()) {
            Configuration config = config_from_json(read_file(in_path));
            write_output(out_path, config_svg(config, periods));
        }
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "residual history:\n";
        for (std::size_t i = 0; i < e.residual_history.size(); ++i)
            std::cerr << "  iter " << i << ": " << e.residual_history[i] << "\n";
        if (!e.best_nodes.empty()) {
            std::cerr << "best iterate nodes:\n";
            for (std::size_t l = 0; l < e.best_nodes.size(); ++l)
                for (Complex q : e.best_nodes[l])
                    std::cerr << "  layer " << (l + 1) << ": (" << q.real() << ", " << q.imag()
                              << ")\n";
        }
        return exit_class(e.code());
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_class(e.code());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
