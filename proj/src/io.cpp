#include "catenode/io.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace catenode {

namespace {

using ordered_json = nlohmann::ordered_json;

/// 17 significant digits: enough for any double to survive a text round trip.
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double require_number(const ordered_json& j, const char* what) {
    if (!j.is_number()) throw Error(Errc::bad_input, std::string(what) + " must be a number");
    return j.get<double>();
}

}  // namespace

std::string config_to_json(const Configuration& config) {
    ordered_json doc;
    doc["layers"] = config.layers;
    ordered_json nodes = ordered_json::array();
    for (const auto& layer : config.nodes) {
        ordered_json row = ordered_json::array();
        for (Complex q : layer) row.push_back({q.real(), q.imag()});
        nodes.push_back(std::move(row));
    }
    doc["nodes"] = std::move(nodes);
    doc["theta_dot"] = {{"left", config.theta_left}, {"right", config.theta_right}};
    return doc.dump(2) + "\n";
}

Configuration config_from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::bad_input, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("layers") || !doc.contains("nodes") ||
        !doc.contains("theta_dot"))
        throw Error(Errc::bad_input, "configuration needs layers, nodes and theta_dot");

    Configuration config;
    if (!doc["layers"].is_array()) throw Error(Errc::bad_input, "layers must be an array");
    for (const auto& v : doc["layers"]) {
        if (!v.is_number_integer()) throw Error(Errc::bad_input, "layer counts must be integers");
        config.layers.push_back(v.get<int>());
    }
    if (!doc["nodes"].is_array()) throw Error(Errc::bad_input, "nodes must be an array");
    for (const auto& row : doc["nodes"]) {
        if (!row.is_array()) throw Error(Errc::bad_input, "each layer's nodes must be an array");
        std::vector<Complex> layer;
        for (const auto& pair : row) {
            if (!pair.is_array() || pair.size() != 2)
                throw Error(Errc::bad_input, "each node must be a [re, im] pair");
            layer.emplace_back(require_number(pair[0], "node re"),
                               require_number(pair[1], "node im"));
        }
        config.nodes.push_back(std::move(layer));
    }
    const auto& td = doc["theta_dot"];
    if (!td.is_object() || !td.contains("left") || !td.contains("right"))
        throw Error(Errc::bad_input, "theta_dot needs left and right arrays");
    for (const auto& v : td["left"]) config.theta_left.push_back(require_number(v, "theta_dot"));
    for (const auto& v : td["right"]) config.theta_right.push_back(require_number(v, "theta_dot"));

    validate(config);
    return config;
}

std::string force_report_csv(const ForceReport& report) {
    std::ostringstream os;
    os << "layer,k,re_F,im_F\n";
    for (std::size_t l = 0; l < report.forces.size(); ++l)
        for (std::size_t k = 0; k < report.forces[l].size(); ++k)
            os << (l + 1) << "," << (k + 1) << "," << fmt(report.forces[l][k].real()) << ","
               << fmt(report.forces[l][k].imag()) << "\n";
    os << "theta1," << fmt(report.theta1) << "\n";
    os << "theta2," << fmt(report.theta2) << "\n";
    os << "max_abs_force," << fmt(report.max_abs_force) << "\n";
    return os.str();
}

std::string rigidity_report_json(const RigidityReport& report) {
    ordered_json doc;
    doc["singular_values"] = report.singular_values;
    doc["rank"] = report.rank;
    doc["rigid"] = report.rigid;
    return doc.dump(2) + "\n";
}

std::string polynomial_json(const ComplexPolynomial& poly) {
    ordered_json coeffs = ordered_json::array();
    for (Complex a : poly.coeffs()) coeffs.push_back({a.real(), a.imag()});
    ordered_json doc;
    doc["coeffs"] = std::move(coeffs);
    return doc.dump(2) + "\n";
}

std::string phase_scan_csv(const PhaseScan& scan) {
    std::ostringstream os;
    os << "phi,im_G2\n";
    for (std::size_t i = 0; i < scan.phi.size(); ++i)
        os << fmt(scan.phi[i]) << "," << fmt(scan.im_g2[i]) << "\n";
    for (double z : scan.zeros) os << "zero," << fmt(z) << "\n";
    return os.str();
}

std::string trace_csv(const std::vector<SolveTraceEntry>& trace) {
    std::ostringstream os;
    os << "iter,residual,step_norm\n";
    for (const auto& entry : trace)
        os << entry.iter << "," << fmt(entry.residual) << "," << fmt(entry.step_norm) << "\n";
    return os.str();
}

std::string config_svg(const Configuration& config, int periods) {
    if (periods < 1) throw Error(Errc::bad_input, "periods must be at least 1");
    validate(config);
    const double pi = std::acos(-1.0);

    struct Point {
        double x, y;
        std::size_t layer;
    };
    std::vector<Point> points;
    double xmin = 0.0, xmax = 0.0;
    bool first = true;
    for (std::size_t l = 0; l < config.nodes.size(); ++l)
        for (Complex q : config.nodes[l]) {
            const double x = std::log(std::abs(q));
            double y = std::arg(q);  // in (-pi, pi]
            if (y <= -pi) y = pi;    // arg may return -pi for the negative axis
            for (int m = 0; m < periods; ++m)
                points.push_back({x, y + 2.0 * pi * m, l});
            if (first || x < xmin) xmin = x;
            if (first || x > xmax) xmax = x;
            first = false;
        }
    if (xmax - xmin < 1.0) {
        const double mid = 0.5 * (xmin + xmax);
        xmin = mid - 0.5;
        xmax = mid + 0.5;
    }

    const int width = 600;
    const int height = 200 * periods;
    const double margin = 40.0;
    const double ymin = -pi, ymax = -pi + 2.0 * pi * periods;
    auto sx = [&](double x) {
        return margin + (x - xmin) / (xmax - xmin) * (width - 2.0 * margin);
    };
    auto sy = [&](double y) {
        // SVG y axis points down; flip so growing imaginary part goes up.
        return height - margin / 2.0 - (y - ymin) / (ymax - ymin) * (height - margin);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "  <rect width=\"" << width << "\" height=\"" << height
       << "\" fill=\"white\" stroke=\"none\"/>\n";
    for (int k = 0; k <= periods; ++k) {
        const double y = sy(-pi + 2.0 * pi * k);
        os << "  <line x1=\"0\" y1=\"" << fmt(y) << "\" x2=\"" << width << "\" y2=\"" << fmt(y)
           << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    }
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (const Point& p : points) {
        const double cx = sx(p.x), cy = sy(p.y);
        const char* color = colors[p.layer % 6];
        switch (p.layer % 3) {
            case 0:
                os << "  <circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy)
                   << "\" r=\"3\" fill=\"" << color << "\"/>\n";
                break;
            case 1:
                os << "  <rect x=\"" << fmt(cx - 3.0) << "\" y=\"" << fmt(cy - 3.0)
                   << "\" width=\"6\" height=\"6\" fill=\"" << color << "\"/>\n";
                break;
            default:
                os << "  <path d=\"M " << fmt(cx) << " " << fmt(cy - 4.0) << " L "
                   << fmt(cx + 4.0) << " " << fmt(cy) << " L " << fmt(cx) << " "
                   << fmt(cy + 4.0) << " L " << fmt(cx - 4.0) << " " << fmt(cy)
                   << " Z\" fill=\"" << color << "\"/>\n";
                break;
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace catenode
