#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "catenode/io.hpp"
#include "catenode/polynomial_method.hpp"
#include "test_util.hpp"

using namespace catenode;

namespace {

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

std::size_t count_substr(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size()))
        ++count;
    return count;
}

}  // namespace

TEST_CASE("json round trip is bit exact") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        auto c = testutil::random_config(rng);
        // Sprinkle in awkward values.
        c.theta_left[0] += 1.0 / 3.0;
        c.theta_right[0] -= 1.0 / 3.0;
        c.nodes[0][0] *= 1.0 + 1e-16;
        const std::string text = config_to_json(c);
        const auto back = config_from_json(text);
        REQUIRE(back.layers == c.layers);
        for (std::size_t l = 0; l < c.nodes.size(); ++l)
            for (std::size_t k = 0; k < c.nodes[l].size(); ++k) {
                CHECK(bit_equal(back.nodes[l][k].real(), c.nodes[l][k].real()));
                CHECK(bit_equal(back.nodes[l][k].imag(), c.nodes[l][k].imag()));
            }
        for (std::size_t p = 0; p <= c.layer_count(); ++p) {
            CHECK(bit_equal(back.theta_left[p], c.theta_left[p]));
            CHECK(bit_equal(back.theta_right[p], c.theta_right[p]));
        }
        // Serialization itself is deterministic.
        CHECK(config_to_json(back) == text);
    }
}

TEST_CASE("json parser rejects malformed input") {
    try {
        config_from_json("{not json");
        FAIL("expected bad_input");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::bad_input);
        CHECK(exit_class(e.code()) == 2);
    }
    CHECK_THROWS_AS(config_from_json("{}"), Error);
    CHECK_THROWS_AS(config_from_json(R"({"layers":[1],"nodes":[[[1,0]]]})"), Error);
    CHECK_THROWS_AS(
        config_from_json(
            R"({"layers":[1],"nodes":[[["x",0]]],"theta_dot":{"left":[0,0],"right":[0,0]}})"),
        Error);
    // Shape errors from validate surface as well.
    CHECK_THROWS_AS(
        config_from_json(
            R"({"layers":[2],"nodes":[[[1,0]]],"theta_dot":{"left":[0,0],"right":[0,0]}})"),
        Error);
}

TEST_CASE("force report csv layout") {
    const auto c = four_end_config(2);
    const auto rep = force(c, derive_residues(c));
    const std::string csv = force_report_csv(rep);
    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "layer,k,re_F,im_F");
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("1,1,", 0) == 0);
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("1,2,", 0) == 0);
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("theta1,", 0) == 0);
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("theta2,", 0) == 0);
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("max_abs_force,", 0) == 0);
}

TEST_CASE("rigidity and polynomial json") {
    RigidityReport rep;
    rep.singular_values = {2.0, 1.0, 0.0};
    rep.rank = 2;
    rep.rigid = true;
    const std::string text = rigidity_report_json(rep);
    CHECK(count_substr(text, "\"singular_values\"") == 1);
    CHECK(count_substr(text, "\"rank\": 2") == 1);
    CHECK(count_substr(text, "\"rigid\": true") == 1);

    const auto poly = ComplexPolynomial({Complex(1.0, -2.0), Complex(0.0, 1.0)});
    const std::string ptext = polynomial_json(poly);
    CHECK(count_substr(ptext, "\"coeffs\"") == 1);
    CHECK(count_substr(ptext, "-2") == 1);
}

TEST_CASE("phase scan and trace csv") {
    PhaseScan scan;
    scan.phi = {0.0, 0.5};
    scan.im_g2 = {0.0, -0.25};
    scan.zeros = {0.0};
    const std::string text = phase_scan_csv(scan);
    std::istringstream in(text);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "phi,im_G2");
    REQUIRE(std::getline(in, line));
    CHECK(line == "0,0");
    REQUIRE(std::getline(in, line));
    CHECK(line == "0.5,-0.25");
    REQUIRE(std::getline(in, line));
    CHECK(line == "zero,0");

    std::vector<SolveTraceEntry> trace = {{0, 1.0, 0.0}, {1, 0.125, 0.5}};
    const std::string ttext = trace_csv(trace);
    CHECK(ttext.rfind("iter,residual,step_norm\n", 0) == 0);
    CHECK(count_substr(ttext, "\n1,0.125,0.5") == 1);
}

TEST_CASE("svg plot places markers in the log strip") {
    Configuration c;
    c.layers = {1, 1};
    c.nodes = {{Complex(1.0, 0.0)}, {Complex(-1.0, 0.0)}};
    c.theta_left = {1.0, 0.0, -1.0};
    c.theta_right = {1.0, 0.0, -1.0};

    const std::string svg = config_svg(c);
    CHECK(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"200\"", 0) ==
          0);
    // One circle marker for layer 1, one square for layer 2, strip lines.
    CHECK(count_substr(svg, "<circle") == 1);
    CHECK(count_substr(svg, "<rect") >= 1);
    CHECK(count_substr(svg, "stroke-dasharray") >= 2);

    // Two periods double the height and the marker count.
    const std::string tall = config_svg(c, 2);
    CHECK(tall.find("height=\"400\"") != std::string::npos);
    CHECK(count_substr(tall, "<circle") == 2);

    // A third layer brings the diamond marker.
    Configuration d;
    d.layers = {1, 1, 1};
    d.nodes = {{Complex(1.0, 0.0)}, {Complex(-2.0, 0.0)}, {Complex(4.0, 0.0)}};
    d.theta_left = {1.5, 0.5, -0.5, -1.5};
    d.theta_right = {1.5, 0.5, -0.5, -1.5};
    const std::string three = config_svg(d);
    CHECK(count_substr(three, "<path") >= 1);
}
