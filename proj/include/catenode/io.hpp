#pragma once

#include <string>
#include <vector>

#include "catenode/config.hpp"
#include "catenode/engine.hpp"
#include "catenode/forces.hpp"
#include "catenode/poly.hpp"

namespace catenode {

/// Serializes to the interchange schema
///   {"layers":[...], "nodes":[[[re,im],...],...],
///    "theta_dot":{"left":[...], "right":[...]}}
/// with round-trip-safe number formatting: config_from_json(config_to_json(c))
/// reproduces every double bit-exactly.
std::string config_to_json(const Configuration& config);

/// Parses the schema above. Shape problems and malformed JSON raise
/// Error(bad_input); the configuration itself is validated afterwards.
Configuration config_from_json(const std::string& text);

/// CSV with columns layer,k,re_F,im_F (1-based indices) and footer rows
/// theta1, theta2, max_abs_force.
std::string force_report_csv(const ForceReport& report);

/// {"singular_values":[...], "rank":k, "rigid":bool}
std::string rigidity_report_json(const RigidityReport& report);

/// {"coeffs":[[re,im],...]} in ascending degree order.
std::string polynomial_json(const ComplexPolynomial& poly);

/// CSV with columns phi,im_G2 followed by zero,<phi> footer rows.
std::string phase_scan_csv(const PhaseScan& scan);

/// CSV with columns iter,residual,step_norm.
std::string trace_csv(const std::vector<SolveTraceEntry>& trace);

/// SVG plot of the node logarithms ln q + 2 pi i m, m = 0..periods-1, in a
/// 600 x (200 * periods) viewport: imaginary axis vertical, principal branch
/// in (-pi, pi], strip boundaries drawn, markers cycling circle / square /
/// diamond by layer.
std::string config_svg(const Configuration& config, int periods = 1);

}  // namespace catenode
