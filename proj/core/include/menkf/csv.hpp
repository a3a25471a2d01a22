#pragma once

#include "menkf/experiment.hpp"

#include <string>

namespace menkf {

/// 17-significant-digit decimal form, so emitted numbers round-trip exactly
/// and byte-level output diffs are meaningful.
std::string format_sig17(double v);

std::string render_theta_csv(const DiagnosticsSeries& series);
std::string render_rmse_csv(const DiagnosticsSeries& series);
std::string render_gamma_csv(const DiagnosticsSeries& series);

/// Columnar snapshot: node coordinate followed by each variable.
std::string render_snapshot(const StateField& state);

} // namespace menkf
