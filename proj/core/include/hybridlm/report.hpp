#pragma once

#include <string>
#include <vector>

#include "hybridlm/diagnostics.hpp"
#include "hybridlm/pipeline.hpp"

namespace hybridlm::report {

// Frontier CSV: run_id,total_tokens,accuracy over the Pareto points only.
std::string frontier_csv(const std::vector<analysis::FrontierPoint>& points);

// Scatter of all runs with the frontier polyline highlighted; hand-emitted
// SVG primitives, no plotting dependency.
std::string frontier_svg(const std::vector<analysis::FrontierPoint>& all,
                         const std::vector<analysis::FrontierPoint>& pareto);

// Accuracy table, one row per run (pairing id, accuracy, token means).
std::string results_table(const std::vector<pipeline::RunResult>& runs);

// Accuracy plus token accounting with the fixed-plan-length footnote
// behavior: latent runs report executor means and carry plan_len implicitly.
std::string token_table(const std::vector<pipeline::RunResult>& runs);

// Diagnostic table: benchmark, planning-failure %, execution-failure %, gap.
std::string diagnostics_table(const std::vector<analysis::DiagnosticReport>& reports);

std::string format_pct(double v);  // 2-decimal fixed point

}  // namespace hybridlm::report
