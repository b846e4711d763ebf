#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridlm/pipeline.hpp"

namespace hybridlm::analysis {

struct DiagnosticReport {
    std::string benchmark;
    int incorrect_base = 0;  // incorrect samples in ddlm->arm
    int setup_x = 0;         // fixed by swapping in the arm planner
    int setup_y = 0;         // ddlm->ddlm succeeds where ddlm->arm fails
    std::optional<double> planner_issue_pct;
    std::optional<double> executor_issue_pct;

    std::optional<double> error_gap() const;
    nlohmann::json to_json() const;
};

// The three runs must cover the identical sample set (same ids, same seeds).
// Setup X: incorrect under ddlm->arm, correct once the planner is swapped to
// the arm. Setup Y: correct under ddlm->ddlm, incorrect under ddlm->arm.
DiagnosticReport diagnose(const std::string& benchmark,
                          const std::vector<pipeline::TranscriptRecord>& ddlm_arm,
                          const std::vector<pipeline::TranscriptRecord>& planner_swapped,
                          const std::vector<pipeline::TranscriptRecord>& ddlm_ddlm);

struct FrontierPoint {
    std::string run_id;
    double total_tokens = 0.0;
    double accuracy = 0.0;
};

// Pareto-maximal points under (fewer tokens, higher accuracy), tokens
// ascending.
std::vector<FrontierPoint> frontier(const std::vector<FrontierPoint>& results);

}  // namespace hybridlm::analysis
