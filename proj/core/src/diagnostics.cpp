#include "hybridlm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "hybridlm/errors.hpp"

namespace hybridlm::analysis {

std::optional<double> DiagnosticReport::error_gap() const {
    if (!planner_issue_pct || !executor_issue_pct) return std::nullopt;
    return std::abs(*planner_issue_pct - *executor_issue_pct);
}

nlohmann::json DiagnosticReport::to_json() const {
    nlohmann::json j{{"benchmark", benchmark},
                     {"incorrect_base", incorrect_base},
                     {"setup_x", setup_x},
                     {"setup_y", setup_y}};
    j["planner_issue_pct"] = planner_issue_pct ? nlohmann::json(*planner_issue_pct) : nlohmann::json(nullptr);
    j["executor_issue_pct"] = executor_issue_pct ? nlohmann::json(*executor_issue_pct) : nlohmann::json(nullptr);
    auto gap = error_gap();
    j["error_gap"] = gap ? nlohmann::json(*gap) : nlohmann::json(nullptr);
    return j;
}

namespace {

std::map<int64_t, bool> correctness_by_id(const std::vector<pipeline::TranscriptRecord>& records) {
    std::map<int64_t, bool> out;
    for (const auto& r : records) {
        if (!out.emplace(r.sample_id, r.correct).second) {
            throw AlignmentError("duplicate sample_id " + std::to_string(r.sample_id) + " in transcript set");
        }
    }
    return out;
}

void check_aligned(const std::map<int64_t, bool>& a, const std::map<int64_t, bool>& b, const char* which) {
    std::ostringstream missing;
    int misses = 0;
    for (const auto& [id, _] : a) {
        if (!b.count(id)) {
            if (misses) missing << ", ";
            missing << id;
            ++misses;
        }
    }
    for (const auto& [id, _] : b) {
        if (!a.count(id)) {
            if (misses) missing << ", ";
            missing << id;
            ++misses;
        }
    }
    if (misses) {
        throw AlignmentError(std::string("transcript sets misaligned (") + which + "): sample ids " + missing.str());
    }
}

}  // namespace

DiagnosticReport diagnose(const std::string& benchmark,
                          const std::vector<pipeline::TranscriptRecord>& ddlm_arm,
                          const std::vector<pipeline::TranscriptRecord>& planner_swapped,
                          const std::vector<pipeline::TranscriptRecord>& ddlm_ddlm) {
    const auto base = correctness_by_id(ddlm_arm);
    const auto swapped = correctness_by_id(planner_swapped);
    const auto diffused = correctness_by_id(ddlm_ddlm);
    check_aligned(base, swapped, "ddlm->arm vs planner-swapped");
    check_aligned(base, diffused, "ddlm->arm vs ddlm->ddlm");

    DiagnosticReport rep;
    rep.benchmark = benchmark;
    for (const auto& [id, base_correct] : base) {
        if (base_correct) continue;
        ++rep.incorrect_base;
        if (swapped.at(id)) ++rep.setup_x;
        if (diffused.at(id)) ++rep.setup_y;
    }
    if (rep.incorrect_base > 0) {
        rep.planner_issue_pct = 100.0 * rep.setup_x / rep.incorrect_base;
        rep.executor_issue_pct = 100.0 * rep.setup_y / rep.incorrect_base;
    }
    return rep;
}

std::vector<FrontierPoint> frontier(const std::vector<FrontierPoint>& results) {
    if (results.empty()) throw ConfigError("frontier: no results");
    std::vector<FrontierPoint> keep;
    for (const auto& p : results) {
        bool dominated = false;
        for (const auto& q : results) {
            const bool leq_tokens = q.total_tokens <= p.total_tokens;
            const bool geq_acc = q.accuracy >= p.accuracy;
            const bool strict = q.total_tokens < p.total_tokens || q.accuracy > p.accuracy;
            if (leq_tokens && geq_acc && strict) {
                dominated = true;
                break;
            }
        }
        if (!dominated) keep.push_back(p);
    }
    std::sort(keep.begin(), keep.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
        if (a.total_tokens != b.total_tokens) return a.total_tokens < b.total_tokens;
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        return a.run_id < b.run_id;
    });
    return keep;
}

}  // namespace hybridlm::analysis
