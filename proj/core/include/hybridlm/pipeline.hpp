#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridlm/model.hpp"
#include "hybridlm/projector.hpp"
#include "hybridlm/sampler.hpp"
#include "hybridlm/taskbench.hpp"

namespace hybridlm::pipeline {

inline constexpr int kTranscriptSchemaVersion = 1;

enum class PlannerRole { none, arm, ddlm };
enum class ExecutorRole { arm, ddlm };
enum class Channel { text, latent };

std::string planner_name(PlannerRole r);
std::string executor_name(ExecutorRole r);
std::string channel_name(Channel c);
PlannerRole planner_from_name(const std::string& s);
ExecutorRole executor_from_name(const std::string& s);
Channel channel_from_name(const std::string& s);

struct PairingConfig {
    PlannerRole planner = PlannerRole::none;
    ExecutorRole executor = ExecutorRole::arm;
    Channel channel = Channel::text;
    int plan_len = 64;
    SamplerConfig sampler;
    int max_answer_tokens = 12;
    int plan_text_limit = 0;  // text channel only: truncate the plan to N tokens (0 = off)

    // The only latent pairing studied is ddlm -> arm.
    void validate() const;
    std::string id() const;

    nlohmann::json to_json() const;
    static PairingConfig from_json(const nlohmann::json& j);
};

struct ModelSet {
    const LanguageModel* arm = nullptr;
    const LanguageModel* ddlm = nullptr;
};

struct TranscriptRecord {
    int schema_version = kTranscriptSchemaVersion;
    int64_t sample_id = 0;
    std::string question;
    std::string gold;
    bool has_plan = false;
    bool plan_is_latent = false;
    std::string plan;  // surface text (text channel) or latent descriptor
    std::string answer;
    std::string extracted;
    bool correct = false;
    bool unparseable = false;
    bool truncated = false;
    bool errored = false;
    std::string error;
    int planner_tokens = 0;
    int executor_tokens = 0;
    PairingConfig pairing;
    uint64_t seed = 0;

    nlohmann::json to_json() const;
    static TranscriptRecord from_json(const nlohmann::json& j);
};

TranscriptRecord run_sample(const PairingConfig& pairing, const taskbench::Sample& sample, int64_t sample_id,
                            const ModelSet& models, const projector::Projector* proj, uint64_t run_seed,
                            taskbench::TaskKind kind);

struct RunResult {
    int schema_version = kTranscriptSchemaVersion;
    std::string pairing_id;
    double accuracy = 0.0;
    double mean_planner_tokens = 0.0;
    double mean_executor_tokens = 0.0;
    int samples = 0;
    int errors = 0;
    int unparseable = 0;
    uint64_t seed = 0;
    std::string transcript_file;

    nlohmann::json to_json() const;
    static RunResult from_json(const nlohmann::json& j);
};

// Samples are independent; parallelism only partitions the index space, so
// any value of `parallelism` produces byte-identical results.
RunResult run_benchmark(const PairingConfig& pairing, const std::vector<taskbench::Sample>& dataset,
                        taskbench::TaskKind kind, const ModelSet& models, const projector::Projector* proj,
                        int parallelism, uint64_t run_seed, std::vector<TranscriptRecord>* transcripts_out);

void write_transcripts(const std::filesystem::path& path, const std::vector<TranscriptRecord>& records);
std::vector<TranscriptRecord> read_transcripts(const std::filesystem::path& path);

}  // namespace hybridlm::pipeline
