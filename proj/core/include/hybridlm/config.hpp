#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridlm/model.hpp"
#include "hybridlm/pipeline.hpp"
#include "hybridlm/projector.hpp"
#include "hybridlm/taskbench.hpp"

namespace hybridlm::config {

inline constexpr int kConfigSchemaVersion = 1;

struct TrainSection {
    int epochs = 4;
    float lr = 1e-3f;
    int batch_size = 16;
    uint64_t seed = 1;
    std::vector<int> tasks;          // indices into the task list
    bool role_direct = true;
    bool role_executor = false;
    bool role_planner = false;
    int eval_steps = 8;              // ddlm held-out decode steps
    int records = 2000;              // projector only: train-set size cap
};

struct RunSection {
    std::vector<int> eval_tasks;     // indices into the task list
    int samples_per_task = 200;      // capped at the available held-out size
    int max_answer_tokens = 12;
};

// Whole-experiment configuration. Unknown keys are rejected; paths are
// resolved relative to the config file's directory. Environment variables
// override only the output directory and parallelism.
struct ExperimentConfig {
    std::filesystem::path base_dir;
    std::string out_dir = "out";
    uint64_t seed = 1;
    int parallelism = 1;

    std::vector<taskbench::TaskSpec> tasks;
    ModelConfig arm;
    ModelConfig ddlm;
    TrainSection arm_train;
    TrainSection ddlm_train;
    TrainSection projector_train;
    SamplerConfig sampler;
    projector::ProjectorConfig projector_cfg;
    std::vector<pipeline::PairingConfig> pairings;
    RunSection run;

    std::filesystem::path out_path() const { return base_dir / out_dir; }

    static ExperimentConfig load(const std::filesystem::path& file);
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

}  // namespace hybridlm::config
