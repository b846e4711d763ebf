#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hybridlm/checkpoint.hpp"
#include "hybridlm/model.hpp"
#include "hybridlm/train.hpp"

namespace hybridlm::projector {

struct ProjectorConfig {
    int d_ddlm = 128;
    int d_hidden = 0;   // 0 -> 4 * max(d_ddlm, d_arm)
    int d_arm = 96;
    int plan_len = 64;
    uint64_t init_seed = 1;

    int resolved_hidden() const { return d_hidden > 0 ? d_hidden : 4 * std::max(d_ddlm, d_arm); }
};

// Affine -> GELU -> affine map from planner hidden width to executor
// embedding width. The four tensors are the only trainable state.
struct Projector {
    ProjectorConfig cfg;
    ad::NodePtr w1;  // [d_ddlm x d_hidden]
    ad::NodePtr b1;  // [d_hidden]
    ad::NodePtr w2;  // [d_hidden x d_arm]
    ad::NodePtr b2;  // [d_arm]

    static Projector init(const ProjectorConfig& cfg);
    std::vector<ad::NodePtr> param_nodes() const { return {w1, b1, w2, b2}; }
    std::vector<NamedParam> named_params() const;
    void set_trainable(bool trainable);
};

// Row-wise gelu(h W1 + b1) W2 + b2 on the graph.
ad::Tensor project(ad::Tape& tape, const Projector& p, const ad::Tensor& plan_hidden);
// Value-only convenience (runs the same graph path with frozen leaves).
ad::TensorData project(const Projector& p, const ad::TensorData& plan_hidden);

// Executor input layout: [embed(bos), projected rows, embed(sep), embed(question)].
// An empty projected block (P = 0) degenerates to [bos, sep, question].
ad::Tensor assemble_executor_input(ad::Tape& tape, const ad::Tensor& projected, const std::vector<int>& question,
                                   const LanguageModel& arm);
ad::TensorData assemble_executor_input(const ad::TensorData& projected, const std::vector<int>& question,
                                       const LanguageModel& arm);

struct TrainRecord {
    std::vector<int> question;        // token ids
    ad::TensorData plan_hidden;       // [P x d_ddlm]
    std::vector<int> gold_answer;     // token ids, nonempty
    size_t sample_index = 0;
};

struct ProjectorTrainOptions {
    int batch_size = 8;
    int max_eval_samples = 500;
    bool final_eval = true;
    bool check_frozen = true;  // fail fast if a backbone gradient shows up
};

// Teacher-forced cross-entropy on gold answer tokens through the frozen ARM;
// gradients reach the four projector tensors only.
train::TrainingReport train_projector(Projector& p, const LanguageModel& arm, const std::vector<TrainRecord>& records,
                                      int epochs, float lr, uint64_t seed, const ProjectorTrainOptions& opts = {});

// Single-record loss used by training and the gradient checks.
ad::Tensor projector_record_loss(ad::Tape& tape, const Projector& p, const LanguageModel& arm,
                                 const TrainRecord& record);

Checkpoint projector_checkpoint(const Projector& p);
Projector projector_from_checkpoint(const Checkpoint& ckpt);
void save_projector(const std::filesystem::path& path, const Projector& p);
Projector load_projector(const std::filesystem::path& path);

}  // namespace hybridlm::projector
