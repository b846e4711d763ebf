#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridlm/model.hpp"
#include "hybridlm/taskbench.hpp"

namespace hybridlm::train {

enum class Role { direct, executor, planner };
std::string role_name(Role r);

// Autoregressive pair: sequence = prompt + target + eos, next-token loss on
// the target and eos positions only.
struct ArPair {
    std::vector<int> prompt;
    std::vector<int> target;
    Role role = Role::direct;
    size_t sample_index = 0;
};

// Diffusion pair: a fixed-length block (target + eos + padding) appended to
// the prompt; the masking process only ever touches block positions.
struct DiffusionPair {
    std::vector<int> prompt;
    std::vector<int> target;
    int block_len = 0;
    Role role = Role::direct;
    size_t sample_index = 0;
};

struct TrainOptions {
    int batch_size = 16;
    int eval_sampler_steps = 8;  // held-out decode steps for diffusion models
    int max_eval_samples = 1000;
    bool final_eval = true;
    float grad_clip = 1.0f;  // global L2 norm per optimizer step; 0 disables
};

struct TrainingReport {
    std::vector<double> epoch_losses;
    double final_heldout_exact = 0.0;         // direct-role pairs when present
    nlohmann::json per_role_exact;            // role -> exact-match fraction
    int train_pairs = 0;
    int heldout_pairs = 0;
    double cpu_seconds = 0.0;
    nlohmann::json to_json() const;
};

TrainingReport train_arm(LanguageModel& model, const std::vector<ArPair>& corpus, int epochs, float lr,
                         uint64_t seed, const TrainOptions& opts = {});
TrainingReport train_ddlm(LanguageModel& model, const std::vector<DiffusionPair>& corpus, int epochs, float lr,
                          uint64_t seed, const TrainOptions& opts = {});

// Single-pair diffusion loss with an injected masking ratio; exposed so the
// boundary behaviors (t = 1, the zero-mask redraw guard) are testable.
ad::Tensor ddlm_pair_loss(ad::Tape& tape, const LanguageModel& model, const DiffusionPair& pair, double t,
                          Rng& mask_rng);

// Builds the full padded block (target + eos + pads) for a diffusion pair.
std::vector<int> diffusion_block(const DiffusionPair& pair, const VocabSpec& vocab);

struct CorpusOptions {
    bool direct = true;
    bool executor = false;
    bool planner = false;
    // extra direct pairs for each sample's unresolved final derivation step
    // ("492+5" -> "497"); trains the executor's last-mile arithmetic
    bool final_step = false;
    int answer_block_len = 12;  // diffusion answer region, eos included
    int plan_len = 64;          // diffusion plan region, eos included
};

std::vector<ArPair> build_ar_corpus(const std::vector<taskbench::Sample>& samples, const VocabSpec& vocab,
                                    const CorpusOptions& opts);
std::vector<DiffusionPair> build_diffusion_corpus(const std::vector<taskbench::Sample>& samples,
                                                  const VocabSpec& vocab, const CorpusOptions& opts);

}  // namespace hybridlm::train
