#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hybridlm/model.hpp"
#include "hybridlm/tensor.hpp"

namespace hybridlm {

// Fixed-length, fixed-step denoising. The seed is carried for forward
// compatibility; the low-confidence strategy is fully deterministic.
struct SamplerConfig {
    int plan_len = 64;
    int steps = 8;
    std::string remask_strategy = "low-confidence";
    uint64_t seed = 0;

    void validate() const;
};

struct DenoiseStepRecord {
    int step = 0;
    std::vector<int> positions;        // plan-relative, ascending
    std::vector<int> tokens;           // committed token per position
    std::vector<float> confidences;    // max softmax prob per position
};

struct DenoiseTrace {
    std::vector<DenoiseStepRecord> steps;
    int forward_passes = 0;
};

struct DenoiseResult {
    std::vector<int> plan_tokens;      // length plan_len, no mask ids
    ad::TensorData plan_hidden;        // [plan_len x d_model]
    DenoiseTrace trace;
};

// Model surface the sampler needs; tests rig this with hand-built tables.
class DenoiseBackend {
public:
    virtual ~DenoiseBackend() = default;
    virtual int vocab_size() const = 0;
    virtual int mask_id() const = 0;
    virtual int max_len() const = 0;
    virtual int hidden_width() const = 0;
    // logits [L x V]; hidden (optional sink) [L x d]
    virtual void forward(const std::vector<int>& canvas, ad::TensorData* logits, ad::TensorData* hidden) const = 0;
};

// Adapter binding a diffusion-mode LanguageModel to the backend surface.
class ModelBackend final : public DenoiseBackend {
public:
    explicit ModelBackend(const LanguageModel& model);
    int vocab_size() const override;
    int mask_id() const override;
    int max_len() const override;
    int hidden_width() const override;
    void forward(const std::vector<int>& canvas, ad::TensorData* logits, ad::TensorData* hidden) const override;

private:
    const LanguageModel* model_;
};

// Balanced linear schedule: counts sum to plan_len, differ by at most one,
// larger counts first.
std::vector<int> unmask_schedule(int plan_len, int steps);

DenoiseResult denoise(const DenoiseBackend& model, const std::vector<int>& prompt, const SamplerConfig& cfg);
DenoiseResult denoise(const LanguageModel& model, const std::vector<int>& prompt, const SamplerConfig& cfg);

// One line per step: index, positions, tokens, confidences (5-decimal fixed point).
void write_trace(std::ostream& os, const DenoiseTrace& trace);

}  // namespace hybridlm
