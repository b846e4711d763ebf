#include "hybridlm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hybridlm/errors.hpp"
#include "hybridlm/kernels.hpp"

namespace hybridlm {

void SamplerConfig::validate() const {
    if (plan_len < 1) throw ConfigError("sampler: plan_len must be >= 1");
    if (steps < 1) throw ConfigError("sampler: steps must be >= 1");
    if (steps > plan_len) {
        throw ConfigError("sampler: steps " + std::to_string(steps) + " exceeds plan_len " +
                          std::to_string(plan_len));
    }
    if (remask_strategy != "low-confidence") {
        throw ConfigError("sampler: unknown remask strategy '" + remask_strategy + "'");
    }
}

std::vector<int> unmask_schedule(int plan_len, int steps) {
    if (steps < 1 || steps > plan_len) {
        throw ConfigError("unmask_schedule: steps " + std::to_string(steps) + " not in [1, " +
                          std::to_string(plan_len) + "]");
    }
    const int base = plan_len / steps;
    const int rem = plan_len % steps;
    std::vector<int> counts(steps, base);
    for (int i = 0; i < rem; ++i) counts[i] += 1;
    return counts;
}

ModelBackend::ModelBackend(const LanguageModel& model) : model_(&model) {
    if (model.config().mode != ModelMode::diffusion) {
        throw ConfigError("denoise requires a diffusion-mode model");
    }
}

int ModelBackend::vocab_size() const { return model_->vocab().size(); }
int ModelBackend::mask_id() const { return model_->vocab().mask_id; }
int ModelBackend::max_len() const { return model_->config().max_len; }
int ModelBackend::hidden_width() const { return model_->config().d_model; }

void ModelBackend::forward(const std::vector<int>& canvas, ad::TensorData* logits, ad::TensorData* hidden) const {
    ad::Tape tape;
    auto fwd = model_->forward_hidden(tape, SequenceInput::tokens(canvas));
    if (logits) *logits = fwd.logits.value();
    if (hidden) *hidden = fwd.hidden.value();
}

DenoiseResult denoise(const DenoiseBackend& model, const std::vector<int>& prompt, const SamplerConfig& cfg) {
    cfg.validate();
    const int prompt_len = static_cast<int>(prompt.size());
    const int total = prompt_len + cfg.plan_len;
    if (total > model.max_len()) {
        throw LengthError("denoise: prompt " + std::to_string(prompt_len) + " + plan " +
                          std::to_string(cfg.plan_len) + " exceeds max_len " + std::to_string(model.max_len()));
    }

    std::vector<int> canvas = prompt;
    canvas.resize(total, model.mask_id());
    std::vector<bool> masked(cfg.plan_len, true);

    const std::vector<int> schedule = unmask_schedule(cfg.plan_len, cfg.steps);
    const int vocab = model.vocab_size();

    DenoiseResult result;
    result.trace.forward_passes = 0;

    struct Candidate {
        float confidence;
        int pos;    // plan-relative
        int token;
    };

    for (int step = 0; step < cfg.steps; ++step) {
        ad::TensorData logits;
        model.forward(canvas, &logits, nullptr);
        ++result.trace.forward_passes;

        std::vector<Candidate> cands;
        cands.reserve(cfg.plan_len);
        std::vector<float> row(vocab);
        const int mask = model.mask_id();
        for (int p = 0; p < cfg.plan_len; ++p) {
            if (!masked[p]) continue;
            const float* src = logits.data.data() + static_cast<size_t>(prompt_len + p) * vocab;
            std::copy(src, src + vocab, row.begin());
            kern::softmax_row(row.data(), vocab, vocab);
            // the mask symbol is never a legal output token
            int best = mask == 0 ? 1 : 0;
            for (int j = 0; j < vocab; ++j) {
                if (j != mask && row[j] > row[best]) best = j;
            }
            cands.push_back({row[best], p, best});
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.confidence != b.confidence) return a.confidence > b.confidence;
            return a.pos < b.pos;
        });

        const int k = std::min<int>(schedule[step], static_cast<int>(cands.size()));
        std::vector<Candidate> chosen(cands.begin(), cands.begin() + k);
        std::sort(chosen.begin(), chosen.end(), [](const Candidate& a, const Candidate& b) { return a.pos < b.pos; });

        DenoiseStepRecord rec;
        rec.step = step;
        for (const Candidate& c : chosen) {
            canvas[prompt_len + c.pos] = c.token;
            masked[c.pos] = false;
            rec.positions.push_back(c.pos);
            rec.tokens.push_back(c.token);
            rec.confidences.push_back(c.confidence);
        }
        result.trace.steps.push_back(std::move(rec));
    }

    for (int p = 0; p < cfg.plan_len; ++p) {
        if (masked[p]) throw ValidationError("denoise: position " + std::to_string(p) + " still masked after schedule");
    }

    // clean re-forward of the completed canvas supplies the plan latents
    ad::TensorData hidden;
    model.forward(canvas, nullptr, &hidden);
    ++result.trace.forward_passes;

    result.plan_tokens.assign(canvas.begin() + prompt_len, canvas.end());
    const int d = model.hidden_width();
    result.plan_hidden = ad::TensorData({cfg.plan_len, d});
    std::copy(hidden.data.begin() + static_cast<size_t>(prompt_len) * d,
              hidden.data.begin() + static_cast<size_t>(total) * d, result.plan_hidden.data.begin());
    return result;
}

DenoiseResult denoise(const LanguageModel& model, const std::vector<int>& prompt, const SamplerConfig& cfg) {
    ModelBackend backend(model);
    return denoise(backend, prompt, cfg);
}

void write_trace(std::ostream& os, const DenoiseTrace& trace) {
    char buf[32];
    for (const auto& rec : trace.steps) {
        os << "step " << rec.step;
        for (size_t i = 0; i < rec.positions.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.5f", static_cast<double>(rec.confidences[i]));
            os << " " << rec.positions[i] << ":" << rec.tokens[i] << ":" << buf;
        }
        os << "\n";
    }
    os << "forward_passes " << trace.forward_passes << "\n";
}

}  // namespace hybridlm
