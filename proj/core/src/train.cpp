#include "hybridlm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include "hybridlm/errors.hpp"
#include "hybridlm/optim.hpp"
#include "hybridlm/prompts.hpp"
#include "hybridlm/sampler.hpp"

namespace hybridlm::train {

std::string role_name(Role r) {
    switch (r) {
        case Role::direct: return "direct";
        case Role::executor: return "executor";
        case Role::planner: return "planner";
    }
    return "?";
}

nlohmann::json TrainingReport::to_json() const {
    // cpu_seconds stays out: report files are seed-determined byte for byte
    return nlohmann::json{{"epoch_losses", epoch_losses},
                          {"final_heldout_exact", final_heldout_exact},
                          {"per_role_exact", per_role_exact},
                          {"train_pairs", train_pairs},
                          {"heldout_pairs", heldout_pairs}};
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename PairT>
void split_corpus(const std::vector<PairT>& corpus, std::vector<size_t>* train_idx, std::vector<size_t>* holdout_idx) {
    for (size_t i = 0; i < corpus.size(); ++i) {
        if (taskbench::is_holdout_index(corpus[i].sample_index)) {
            holdout_idx->push_back(i);
        } else {
            train_idx->push_back(i);
        }
    }
}

void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
    for (size_t k = idx.size(); k > 1; --k) std::swap(idx[k - 1], idx[rng.next_below(k)]);
}

ad::Tensor ar_pair_loss(ad::Tape& tape, const LanguageModel& model, const ArPair& pair) {
    const VocabSpec& vocab = model.vocab();
    std::vector<int> seq = pair.prompt;
    seq.insert(seq.end(), pair.target.begin(), pair.target.end());
    seq.push_back(vocab.eos_id);

    const int n = static_cast<int>(seq.size());
    const int prompt_len = static_cast<int>(pair.prompt.size());
    if (prompt_len < 1) throw ConfigError("ar pair: empty prompt");

    std::vector<int> input(seq.begin(), seq.end() - 1);
    std::vector<int> targets(n - 1);
    std::vector<bool> mask(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        targets[i] = seq[i + 1];
        mask[i] = i >= prompt_len - 1;  // predicts target tokens and eos only
    }
    auto fwd = model.forward_hidden(tape, SequenceInput::tokens(std::move(input)));
    return ad::softmax_cross_entropy(tape, fwd.logits, targets, mask);
}

struct EvalAccumulator {
    std::map<std::string, std::pair<int, int>> per_role;  // role -> (hits, total)

    void add(Role role, bool hit) {
        auto& slot = per_role[role_name(role)];
        slot.first += hit ? 1 : 0;
        slot.second += 1;
    }
    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : per_role) j[k] = v.second ? static_cast<double>(v.first) / v.second : 0.0;
        return j;
    }
    double headline() const {
        auto it = per_role.find("direct");
        if (it != per_role.end() && it->second.second > 0) {
            return static_cast<double>(it->second.first) / it->second.second;
        }
        int hits = 0, total = 0;
        for (const auto& [k, v] : per_role) {
            hits += v.first;
            total += v.second;
        }
        return total ? static_cast<double>(hits) / total : 0.0;
    }
};

}  // namespace

std::vector<int> diffusion_block(const DiffusionPair& pair, const VocabSpec& vocab) {
    if (static_cast<int>(pair.target.size()) + 1 > pair.block_len) {
        throw ConfigError("diffusion pair: target length " + std::to_string(pair.target.size()) +
                          " + eos exceeds block_len " + std::to_string(pair.block_len));
    }
    std::vector<int> block = pair.target;
    block.push_back(vocab.eos_id);
    block.resize(pair.block_len, vocab.pad_id);
    return block;
}

ad::Tensor ddlm_pair_loss(ad::Tape& tape, const LanguageModel& model, const DiffusionPair& pair, double t,
                          Rng& mask_rng) {
    if (!(t > 0.0) || t > 1.0) throw ConfigError("ddlm loss: masking ratio must be in (0, 1]");
    const VocabSpec& vocab = model.vocab();
    const std::vector<int> block = diffusion_block(pair, vocab);
    const int prompt_len = static_cast<int>(pair.prompt.size());
    const int total = prompt_len + pair.block_len;

    // Bernoulli(t) per block position; redraw whenever nothing got masked.
    std::vector<bool> masked(pair.block_len, false);
    int n_masked = 0;
    for (int redraw = 0; redraw < 1000000 && n_masked == 0; ++redraw) {
        for (int i = 0; i < pair.block_len; ++i) {
            masked[i] = mask_rng.next_double() < t;
            if (masked[i]) ++n_masked;
        }
    }
    if (n_masked == 0) throw ValidationError("ddlm loss: mask redraw guard exhausted");

    std::vector<int> input = pair.prompt;
    input.insert(input.end(), block.begin(), block.end());
    std::vector<int> targets(total, 0);
    std::vector<bool> loss_mask(total, false);
    for (int i = 0; i < pair.block_len; ++i) {
        if (!masked[i]) continue;
        input[prompt_len + i] = vocab.mask_id;
        targets[prompt_len + i] = block[i];
        loss_mask[prompt_len + i] = true;
    }
    auto fwd = model.forward_hidden(tape, SequenceInput::tokens(std::move(input)));
    ad::Tensor ce = ad::softmax_cross_entropy(tape, fwd.logits, targets, loss_mask);
    // Unbiased masking estimator: (1/t) * sum over masked / block_len. The
    // cross-entropy op returns the mean over masked positions, so rescale by
    // n_masked/block_len; at t = 1 this is exactly the plain mean CE.
    const double weight = static_cast<double>(n_masked) / (static_cast<double>(pair.block_len) * t);
    return ad::scale(tape, ce, static_cast<float>(weight));
}

namespace {

std::vector<int> strip_generated(const std::vector<int>& toks, const VocabSpec& vocab) {
    std::vector<int> out;
    for (int t : toks) {
        if (t == vocab.eos_id) break;
        out.push_back(t);
    }
    while (!out.empty() && out.back() == vocab.pad_id) out.pop_back();
    return out;
}

template <typename LossFn>
TrainingReport run_training(LanguageModel& model, size_t corpus_size, int epochs, float lr, uint64_t seed,
                            const TrainOptions& opts, LossFn&& pair_loss,
                            const std::function<void(const std::vector<size_t>&, EvalAccumulator&)>& final_eval,
                            const std::vector<size_t>& train_idx, const std::vector<size_t>& holdout_idx) {
    if (corpus_size == 0) throw ConfigError("training corpus is empty");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (lr < 0.0f) throw ConfigError("learning rate must be >= 0");

    const auto t0 = Clock::now();
    model.set_trainable(true);
    std::optional<ad::Adam> adam;
    if (lr > 0.0f) {
        ad::AdamConfig acfg;
        acfg.lr = lr;
        adam.emplace(model.param_nodes(), acfg);
    }

    TrainingReport report;
    report.train_pairs = static_cast<int>(train_idx.size());
    report.heldout_pairs = static_cast<int>(holdout_idx.size());
    if (train_idx.empty()) throw ConfigError("training split is empty after the 90/10 hash split");

    Rng order_rng(mix_seed(seed, 0x0bde7));
    std::vector<size_t> order = train_idx;
    const int batch = std::max(1, opts.batch_size);
    const auto param_nodes = model.param_nodes();

    auto clipped_scale = [&](float base_scale) {
        if (!(opts.grad_clip > 0.0f)) return base_scale;
        double sq = 0.0;
        for (const auto& n : param_nodes) {
            for (float g : n->grad) sq += static_cast<double>(g) * g;
        }
        const double norm = std::sqrt(sq) * base_scale;
        if (norm <= opts.grad_clip) return base_scale;
        return static_cast<float>(base_scale * opts.grad_clip / norm);
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle_indices(order, order_rng);
        double loss_sum = 0.0;
        int in_batch = 0;
        if (adam) adam->zero_grad();
        for (size_t k = 0; k < order.size(); ++k) {
            ad::Tape tape;
            ad::Tensor loss = pair_loss(tape, order[k], epoch);
            const float lv = loss.value().data[0];
            if (!std::isfinite(lv)) throw ValidationError("training loss is not finite");
            loss_sum += lv;
            if (adam) {
                tape.backward(loss);
                ++in_batch;
                if (in_batch == batch || k + 1 == order.size()) {
                    adam->step(clipped_scale(1.0f / static_cast<float>(in_batch)));
                    adam->zero_grad();
                    in_batch = 0;
                }
            }
        }
        report.epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));
    }

    if (opts.final_eval && !holdout_idx.empty()) {
        std::vector<size_t> eval_set = holdout_idx;
        if (static_cast<int>(eval_set.size()) > opts.max_eval_samples) {
            eval_set.resize(static_cast<size_t>(opts.max_eval_samples));
        }
        EvalAccumulator acc;
        model.set_trainable(false);  // frozen, read-only decode
        final_eval(eval_set, acc);
        report.per_role_exact = acc.to_json();
        report.final_heldout_exact = acc.headline();
    } else {
        report.per_role_exact = nlohmann::json::object();
    }
    model.set_trainable(false);
    report.cpu_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return report;
}

}  // namespace

TrainingReport train_arm(LanguageModel& model, const std::vector<ArPair>& corpus, int epochs, float lr,
                         uint64_t seed, const TrainOptions& opts) {
    if (model.config().mode != ModelMode::autoregressive) {
        throw ConfigError("train_arm requires an autoregressive-mode model");
    }
    if (corpus.empty()) throw ConfigError("train_arm: empty corpus");

    std::vector<size_t> train_idx, holdout_idx;
    split_corpus(corpus, &train_idx, &holdout_idx);

    auto loss_fn = [&](ad::Tape& tape, size_t idx, int) { return ar_pair_loss(tape, model, corpus[idx]); };
    auto eval_fn = [&](const std::vector<size_t>& eval_set, EvalAccumulator& acc) {
        for (size_t idx : eval_set) {
            const ArPair& pair = corpus[idx];
            const int max_new = static_cast<int>(pair.target.size()) + 8;
            std::vector<int> got = greedy_decode(model, SequenceInput::tokens(pair.prompt), max_new);
            acc.add(pair.role, got == pair.target);
        }
    };
    return run_training(model, corpus.size(), epochs, lr, seed, opts, loss_fn, eval_fn, train_idx, holdout_idx);
}

TrainingReport train_ddlm(LanguageModel& model, const std::vector<DiffusionPair>& corpus, int epochs, float lr,
                          uint64_t seed, const TrainOptions& opts) {
    if (model.config().mode != ModelMode::diffusion) {
        throw ConfigError("train_ddlm requires a diffusion-mode model");
    }
    if (corpus.empty()) throw ConfigError("train_ddlm: empty corpus");

    std::vector<size_t> train_idx, holdout_idx;
    split_corpus(corpus, &train_idx, &holdout_idx);

    Rng mask_rng(mix_seed(seed, 0x3a5c));
    auto loss_fn = [&](ad::Tape& tape, size_t idx, int) {
        const double t = mask_rng.next_open_closed();
        return ddlm_pair_loss(tape, model, corpus[idx], t, mask_rng);
    };
    auto eval_fn = [&](const std::vector<size_t>& eval_set, EvalAccumulator& acc) {
        for (size_t idx : eval_set) {
            const DiffusionPair& pair = corpus[idx];
            SamplerConfig cfg;
            cfg.plan_len = pair.block_len;
            cfg.steps = std::min(opts.eval_sampler_steps, pair.block_len);
            DenoiseResult res = denoise(model, pair.prompt, cfg);
            acc.add(pair.role, strip_generated(res.plan_tokens, model.vocab()) == pair.target);
        }
    };
    return run_training(model, corpus.size(), epochs, lr, seed, opts, loss_fn, eval_fn, train_idx, holdout_idx);
}

std::vector<ArPair> build_ar_corpus(const std::vector<taskbench::Sample>& samples, const VocabSpec& vocab,
                                    const CorpusOptions& opts) {
    std::vector<ArPair> out;
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const std::vector<int> answer = vocab.encode(s.gold);
        const std::string plan = taskbench::derivation_plan(s.question);
        if (opts.direct) {
            out.push_back({prompts::executor_input(vocab, "", s.question), answer, Role::direct, i});
        }
        if (opts.executor) {
            out.push_back({prompts::executor_input(vocab, plan, s.question), answer, Role::executor, i});
        }
        if (opts.planner) {
            out.push_back({prompts::planner_input(vocab, s.question), vocab.encode(plan), Role::planner, i});
        }
        if (opts.final_step) {
            const std::string step = taskbench::final_step_question(s.question);
            out.push_back({prompts::executor_input(vocab, "", step), answer, Role::direct, i});
        }
    }
    return out;
}

std::vector<DiffusionPair> build_diffusion_corpus(const std::vector<taskbench::Sample>& samples,
                                                  const VocabSpec& vocab, const CorpusOptions& opts) {
    std::vector<DiffusionPair> out;
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const std::vector<int> answer = vocab.encode(s.gold);
        std::string plan = taskbench::derivation_plan(s.question);
        if (static_cast<int>(plan.size()) + 1 > opts.plan_len) plan.resize(opts.plan_len - 1);
        if (opts.direct) {
            out.push_back({prompts::executor_input(vocab, "", s.question), answer, opts.answer_block_len,
                           Role::direct, i});
        }
        if (opts.executor) {
            out.push_back({prompts::executor_input(vocab, plan, s.question), answer, opts.answer_block_len,
                           Role::executor, i});
        }
        if (opts.planner) {
            out.push_back({prompts::planner_input(vocab, s.question), vocab.encode(plan), opts.plan_len,
                           Role::planner, i});
        }
        if (opts.final_step) {
            const std::string step = taskbench::final_step_question(s.question);
            out.push_back({prompts::executor_input(vocab, "", step), answer, opts.answer_block_len, Role::direct, i});
        }
    }
    return out;
}

}  // namespace hybridlm::train
