#include "hybridlm/projector.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "hybridlm/errors.hpp"
#include "hybridlm/optim.hpp"
#include "hybridlm/rng.hpp"

namespace hybridlm::projector {

Projector Projector::init(const ProjectorConfig& cfg) {
    if (cfg.d_ddlm <= 0 || cfg.d_arm <= 0) throw ConfigError("projector: widths must be positive");
    if (cfg.plan_len <= 0) throw ConfigError("projector: plan_len must be positive");
    const int dh = cfg.resolved_hidden();
    Rng rng(mix_seed(cfg.init_seed, 0x9a0bceefULL));
    Projector p;
    p.cfg = cfg;
    p.cfg.d_hidden = dh;
    p.w1 = ad::Tensor::leaf(ad::TensorData::randn({cfg.d_ddlm, dh}, rng, 0.02f), true).node();
    p.b1 = ad::Tensor::leaf(ad::TensorData({dh}, 0.0f), true).node();
    p.w2 = ad::Tensor::leaf(ad::TensorData::randn({dh, cfg.d_arm}, rng, 0.02f), true).node();
    p.b2 = ad::Tensor::leaf(ad::TensorData({cfg.d_arm}, 0.0f), true).node();
    return p;
}

std::vector<NamedParam> Projector::named_params() const {
    return {{"proj.w1", w1}, {"proj.b1", b1}, {"proj.w2", w2}, {"proj.b2", b2}};
}

void Projector::set_trainable(bool trainable) {
    for (auto& n : param_nodes()) {
        n->requires_grad = trainable;
        if (trainable) {
            n->ensure_grad();
        } else {
            n->grad.clear();
        }
    }
}

ad::Tensor project(ad::Tape& tape, const Projector& p, const ad::Tensor& plan_hidden) {
    if (plan_hidden.shape().size() != 2 || plan_hidden.shape()[1] != p.cfg.d_ddlm) {
        throw DimensionError("project: plan_hidden " + plan_hidden.value().shape_str() + " does not match d_ddlm " +
                             std::to_string(p.cfg.d_ddlm));
    }
    ad::Tensor h = ad::add_rowvec(tape, ad::matmul(tape, plan_hidden, ad::Tensor(p.w1)), ad::Tensor(p.b1));
    h = ad::gelu(tape, h);
    return ad::add_rowvec(tape, ad::matmul(tape, h, ad::Tensor(p.w2)), ad::Tensor(p.b2));
}

ad::TensorData project(const Projector& p, const ad::TensorData& plan_hidden) {
    ad::Tape tape;
    return project(tape, p, ad::Tensor::leaf(plan_hidden, false)).value();
}

ad::Tensor assemble_executor_input(ad::Tape& tape, const ad::Tensor& projected, const std::vector<int>& question,
                                   const LanguageModel& arm) {
    const VocabSpec& vocab = arm.vocab();
    const int p_rows = projected.valid() ? projected.shape()[0] : 0;
    const int total = p_rows + static_cast<int>(question.size()) + 2;
    if (total > arm.config().max_len) {
        throw LengthError("assemble_executor_input: " + std::to_string(total) + " rows exceed executor max_len " +
                          std::to_string(arm.config().max_len));
    }
    if (projected.valid() && projected.shape()[1] != arm.config().d_model) {
        throw DimensionError("assemble_executor_input: projected width " + std::to_string(projected.shape()[1]) +
                             " does not match executor d_model " + std::to_string(arm.config().d_model));
    }
    ad::Tensor emb(arm.param("tok_emb"));
    std::vector<ad::Tensor> parts;
    parts.push_back(ad::embedding_rows(tape, emb, {vocab.bos_id}));
    if (projected.valid() && p_rows > 0) parts.push_back(projected);
    parts.push_back(ad::embedding_rows(tape, emb, {vocab.sep_id}));
    if (!question.empty()) parts.push_back(ad::embedding_rows(tape, emb, question));
    return ad::concat_rows(tape, parts);
}

ad::TensorData assemble_executor_input(const ad::TensorData& projected, const std::vector<int>& question,
                                       const LanguageModel& arm) {
    ad::Tape tape;
    ad::Tensor proj;
    if (projected.numel() > 0) proj = ad::Tensor::leaf(projected, false);
    return assemble_executor_input(tape, proj, question, arm).value();
}

ad::Tensor projector_record_loss(ad::Tape& tape, const Projector& p, const LanguageModel& arm,
                                 const TrainRecord& record) {
    if (record.gold_answer.empty()) throw ConfigError("projector record: empty gold answer");
    const VocabSpec& vocab = arm.vocab();

    ad::Tensor hidden_leaf = ad::Tensor::leaf(record.plan_hidden, false);
    ad::Tensor projected = project(tape, p, hidden_leaf);
    ad::Tensor prefix = assemble_executor_input(tape, projected, record.question, arm);

    // teacher forcing: append gold answer embeddings, predict answer + eos
    ad::Tensor answer_rows = ad::embedding_rows(tape, ad::Tensor(arm.param("tok_emb")), record.gold_answer);
    ad::Tensor full = ad::concat_rows(tape, {prefix, answer_rows});

    const int prefix_len = prefix.shape()[0];
    const int n = full.shape()[0];
    auto fwd = arm.forward_hidden(tape, SequenceInput::embeddings(full));

    std::vector<int> targets(n, 0);
    std::vector<bool> mask(n, false);
    for (size_t k = 0; k < record.gold_answer.size(); ++k) {
        targets[prefix_len - 1 + static_cast<int>(k)] = record.gold_answer[k];
        mask[prefix_len - 1 + static_cast<int>(k)] = true;
    }
    targets[n - 1] = vocab.eos_id;
    mask[n - 1] = true;
    return ad::softmax_cross_entropy(tape, fwd.logits, targets, mask);
}

train::TrainingReport train_projector(Projector& p, const LanguageModel& arm, const std::vector<TrainRecord>& records,
                                      int epochs, float lr, uint64_t seed, const ProjectorTrainOptions& opts) {
    if (records.empty()) throw ConfigError("train_projector: empty train set");
    if (arm.trainable()) throw ConfigError("train_projector: executor backbone must be frozen");
    if (arm.config().mode != ModelMode::autoregressive) {
        throw ConfigError("train_projector: executor must be autoregressive");
    }

    const auto t0 = std::chrono::steady_clock::now();
    p.set_trainable(true);

    std::vector<size_t> train_idx, holdout_idx;
    for (size_t i = 0; i < records.size(); ++i) {
        (taskbench::is_holdout_index(records[i].sample_index) ? holdout_idx : train_idx).push_back(i);
    }
    if (train_idx.empty()) throw ConfigError("train_projector: training split is empty");

    std::optional<ad::Adam> adam;
    if (lr > 0.0f) {
        ad::AdamConfig acfg;
        acfg.lr = lr;
        adam.emplace(p.param_nodes(), acfg);
    } else if (lr < 0.0f) {
        throw ConfigError("train_projector: learning rate must be >= 0");
    }

    train::TrainingReport report;
    report.train_pairs = static_cast<int>(train_idx.size());
    report.heldout_pairs = static_cast<int>(holdout_idx.size());

    Rng order_rng(mix_seed(seed, 0x9d0c));
    std::vector<size_t> order = train_idx;
    const int batch = std::max(1, opts.batch_size);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[order_rng.next_below(k)]);
        double loss_sum = 0.0;
        int in_batch = 0;
        if (adam) adam->zero_grad();
        for (size_t k = 0; k < order.size(); ++k) {
            ad::Tape tape;
            ad::Tensor loss = projector_record_loss(tape, p, arm, records[order[k]]);
            const float lv = loss.value().data[0];
            if (!std::isfinite(lv)) throw ValidationError("projector loss is not finite");
            loss_sum += lv;
            if (adam) {
                tape.backward(loss);
                ++in_batch;
                if (in_batch == batch || k + 1 == order.size()) {
                    adam->step(1.0f / static_cast<float>(in_batch));
                    adam->zero_grad();
                    in_batch = 0;
                }
            }
        }
        report.epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));

        if (opts.check_frozen) {
            for (const auto& bp : arm.params()) {
                if (bp.node->requires_grad || !bp.node->grad.empty()) {
                    throw ValidationError("frozen-violation: backbone parameter '" + bp.name +
                                          "' accumulated gradient during projector training");
                }
            }
        }
    }

    if (opts.final_eval && !holdout_idx.empty()) {
        std::vector<size_t> eval_set = holdout_idx;
        if (static_cast<int>(eval_set.size()) > opts.max_eval_samples) {
            eval_set.resize(static_cast<size_t>(opts.max_eval_samples));
        }
        p.set_trainable(false);
        int hits = 0;
        for (size_t idx : eval_set) {
            const TrainRecord& r = records[idx];
            ad::TensorData projected = project(p, r.plan_hidden);
            ad::TensorData prefix = assemble_executor_input(projected, r.question, arm);
            std::vector<int> got = greedy_decode(arm, SequenceInput::embeddings(ad::Tensor::leaf(prefix, false)),
                                                 static_cast<int>(r.gold_answer.size()) + 8);
            hits += got == r.gold_answer ? 1 : 0;
        }
        report.final_heldout_exact = static_cast<double>(hits) / static_cast<double>(eval_set.size());
        report.per_role_exact = nlohmann::json{{"latent", report.final_heldout_exact}};
    } else {
        report.per_role_exact = nlohmann::json::object();
    }
    p.set_trainable(false);
    report.cpu_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

Checkpoint projector_checkpoint(const Projector& p) {
    Checkpoint ckpt;
    ckpt.header = nlohmann::json{{"kind", "projector"},
                                 {"format_version", kCheckpointVersion},
                                 {"d_ddlm", p.cfg.d_ddlm},
                                 {"d_hidden", p.cfg.d_hidden},
                                 {"d_arm", p.cfg.d_arm},
                                 {"plan_len", p.cfg.plan_len},
                                 {"init_seed", p.cfg.init_seed}};
    for (const auto& np : p.named_params()) ckpt.blocks.emplace_back(np.name, np.node->value);
    return ckpt;
}

Projector projector_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.header.value("kind", "") != "projector") throw ValidationError("checkpoint is not a projector");
    ProjectorConfig cfg;
    cfg.d_ddlm = ckpt.header.at("d_ddlm").get<int>();
    cfg.d_hidden = ckpt.header.at("d_hidden").get<int>();
    cfg.d_arm = ckpt.header.at("d_arm").get<int>();
    cfg.plan_len = ckpt.header.at("plan_len").get<int>();
    cfg.init_seed = ckpt.header.value("init_seed", static_cast<uint64_t>(1));
    Projector p = Projector::init(cfg);
    for (const auto& [name, data] : ckpt.blocks) {
        ad::NodePtr target;
        if (name == "proj.w1") target = p.w1;
        else if (name == "proj.b1") target = p.b1;
        else if (name == "proj.w2") target = p.w2;
        else if (name == "proj.b2") target = p.b2;
        else throw ValidationError("projector checkpoint has unknown block '" + name + "'");
        if (target->value.shape != data.shape) {
            throw ValidationError("projector block '" + name + "' has shape " + data.shape_str());
        }
        target->value = data;
    }
    return p;
}

void save_projector(const std::filesystem::path& path, const Projector& p) {
    save_checkpoint(path, projector_checkpoint(p));
}

Projector load_projector(const std::filesystem::path& path) { return projector_from_checkpoint(load_checkpoint(path)); }

}  // namespace hybridlm::projector
