#include "hybridlm/model.hpp"

#include <cmath>
#include <cstring>
#include <map>

#include "hybridlm/errors.hpp"
#include "hybridlm/rng.hpp"

namespace hybridlm {

using ad::Tensor;
using ad::TensorData;

std::string mode_name(ModelMode m) { return m == ModelMode::autoregressive ? "autoregressive" : "diffusion"; }

ModelMode mode_from_name(const std::string& name) {
    if (name == "autoregressive") return ModelMode::autoregressive;
    if (name == "diffusion") return ModelMode::diffusion;
    throw ConfigError("unknown model mode '" + name + "'");
}

void ModelConfig::validate() const {
    if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || d_ff <= 0 || max_len <= 0) {
        throw ConfigError("model config: all dimensions must be positive");
    }
    if (d_model % n_heads != 0) {
        throw ConfigError("model config: d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                          std::to_string(n_heads));
    }
    if (!(init_std > 0.0f)) throw ConfigError("model config: init_std must be positive");
}

SequenceInput SequenceInput::tokens(std::vector<int> ids) {
    SequenceInput s;
    s.is_embeddings = false;
    s.ids = std::move(ids);
    return s;
}

SequenceInput SequenceInput::embeddings(ad::Tensor rows) {
    SequenceInput s;
    s.is_embeddings = true;
    s.rows = std::move(rows);
    return s;
}

int SequenceInput::length() const {
    return is_embeddings ? rows.shape()[0] : static_cast<int>(ids.size());
}

LanguageModel::LanguageModel(ModelConfig cfg, VocabSpec vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
    cfg_.validate();
    vocab_.validate();
    init_params();
}

LanguageModel::LanguageModel(ModelConfig cfg, VocabSpec vocab,
                             std::vector<std::pair<std::string, ad::TensorData>> blocks)
    : cfg_(cfg), vocab_(std::move(vocab)) {
    cfg_.validate();
    vocab_.validate();
    wire_params(std::move(blocks));
}

namespace {
Tensor make_param(const std::string&, TensorData v) { return Tensor::leaf(std::move(v), true); }
}  // namespace

void LanguageModel::init_params() {
    Rng rng(cfg_.init_seed);
    const int d = cfg_.d_model;
    const int v = vocab_.size();
    const float w_std = cfg_.init_std;

    auto push = [&](const std::string& name, TensorData t) {
        params_.push_back({name, make_param(name, std::move(t)).node()});
    };

    push("tok_emb", TensorData::randn({v, d}, rng, w_std));
    push("pos_emb", TensorData::randn({cfg_.max_len, d}, rng, w_std));
    for (int l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        push(p + "ln1.g", TensorData({d}, 1.0f));
        push(p + "ln1.b", TensorData({d}, 0.0f));
        push(p + "attn.wq", TensorData::randn({d, d}, rng, w_std));
        push(p + "attn.wk", TensorData::randn({d, d}, rng, w_std));
        push(p + "attn.wv", TensorData::randn({d, d}, rng, w_std));
        push(p + "attn.wo", TensorData::randn({d, d}, rng, w_std));
        push(p + "attn.bq", TensorData({d}, 0.0f));
        push(p + "attn.bk", TensorData({d}, 0.0f));
        push(p + "attn.bv", TensorData({d}, 0.0f));
        push(p + "attn.bo", TensorData({d}, 0.0f));
        push(p + "ln2.g", TensorData({d}, 1.0f));
        push(p + "ln2.b", TensorData({d}, 0.0f));
        push(p + "ff.w1", TensorData::randn({d, cfg_.d_ff}, rng, w_std));
        push(p + "ff.b1", TensorData({cfg_.d_ff}, 0.0f));
        push(p + "ff.w2", TensorData::randn({cfg_.d_ff, d}, rng, w_std));
        push(p + "ff.b2", TensorData({d}, 0.0f));
    }
    push("lnf.g", TensorData({d}, 1.0f));
    push("lnf.b", TensorData({d}, 0.0f));
    push("head.w", TensorData::randn({d, v}, rng, w_std));
    push("head.b", TensorData({v}, 0.0f));
}

void LanguageModel::wire_params(std::vector<std::pair<std::string, ad::TensorData>> blocks) {
    init_params();
    std::map<std::string, ad::TensorData*> incoming;
    for (auto& [name, data] : blocks) incoming[name] = &data;
    for (auto& p : params_) {
        auto it = incoming.find(p.name);
        if (it == incoming.end()) throw ValidationError("checkpoint missing parameter block '" + p.name + "'");
        if (it->second->shape != p.node->value.shape) {
            throw ValidationError("checkpoint block '" + p.name + "' has shape " + it->second->shape_str() +
                                  ", expected " + p.node->value.shape_str());
        }
        p.node->value = std::move(*it->second);
        incoming.erase(it);
    }
    if (!incoming.empty()) {
        throw ValidationError("checkpoint has unknown parameter block '" + incoming.begin()->first + "'");
    }
}

std::vector<ad::NodePtr> LanguageModel::param_nodes() const {
    std::vector<ad::NodePtr> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.node);
    return out;
}

const ad::NodePtr& LanguageModel::param(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p.node;
    }
    throw ValidationError("no parameter named '" + name + "'");
}

void LanguageModel::set_trainable(bool trainable) {
    for (auto& p : params_) {
        p.node->requires_grad = trainable;
        if (trainable) {
            p.node->ensure_grad();
        } else {
            p.node->grad.clear();
            p.node->grad.shrink_to_fit();
        }
    }
}

bool LanguageModel::trainable() const { return !params_.empty() && params_.front().node->requires_grad; }

LanguageModel::Forward LanguageModel::forward_hidden(ad::Tape& tape, const SequenceInput& input) const {
    const int len = input.length();
    if (len < 1) throw LengthError("forward: empty input");
    if (len > cfg_.max_len) {
        throw LengthError("forward: input length " + std::to_string(len) + " exceeds max_len " +
                          std::to_string(cfg_.max_len));
    }
    if (input.is_embeddings && input.rows.shape()[1] != cfg_.d_model) {
        throw DimensionError("forward: embedding width " + std::to_string(input.rows.shape()[1]) +
                             " does not match d_model " + std::to_string(cfg_.d_model));
    }

    Tensor x;
    if (input.is_embeddings) {
        x = input.rows;
    } else {
        for (int id : input.ids) {
            if (id < 0 || id >= vocab_.size()) {
                throw ValidationError("forward: token id " + std::to_string(id) + " out of vocab range");
            }
        }
        x = ad::embedding_rows(tape, Tensor(param("tok_emb")), input.ids);
    }
    x = ad::add(tape, x, ad::slice_rows(tape, Tensor(param("pos_emb")), 0, len));

    std::vector<int> limits(len);
    for (int i = 0; i < len; ++i) limits[i] = cfg_.mode == ModelMode::autoregressive ? i + 1 : len;

    const int hd = cfg_.d_model / cfg_.n_heads;
    const float inv_sqrt_hd = 1.0f / std::sqrt(static_cast<float>(hd));

    for (int l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        Tensor a = ad::layer_norm(tape, x, Tensor(param(p + "ln1.g")), Tensor(param(p + "ln1.b")));
        Tensor q = ad::add_rowvec(tape, ad::matmul(tape, a, Tensor(param(p + "attn.wq"))), Tensor(param(p + "attn.bq")));
        Tensor k = ad::add_rowvec(tape, ad::matmul(tape, a, Tensor(param(p + "attn.wk"))), Tensor(param(p + "attn.bk")));
        Tensor v = ad::add_rowvec(tape, ad::matmul(tape, a, Tensor(param(p + "attn.wv"))), Tensor(param(p + "attn.bv")));

        std::vector<Tensor> head_outs;
        head_outs.reserve(cfg_.n_heads);
        for (int h = 0; h < cfg_.n_heads; ++h) {
            Tensor qh = ad::slice_cols(tape, q, h * hd, hd);
            Tensor kh = ad::slice_cols(tape, k, h * hd, hd);
            Tensor vh = ad::slice_cols(tape, v, h * hd, hd);
            Tensor scores = ad::scale(tape, ad::matmul_nt(tape, qh, kh), inv_sqrt_hd);
            Tensor probs = ad::softmax_rows(tape, scores, limits);
            head_outs.push_back(ad::matmul(tape, probs, vh));
        }
        Tensor att = ad::concat_cols(tape, head_outs);
        att = ad::add_rowvec(tape, ad::matmul(tape, att, Tensor(param(p + "attn.wo"))), Tensor(param(p + "attn.bo")));
        x = ad::add(tape, x, att);

        Tensor b = ad::layer_norm(tape, x, Tensor(param(p + "ln2.g")), Tensor(param(p + "ln2.b")));
        Tensor f = ad::add_rowvec(tape, ad::matmul(tape, b, Tensor(param(p + "ff.w1"))), Tensor(param(p + "ff.b1")));
        f = ad::gelu(tape, f);
        f = ad::add_rowvec(tape, ad::matmul(tape, f, Tensor(param(p + "ff.w2"))), Tensor(param(p + "ff.b2")));
        x = ad::add(tape, x, f);
    }

    Tensor hidden = ad::layer_norm(tape, x, Tensor(param("lnf.g")), Tensor(param("lnf.b")));
    Tensor logits = ad::add_rowvec(tape, ad::matmul(tape, hidden, Tensor(param("head.w"))), Tensor(param("head.b")));
    return {logits, hidden};
}

ad::TensorData LanguageModel::embed_tokens(const std::vector<int>& ids) const {
    const auto& emb = param("tok_emb")->value;
    const int d = cfg_.d_model;
    TensorData out({static_cast<int>(ids.size()), d});
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= vocab_.size()) {
            throw ValidationError("embed_tokens: token id " + std::to_string(ids[i]) + " out of vocab range");
        }
        std::memcpy(out.data.data() + i * d, emb.data.data() + static_cast<size_t>(ids[i]) * d, sizeof(float) * d);
    }
    return out;
}

int argmax_lowest(const std::vector<float>& row) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(row.size()); ++j) {
        if (row[j] > row[best]) best = j;
    }
    return best;
}

std::vector<int> greedy_decode_loop(const std::function<std::vector<float>(const std::vector<int>&)>& next_logits,
                                    int eos_id, int max_new) {
    std::vector<int> out;
    for (int i = 0; i < max_new; ++i) {
        const int tok = argmax_lowest(next_logits(out));
        if (tok == eos_id) break;
        out.push_back(tok);
    }
    return out;
}

std::vector<int> greedy_decode(const LanguageModel& model, const SequenceInput& prompt, int max_new,
                               bool* truncated) {
    if (model.config().mode != ModelMode::autoregressive) {
        throw ConfigError("greedy_decode requires an autoregressive model");
    }
    const int vocab = model.vocab().size();
    const int prompt_len = prompt.length();
    if (prompt_len > model.config().max_len) {
        throw LengthError("greedy_decode: prompt length " + std::to_string(prompt_len) + " exceeds max_len " +
                          std::to_string(model.config().max_len));
    }
    const int room = model.config().max_len - prompt_len;
    const int limit = max_new < room ? max_new : room;
    auto next_logits = [&](const std::vector<int>& generated) {
        ad::Tape tape;
        LanguageModel::Forward fwd;
        int len;
        if (prompt.is_embeddings) {
            ad::TensorData full = prompt.rows.value();
            if (!generated.empty()) {
                ad::TensorData gen = model.embed_tokens(generated);
                const int d = full.shape[1];
                full.shape[0] += gen.shape[0];
                full.data.insert(full.data.end(), gen.data.begin(), gen.data.end());
                (void)d;
            }
            len = full.shape[0];
            fwd = model.forward_hidden(tape, SequenceInput::embeddings(ad::Tensor::leaf(std::move(full), false)));
        } else {
            std::vector<int> toks = prompt.ids;
            toks.insert(toks.end(), generated.begin(), generated.end());
            len = static_cast<int>(toks.size());
            fwd = model.forward_hidden(tape, SequenceInput::tokens(std::move(toks)));
        }
        const auto& lv = fwd.logits.value();
        std::vector<float> row(lv.data.end() - vocab, lv.data.end());
        (void)len;
        return row;
    };
    std::vector<int> out = greedy_decode_loop(next_logits, model.vocab().eos_id, limit);
    if (truncated) *truncated = static_cast<int>(out.size()) == limit;
    return out;
}

}  // namespace hybridlm
