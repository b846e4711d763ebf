#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hybridlm/autodiff.hpp"
#include "hybridlm/vocab.hpp"

namespace hybridlm {

enum class ModelMode { autoregressive, diffusion };

std::string mode_name(ModelMode m);
ModelMode mode_from_name(const std::string& name);

struct ModelConfig {
    int d_model = 128;
    int n_layers = 4;
    int n_heads = 4;
    int d_ff = 512;
    int max_len = 384;
    ModelMode mode = ModelMode::autoregressive;
    uint64_t init_seed = 1;
    float init_std = 0.08f;

    void validate() const;
};

struct NamedParam {
    std::string name;
    ad::NodePtr node;
};

// Input to a forward pass: either token ids or a pre-built embedding matrix.
// Embedding input is the latent channel's injection point and must be asked
// for explicitly.
struct SequenceInput {
    static SequenceInput tokens(std::vector<int> ids);
    static SequenceInput embeddings(ad::Tensor rows);

    bool is_embeddings = false;
    std::vector<int> ids;
    ad::Tensor rows;  // [L x d_model] graph node when is_embeddings

    int length() const;
};

// Decoder-only transformer with learned absolute positions and pre-LN
// blocks. Mode picks the attention mask: strictly causal for autoregressive,
// full for diffusion. One forward implementation serves training and
// inference; inference simply runs with no trainable leaves on the tape.
class LanguageModel {
public:
    LanguageModel(ModelConfig cfg, VocabSpec vocab);
    LanguageModel(ModelConfig cfg, VocabSpec vocab, std::vector<std::pair<std::string, ad::TensorData>> blocks);

    const ModelConfig& config() const { return cfg_; }
    const VocabSpec& vocab() const { return vocab_; }

    std::vector<NamedParam>& params() { return params_; }
    const std::vector<NamedParam>& params() const { return params_; }
    std::vector<ad::NodePtr> param_nodes() const;
    const ad::NodePtr& param(const std::string& name) const;

    void set_trainable(bool trainable);
    bool trainable() const;

    struct Forward {
        ad::Tensor logits;  // [L x V]
        ad::Tensor hidden;  // [L x d_model], final layer after last norm
    };
    Forward forward_hidden(ad::Tape& tape, const SequenceInput& input) const;

    // Token-embedding rows for assembling embedding-matrix inputs.
    ad::TensorData embed_tokens(const std::vector<int>& ids) const;

private:
    ModelConfig cfg_;
    VocabSpec vocab_;
    std::vector<NamedParam> params_;

    void init_params();
    void wire_params(std::vector<std::pair<std::string, ad::TensorData>> blocks);
};

// Greedy argmax decoding, ties broken by the lowest token id. Generation
// stops at eos (not included in the output) or after max_new tokens.
// The functional core takes a callback that maps the generated suffix to the
// next-token logits row, which lets tests rig arbitrary models.
std::vector<int> greedy_decode_loop(const std::function<std::vector<float>(const std::vector<int>&)>& next_logits,
                                    int eos_id, int max_new);
// truncated (optional out) reports that generation hit max_new or the model's
// max_len without seeing eos.
std::vector<int> greedy_decode(const LanguageModel& model, const SequenceInput& prompt, int max_new,
                               bool* truncated = nullptr);

int argmax_lowest(const std::vector<float>& row);

}  // namespace hybridlm
