#include <doctest.h>

#include <cmath>

#include "hybridlm/checkpoint.hpp"
#include "hybridlm/errors.hpp"
#include "hybridlm/train.hpp"

using namespace hybridlm;
using namespace hybridlm::train;

namespace {

ModelConfig tiny(ModelMode mode, uint64_t seed = 5) {
    ModelConfig cfg;
    cfg.d_model = 32;
    cfg.n_layers = 2;
    cfg.n_heads = 4;
    cfg.d_ff = 64;
    cfg.max_len = 32;
    cfg.mode = mode;
    cfg.init_seed = seed;
    return cfg;
}

std::vector<ArPair> repeated_ar_pair(const VocabSpec& vocab, int copies) {
    ArPair pair;
    pair.prompt = {vocab.bos_id, 10, 11, vocab.sep_id};
    pair.target = {12, 13};
    std::vector<ArPair> corpus;
    for (int i = 0; i < copies; ++i) {
        pair.sample_index = static_cast<size_t>(i);
        corpus.push_back(pair);
    }
    return corpus;
}

}  // namespace

TEST_CASE("train_arm memorizes a single repeated pair") {
    const VocabSpec vocab = VocabSpec::char_vocab();
    LanguageModel model(tiny(ModelMode::autoregressive), vocab);
    auto corpus = repeated_ar_pair(vocab, 40);
    auto report = train_arm(model, corpus, 50, 3e-3f, 7);
    CHECK(report.final_heldout_exact == doctest::Approx(1.0));
    CHECK(report.epoch_losses.front() > report.epoch_losses.back());
}

TEST_CASE("train_arm with lr zero leaves loss and weights unchanged") {
    const VocabSpec vocab = VocabSpec::char_vocab();
    LanguageModel model(tiny(ModelMode::autoregressive), vocab);
    const std::string before = model_bytes(model);
    auto corpus = repeated_ar_pair(vocab, 20);
    TrainOptions opts;
    opts.final_eval = false;
    auto report = train_arm(model, corpus, 3, 0.0f, 7, opts);
    CHECK(model_bytes(model) == before);
    CHECK(std::abs(report.epoch_losses.front() - report.epoch_losses.back()) < 1e-6);
}

TEST_CASE("train_arm rejects an empty corpus and wrong mode") {
    const VocabSpec vocab = VocabSpec::char_vocab();
    LanguageModel arm(tiny(ModelMode::autoregressive), vocab);
    CHECK_THROWS_AS(train_arm(arm, {}, 1, 1e-3f, 1), ConfigError);
    LanguageModel ddlm(tiny(ModelMode::diffusion), vocab);
    auto corpus = repeated_ar_pair(vocab, 4);
    CHECK_THROWS_AS(train_arm(ddlm, corpus, 1, 1e-3f, 1), ConfigError);
}

TEST_CASE("diffusion loss at t=1 is plain mean cross entropy") {
    const VocabSpec vocab = VocabSpec::char_vocab();
    LanguageModel model(tiny(ModelMode::diffusion), vocab);
    DiffusionPair pair;
    pair.prompt = {vocab.bos_id, 10, vocab.sep_id};
    pair.target = {11, 12, 13};
    pair.block_len = 6;

    Rng rng(3);
    ad::Tape tape;
    ad::Tensor weighted = ddlm_pair_loss(tape, model, pair, 1.0, rng);

    // reference: mask everything by hand, plain mean CE, no 1/t factor
    const auto block = diffusion_block(pair, vocab);
    std::vector<int> input = pair.prompt;
    for (int i = 0; i < pair.block_len; ++i) input.push_back(vocab.mask_id);
    std::vector<int> targets(input.size(), 0);
    std::vector<bool> mask(input.size(), false);
    for (int i = 0; i < pair.block_len; ++i) {
        targets[pair.prompt.size() + i] = block[i];
        mask[pair.prompt.size() + i] = true;
    }
    ad::Tape tape2;
    auto fwd = model.forward_hidden(tape2, SequenceInput::tokens(input));
    ad::Tensor plain = ad::softmax_cross_entropy(tape2, fwd.logits, targets, mask);
    CHECK(weighted.value().data[0] == doctest::Approx(plain.value().data[0]).epsilon(1e-6));
}

TEST_CASE("diffusion mask redraw guard survives tiny masking ratios") {
    const VocabSpec vocab = VocabSpec::char_vocab();
    LanguageModel model(tiny(ModelMode::diffusion), vocab);
    DiffusionPair pair;
    pair.prompt = {vocab.bos_id, vocab.sep_id};
    pair.target = {11};
    pair.block_len = 4;
    Rng rng(17);
    for (int i = 0; i < 20; ++i) {
        ad::Tape tape;
        ad::Tensor loss = ddlm_pair_loss(tape, model, pair, 1e-4, rng);
        CHECK(std::isfinite(loss.value().data[0]));
    }
}

TEST_CASE("diffusion block budgets are enforced") {
    const VocabSpec vocab = VocabSpec::char_vocab();
    DiffusionPair pair;
    pair.prompt = {vocab.bos_id, vocab.sep_id};
    pair.target = {9, 9, 9, 9};
    pair.block_len = 4;  // target + eos needs 5
    CHECK_THROWS_AS(diffusion_block(pair, vocab), ConfigError);
    pair.block_len = 5;
    const auto block = diffusion_block(pair, vocab);
    CHECK(block == std::vector<int>{9, 9, 9, 9, vocab.eos_id});
}

TEST_CASE("train_ddlm memorizes a single repeated answer") {
    const VocabSpec vocab = VocabSpec::char_vocab();
    LanguageModel model(tiny(ModelMode::diffusion), vocab);
    std::vector<DiffusionPair> corpus;
    for (int i = 0; i < 40; ++i) {
        DiffusionPair pair;
        pair.prompt = {vocab.bos_id, 10, 11, vocab.sep_id};
        pair.target = {12, 13};
        pair.block_len = 6;
        pair.sample_index = static_cast<size_t>(i);
        corpus.push_back(pair);
    }
    TrainOptions opts;
    opts.eval_sampler_steps = 4;
    auto report = train_ddlm(model, corpus, 60, 3e-3f, 9, opts);
    CHECK(report.final_heldout_exact == doctest::Approx(1.0));
}

TEST_CASE("corpus builders split roles and respect block budgets") {
    const VocabSpec vocab = VocabSpec::char_vocab();
    std::vector<taskbench::Sample> samples = {{"28*31-5", "863", 2}, {"3+4", "7", 1}};

    CorpusOptions opts;
    opts.direct = opts.executor = opts.planner = true;
    opts.plan_len = 12;  // force plan truncation for the first sample
    auto ar = build_ar_corpus(samples, vocab, opts);
    REQUIRE(ar.size() == 6);
    CHECK(ar[0].role == Role::direct);
    CHECK(ar[1].role == Role::executor);
    CHECK(ar[2].role == Role::planner);
    CHECK(ar[0].sample_index == 0);
    CHECK(ar[3].sample_index == 1);
    // direct prompt layout: [bos, sep, question...]
    CHECK(ar[0].prompt[0] == vocab.bos_id);
    CHECK(ar[0].prompt[1] == vocab.sep_id);
    // ar planner target carries the full derivation
    CHECK(vocab.decode(ar[2].target) == "28*31=868;868-5=?");

    auto diff = build_diffusion_corpus(samples, vocab, opts);
    REQUIRE(diff.size() == 6);
    for (const auto& p : diff) {
        CHECK(static_cast<int>(p.target.size()) + 1 <= p.block_len);
        const auto block = diffusion_block(p, vocab);
        CHECK(static_cast<int>(block.size()) == p.block_len);
    }
    // truncated plan block still decodes to a prefix of the derivation
    CHECK(vocab.decode(diff[2].target) == std::string("28*31=868;8").substr(0, 11));
}
