#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "finite_diff.hpp"
#include "hybridlm/checkpoint.hpp"
#include "hybridlm/errors.hpp"
#include "hybridlm/projector.hpp"
#include "hybridlm/prompts.hpp"

using namespace hybridlm;
using namespace hybridlm::projector;

namespace {

ModelConfig arm_cfg(uint64_t seed = 13) {
    ModelConfig cfg;
    cfg.d_model = 24;
    cfg.n_layers = 2;
    cfg.n_heads = 4;
    cfg.d_ff = 48;
    cfg.max_len = 40;
    cfg.mode = ModelMode::autoregressive;
    cfg.init_seed = seed;
    cfg.init_std = 0.15f;  // a random frozen net must still read its inputs
    return cfg;
}

ProjectorConfig proj_cfg() {
    ProjectorConfig cfg;
    cfg.d_ddlm = 16;
    cfg.d_arm = 24;
    cfg.d_hidden = 0;  // resolve to 4 * max = 96
    cfg.plan_len = 8;
    cfg.init_seed = 5;
    return cfg;
}

// Straight-line reimplementation of the two affine maps, double precision.
std::vector<double> straight_line_project(const Projector& p, const ad::TensorData& h, int row) {
    const int dd = p.cfg.d_ddlm, dh = p.cfg.d_hidden, da = p.cfg.d_arm;
    std::vector<double> hidden(dh, 0.0);
    for (int j = 0; j < dh; ++j) {
        double acc = p.b1->value.data[j];
        for (int k = 0; k < dd; ++k) acc += static_cast<double>(h.at(row, k)) * p.w1->value.at(k, j);
        const double x = acc;
        hidden[j] = x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
    }
    std::vector<double> out(da, 0.0);
    for (int j = 0; j < da; ++j) {
        double acc = p.b2->value.data[j];
        for (int k = 0; k < dh; ++k) acc += hidden[k] * p.w2->value.at(k, j);
        out[j] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("project shape and zero-weight behavior") {
    Projector p = Projector::init(proj_cfg());
    CHECK(p.cfg.d_hidden == 96);

    Rng rng(2);
    ad::TensorData h = ad::TensorData::randn({8, 16}, rng, 1.0f);
    ad::TensorData out = project(p, h);
    CHECK(out.shape == std::vector<int>{8, 24});

    // zero weights and biases -> zero matrix
    for (auto& n : p.param_nodes()) std::fill(n->value.data.begin(), n->value.data.end(), 0.0f);
    ad::TensorData zero = project(p, h);
    for (float v : zero.data) CHECK(v == 0.0f);
}

TEST_CASE("project rejects width mismatches") {
    Projector p = Projector::init(proj_cfg());
    Rng rng(2);
    ad::TensorData wrong = ad::TensorData::randn({4, 17}, rng, 1.0f);
    CHECK_THROWS_AS(project(p, wrong), DimensionError);
}

TEST_CASE("project matches an independent straight-line reimplementation") {
    Projector p = Projector::init(proj_cfg());
    Rng rng(44);
    ad::TensorData h = ad::TensorData::randn({5, 16}, rng, 0.7f);
    ad::TensorData out = project(p, h);
    for (int r = 0; r < 5; ++r) {
        const auto ref = straight_line_project(p, h, r);
        for (int c = 0; c < 24; ++c) {
            CHECK(std::abs(out.at(r, c) - ref[c]) < 1e-5);
        }
    }
}

TEST_CASE("projected output works for every plan length with one parameter set") {
    Projector p = Projector::init(proj_cfg());
    Rng rng(3);
    for (int plan : {8, 64, 128, 256}) {
        ad::TensorData h = ad::TensorData::randn({plan, 16}, rng, 0.5f);
        CHECK(project(p, h).shape == std::vector<int>{plan, 24});
    }
}

TEST_CASE("assemble layout: [bos, projected, sep, question] and the degenerate plan") {
    LanguageModel arm(arm_cfg(), VocabSpec::char_vocab());
    Projector p = Projector::init(proj_cfg());
    Rng rng(9);
    ad::TensorData h = ad::TensorData::randn({8, 16}, rng, 0.5f);
    ad::TensorData projected = project(p, h);
    const std::vector<int> question = {10, 11, 12};

    ad::TensorData rows = assemble_executor_input(projected, question, arm);
    CHECK(rows.shape == std::vector<int>{8 + 3 + 2, 24});

    // degenerate P = 0 equals the plain token layout [bos, sep, question]
    ad::TensorData empty;
    ad::TensorData degenerate = assemble_executor_input(empty, question, arm);
    std::vector<int> plain = {arm.vocab().bos_id, arm.vocab().sep_id, 10, 11, 12};
    ad::TensorData expected = arm.embed_tokens(plain);
    CHECK(degenerate.shape == expected.shape);
    CHECK(degenerate.data == expected.data);

    // row identity: bos row, projected rows, sep row, question rows
    ad::TensorData bos_row = arm.embed_tokens({arm.vocab().bos_id});
    for (int c = 0; c < 24; ++c) {
        CHECK(rows.at(0, c) == bos_row.at(0, c));
        CHECK(rows.at(1, c) == projected.at(0, c));
        CHECK(rows.at(9, c) == arm.embed_tokens({arm.vocab().sep_id}).at(0, c));
        CHECK(rows.at(10, c) == arm.embed_tokens({10}).at(0, c));
    }
}

TEST_CASE("assemble rejects over-length inputs") {
    LanguageModel arm(arm_cfg(), VocabSpec::char_vocab());
    Projector p = Projector::init(proj_cfg());
    Rng rng(9);
    ad::TensorData h = ad::TensorData::randn({39, 16}, rng, 0.5f);
    ad::TensorData projected = project(p, h);
    CHECK_THROWS_AS(assemble_executor_input(projected, {10, 11}, arm), LengthError);
}

TEST_CASE("round trip: true plan-token embeddings reproduce text-channel logits") {
    LanguageModel arm(arm_cfg(21), VocabSpec::char_vocab());
    const VocabSpec& vocab = arm.vocab();
    const std::vector<int> plan_toks = vocab.encode("3+4=?");
    const std::vector<int> question = vocab.encode("3+4");

    // text channel: [bos, plan, sep, question] as tokens
    std::vector<int> text_input = {vocab.bos_id};
    text_input.insert(text_input.end(), plan_toks.begin(), plan_toks.end());
    text_input.push_back(vocab.sep_id);
    text_input.insert(text_input.end(), question.begin(), question.end());
    ad::Tape t1;
    const auto text_logits = arm.forward_hidden(t1, SequenceInput::tokens(text_input)).logits.value();

    // latent channel fed the true plan-token embedding rows
    ad::TensorData fake_projected = arm.embed_tokens(plan_toks);
    ad::TensorData assembled = assemble_executor_input(fake_projected, question, arm);
    ad::Tape t2;
    const auto latent_logits =
        arm.forward_hidden(t2, SequenceInput::embeddings(ad::Tensor::leaf(assembled, false))).logits.value();

    REQUIRE(text_logits.shape == latent_logits.shape);
    for (size_t i = 0; i < text_logits.data.size(); ++i) {
        CHECK(std::abs(text_logits.data[i] - latent_logits.data[i]) < 1e-5f);
    }
}

namespace {

// Executor that has learned to read its plan: answer = the plan's first
// token, then stop. The latent channel must steer exactly this behavior.
LanguageModel plan_copying_arm() {
    LanguageModel arm(arm_cfg(31), VocabSpec::char_vocab());
    const VocabSpec& vocab = arm.vocab();
    std::vector<train::ArPair> corpus;
    size_t idx = 0;
    for (char digit = '0'; digit <= '9'; ++digit) {
        train::ArPair pair;
        pair.prompt = prompts::executor_input(vocab, std::string(1, digit), "0");
        pair.target = vocab.encode(std::string(1, digit));
        for (int copy = 0; copy < 4; ++copy) {
            pair.sample_index = idx++;
            corpus.push_back(pair);
        }
    }
    train::TrainOptions opts;
    opts.final_eval = false;
    train::train_arm(arm, corpus, 60, 3e-3f, 5, opts);
    arm.set_trainable(false);
    return arm;
}

}  // namespace

TEST_CASE("projector training: freeze invariant, memorization, gradient isolation") {
    LanguageModel arm = plan_copying_arm();
    const std::string arm_before = model_bytes(arm);

    Projector p = Projector::init(proj_cfg());
    Rng rng(8);
    std::vector<TrainRecord> records;
    TrainRecord r;
    r.question = arm.vocab().encode("0");
    r.plan_hidden = ad::TensorData::randn({8, 16}, rng, 0.6f);
    r.gold_answer = arm.vocab().encode("7");
    bool have_holdout = false;
    for (int i = 0; i < 40; ++i) {
        r.sample_index = static_cast<size_t>(i);
        records.push_back(r);
        have_holdout = have_holdout || taskbench::is_holdout_index(static_cast<size_t>(i));
    }
    REQUIRE(have_holdout);

    auto report = train_projector(p, arm, records, 200, 3e-3f, 17);
    CHECK(model_bytes(arm) == arm_before);                 // backbone bit-identical
    CHECK(report.final_heldout_exact == doctest::Approx(1.0));  // memorized via the latent path

    // lr = 0 leaves the projector bitwise unchanged
    Projector q = Projector::init(proj_cfg());
    std::ostringstream os_before;
    write_checkpoint(os_before, projector_checkpoint(q));
    train_projector(q, arm, records, 2, 0.0f, 17);
    std::ostringstream os_after;
    write_checkpoint(os_after, projector_checkpoint(q));
    CHECK(os_before.str() == os_after.str());
}

TEST_CASE("projector gradients check out against finite differences through the frozen arm") {
    LanguageModel arm(arm_cfg(41), VocabSpec::char_vocab());
    arm.set_trainable(false);
    ProjectorConfig narrow = proj_cfg();
    narrow.d_hidden = 20;  // keep the FD sweep cheap
    Projector p = Projector::init(narrow);
    p.set_trainable(true);

    Rng rng(15);
    TrainRecord r;
    r.question = arm.vocab().encode("9-2");
    r.plan_hidden = ad::TensorData::randn({4, 16}, rng, 0.6f);
    r.gold_answer = arm.vocab().encode("7");
    r.sample_index = 1;

    ad::Tape tape;
    ad::Tensor loss = projector_record_loss(tape, p, arm, r);
    tape.backward(loss);

    auto loss_value = [&]() {
        ad::Tape t2;
        return static_cast<double>(projector_record_loss(t2, p, arm, r).value().data[0]);
    };
    for (auto& node : p.param_nodes()) {
        auto fd = testutil::fd_gradient(node, loss_value);
        CHECK(testutil::max_grad_rel_err(node->grad, fd) < 1e-3);
    }
    // backbone accumulated nothing
    for (const auto& bp : arm.params()) CHECK(bp.node->grad.empty());
}

TEST_CASE("projector checkpoint round trip") {
    Projector p = Projector::init(proj_cfg());
    const auto path = std::filesystem::temp_directory_path() / "hybridlm_test_proj.ckpt";
    std::filesystem::remove(path);
    save_projector(path, p);
    Projector loaded = load_projector(path);
    CHECK(loaded.cfg.d_ddlm == p.cfg.d_ddlm);
    CHECK(loaded.cfg.d_hidden == p.cfg.d_hidden);
    CHECK(loaded.cfg.plan_len == p.cfg.plan_len);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(loaded.param_nodes()[i]->value.data == p.param_nodes()[i]->value.data);
    }
    std::filesystem::remove(path);
}
