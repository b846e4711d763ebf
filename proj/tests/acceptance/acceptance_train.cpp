// Acceptance suite, trainability criterion: level-1 arithmetic, 10k-pair
// training collections, ARM-only and DDLM-only held-out exact match.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#include "acceptance_util.hpp"
#include "hybridlm/taskbench.hpp"
#include "hybridlm/train.hpp"

using namespace hybridlm;

namespace {

// The level-1 question space holds ~360 unique chains, so a 10k-sample
// training collection cycles it; the 90/10 split stays index-based.
std::vector<taskbench::Sample> level1_collection(int size) {
    const auto uniques = taskbench::generate({taskbench::TaskKind::arith_chain, 1, 300, 7});
    std::vector<taskbench::Sample> out;
    out.reserve(size);
    for (int i = 0; i < size; ++i) out.push_back(uniques[i % uniques.size()]);
    return out;
}

ModelConfig level1_model(ModelMode mode, uint64_t seed) {
    ModelConfig cfg;
    cfg.d_model = 64;
    cfg.n_layers = 3;
    cfg.n_heads = 4;
    cfg.d_ff = 256;
    cfg.max_len = 64;
    cfg.mode = mode;
    cfg.init_seed = seed;
    cfg.init_std = 0.08f;
    return cfg;
}

}  // namespace

TEST_CASE("criterion 7: level-1 trainability, arm >= 90 and ddlm >= 80 within the CPU budget") {
    acceptance::Criterion crit(7, "arm-only >= 0.90, ddlm-only (8-step) >= 0.80, total CPU < 60 min");

    const auto samples = level1_collection(10000);
    const VocabSpec vocab = VocabSpec::char_vocab();

    train::CorpusOptions copts;
    copts.direct = true;
    copts.executor = false;
    copts.planner = false;
    copts.answer_block_len = 8;

    // independent models, single-threaded each; threads only overlap wall time
    LanguageModel arm(level1_model(ModelMode::autoregressive, 11), vocab);
    LanguageModel ddlm(level1_model(ModelMode::diffusion, 12), vocab);
    train::TrainingReport arm_report, ddlm_report;

    std::thread arm_thread([&]() {
        const auto corpus = train::build_ar_corpus(samples, vocab, copts);
        train::TrainOptions opts;
        opts.max_eval_samples = 600;
        arm_report = train::train_arm(arm, corpus, 3, 1e-3f, 21, opts);
    });
    std::thread ddlm_thread([&]() {
        const auto corpus = train::build_diffusion_corpus(samples, vocab, copts);
        train::TrainOptions opts;
        opts.eval_sampler_steps = 8;
        opts.max_eval_samples = 400;
        ddlm_report = train::train_ddlm(ddlm, corpus, 8, 1e-3f, 22, opts);
    });
    arm_thread.join();
    ddlm_thread.join();

    MESSAGE("arm heldout exact: ", arm_report.final_heldout_exact, ", cpu ", arm_report.cpu_seconds, "s");
    MESSAGE("ddlm heldout exact: ", ddlm_report.final_heldout_exact, ", cpu ", ddlm_report.cpu_seconds, "s");

    const bool arm_ok = arm_report.final_heldout_exact >= 0.90;
    const bool ddlm_ok = ddlm_report.final_heldout_exact >= 0.80;
    const double total_cpu = arm_report.cpu_seconds + ddlm_report.cpu_seconds;
    const bool in_budget = total_cpu < 3600.0;
    CHECK(arm_ok);
    CHECK(ddlm_ok);
    CHECK(in_budget);
    crit.report(arm_ok && ddlm_ok && in_budget);
}
