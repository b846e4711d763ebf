#include <benchmark/benchmark.h>

#include "hybridlm/metrics.hpp"
#include "hybridlm/model.hpp"
#include "hybridlm/sampler.hpp"
#include "hybridlm/taskbench.hpp"

using namespace hybridlm;

namespace {

LanguageModel make_model(ModelMode mode, int d_model) {
    ModelConfig cfg;
    cfg.d_model = d_model;
    cfg.n_layers = 3;
    cfg.n_heads = 4;
    cfg.d_ff = 4 * d_model;
    cfg.max_len = 128;
    cfg.mode = mode;
    cfg.init_seed = 9;
    return LanguageModel(cfg, VocabSpec::char_vocab());
}

}  // namespace

static void BM_forward(benchmark::State& state) {
    LanguageModel model = make_model(ModelMode::autoregressive, static_cast<int>(state.range(0)));
    std::vector<int> toks;
    for (int i = 0; i < 64; ++i) toks.push_back(5 + i % 40);
    for (auto _ : state) {
        ad::Tape tape;
        auto fwd = model.forward_hidden(tape, SequenceInput::tokens(toks));
        benchmark::DoNotOptimize(fwd.logits.value().data.data());
    }
}
BENCHMARK(BM_forward)->Arg(48)->Arg(64)->Arg(128);

static void BM_denoise_64(benchmark::State& state) {
    LanguageModel model = make_model(ModelMode::diffusion, 64);
    SamplerConfig cfg;
    cfg.plan_len = 64;
    cfg.steps = static_cast<int>(state.range(0));
    const std::vector<int> prompt = {1, 10, 11, 12, 3};
    for (auto _ : state) {
        auto res = denoise(model, prompt, cfg);
        benchmark::DoNotOptimize(res.plan_tokens.data());
    }
}
BENCHMARK(BM_denoise_64)->Arg(1)->Arg(8);

static void BM_taskgen(benchmark::State& state) {
    for (auto _ : state) {
        auto samples = taskbench::generate({taskbench::TaskKind::arith_chain, 3, 200, 11});
        benchmark::DoNotOptimize(samples.data());
    }
}
BENCHMARK(BM_taskgen);

static void BM_repetition_metrics(benchmark::State& state) {
    std::vector<std::string> corpus;
    for (int i = 0; i < 100; ++i) {
        corpus.push_back("12*34=408;408-5=? step " + std::to_string(i) + " carry the one. check the sign.");
    }
    for (auto _ : state) {
        auto rep = metrics::repetition_report(corpus, 2);
        benchmark::DoNotOptimize(rep.lr_n);
    }
}
BENCHMARK(BM_repetition_metrics);

BENCHMARK_MAIN();
