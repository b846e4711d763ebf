#include <benchmark/benchmark.h>

#include "hybridlm/autodiff.hpp"
#include "hybridlm/kernels.hpp"
#include "hybridlm/rng.hpp"

using namespace hybridlm;

static void BM_matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    std::vector<float> a(static_cast<size_t>(n) * n), b(a.size()), c(a.size());
    for (auto& v : a) v = rng.next_float();
    for (auto& v : b) v = rng.next_float();
    for (auto _ : state) {
        kern::matmul(a.data(), b.data(), c.data(), n, n, n, false);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n) * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

static void BM_matmul_nt(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(2);
    std::vector<float> a(static_cast<size_t>(n) * n), b(a.size()), c(a.size());
    for (auto& v : a) v = rng.next_float();
    for (auto& v : b) v = rng.next_float();
    for (auto _ : state) {
        kern::matmul_nt(a.data(), b.data(), c.data(), n, n, n, false);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n) * n * n);
}
BENCHMARK(BM_matmul_nt)->Arg(64)->Arg(128);

static void BM_softmax_row(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(3);
    std::vector<float> row(n);
    for (auto _ : state) {
        for (auto& v : row) v = rng.next_float();
        kern::softmax_row(row.data(), n, n);
        benchmark::DoNotOptimize(row.data());
    }
}
BENCHMARK(BM_softmax_row)->Arg(64)->Arg(512);

static void BM_gelu(benchmark::State& state) {
    Rng rng(4);
    std::vector<float> x(4096), y(4096);
    for (auto& v : x) v = rng.next_normal();
    for (auto _ : state) {
        kern::gelu(x.data(), y.data(), x.size());
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_gelu);

static void BM_layer_norm_row(benchmark::State& state) {
    const int n = 512;
    Rng rng(5);
    std::vector<float> x(n), g(n, 1.0f), b(n, 0.0f), y(n);
    for (auto& v : x) v = rng.next_normal();
    float mean, rstd;
    for (auto _ : state) {
        kern::layer_norm_row(x.data(), g.data(), b.data(), y.data(), n, 1e-5f, &mean, &rstd);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_layer_norm_row);
