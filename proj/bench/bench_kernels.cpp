// Serial reference kernels against the banded / OpenMP ones, plus one
// training step of a desk-scale model.
#include <benchmark/benchmark.h>

#include <vector>

#include "unifront/model/batching.hpp"
#include "unifront/model/kernels.hpp"
#include "unifront/model/transformer.hpp"

using namespace unifront;

namespace {

struct Operands {
  std::vector<float> A, B, C;
  Operands(int M, int N, int K) : A(static_cast<std::size_t>(M) * K), B(static_cast<std::size_t>(K) * N), C(static_cast<std::size_t>(M) * N) {
    Rng rng(1);
    for (auto& x : A) x = static_cast<float>(uniform01(rng) - 0.5);
    for (auto& x : B) x = static_cast<float>(uniform01(rng) - 0.5);
  }
};

void set_flops(benchmark::State& state, int M, int N, int K) {
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * M * N * K * static_cast<double>(state.iterations()),
                                                  benchmark::Counter::kIsRate, benchmark::Counter::kIs1000);
}

void BM_gemm_nn_reference(benchmark::State& state) {
  const int M = state.range(0), N = state.range(1), K = state.range(2);
  Operands o(M, N, K);
  for (auto _ : state) {
    kernels::reference::gemm_nn(M, N, K, o.A.data(), o.B.data(), o.C.data(), false);
    benchmark::DoNotOptimize(o.C.data());
  }
  set_flops(state, M, N, K);
}

void BM_gemm_nn(benchmark::State& state) {
  const int M = state.range(0), N = state.range(1), K = state.range(2);
  kernels::set_num_threads(static_cast<int>(state.range(3)));
  Operands o(M, N, K);
  for (auto _ : state) {
    kernels::gemm_nn(M, N, K, o.A.data(), o.B.data(), o.C.data(), false);
    benchmark::DoNotOptimize(o.C.data());
  }
  set_flops(state, M, N, K);
}

void BM_gemm_nt_reference(benchmark::State& state) {
  const int M = state.range(0), N = state.range(1), K = state.range(2);
  Operands o(M, N, K);  // B read as [N x K]
  for (auto _ : state) {
    kernels::reference::gemm_nt(M, N, K, o.A.data(), o.B.data(), o.C.data(), false);
    benchmark::DoNotOptimize(o.C.data());
  }
  set_flops(state, M, N, K);
}

void BM_gemm_nt(benchmark::State& state) {
  const int M = state.range(0), N = state.range(1), K = state.range(2);
  kernels::set_num_threads(static_cast<int>(state.range(3)));
  Operands o(M, N, K);
  for (auto _ : state) {
    kernels::gemm_nt(M, N, K, o.A.data(), o.B.data(), o.C.data(), false);
    benchmark::DoNotOptimize(o.C.data());
  }
  set_flops(state, M, N, K);
}

// token rows x d_model x ffn, the shapes the encoder FFN sees
#define SHAPES ->Args({1024, 256, 64})->Args({1024, 64, 256})->Args({256, 256, 256})
#define SHAPES_T ->Args({1024, 256, 64, 1})->Args({1024, 64, 256, 1})->Args({256, 256, 256, 1})

BENCHMARK(BM_gemm_nn_reference) SHAPES->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_gemm_nn) SHAPES_T->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_gemm_nt_reference) SHAPES->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_gemm_nt) SHAPES_T->Unit(benchmark::kMicrosecond);

void BM_train_step(benchmark::State& state) {
  ModelConfig c;
  c.layers = 3;
  c.d_model = 64;
  c.heads = 4;
  c.ffn_dim = 256;
  c.max_src_len = 32;
  c.max_tgt_len = 32;
  Transformer<float> model(c, 40, 40);
  Rng rng(1);
  model.initialize(rng);
  std::vector<EncodedPair> pairs;
  for (int i = 0; i < 64; ++i) {
    EncodedPair p;
    for (int j = 0; j < 12; ++j) p.src.push_back(4 + static_cast<int>(uniform_index(rng, 36)));
    p.tgt.push_back(kBos);
    for (int j = 0; j < 12; ++j) p.tgt.push_back(4 + static_cast<int>(uniform_index(rng, 36)));
    p.tgt.push_back(kEos);
    pairs.push_back(std::move(p));
  }
  const Batch batch = collate(pairs);
  for (auto _ : state) {
    model.zero_grad();
    benchmark::DoNotOptimize(model.forward_backward(batch, &rng));
  }
  state.counters["tokens/s"] = benchmark::Counter(batch.target_tokens() * static_cast<double>(state.iterations()),
                                                   benchmark::Counter::kIsRate);
}
BENCHMARK(BM_train_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
