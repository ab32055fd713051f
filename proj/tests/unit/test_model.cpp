#include <cmath>
#include <numeric>

#include "doctest.h"
#include "unifront/model/kernels.hpp"
#include "unifront/model/transformer.hpp"

using namespace unifront;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.layers = 2;
  c.d_model = 16;
  c.heads = 2;
  c.ffn_dim = 32;
  c.dropout = 0.0;
  c.max_src_len = 16;
  c.max_tgt_len = 16;
  c.seed = 7;
  return c;
}

std::vector<EncodedPair> toy_pairs() {
  return {{{4, 5, 6, 7}, {1, 5, 6, 2}}, {{4, 8, 9}, {1, 7, 8, 9, 5, 2}}, {{4, 5}, {1, 6, 2}}};
}

}  // namespace

TEST_CASE("kernels match the serial reference") {
  Rng rng(3);
  for (auto [M, N, K] : {std::tuple{1, 1, 1}, {5, 17, 3}, {33, 40, 29}, {64, 64, 64}}) {
    std::vector<double> A(M * K), B(K * N), Bt(N * K), At(K * M), c1(M * N, 0.5), c2(M * N, 0.5);
    for (auto* v : {&A, &B, &Bt, &At})
      for (auto& x : *v) x = uniform01(rng) - 0.5;
    kernels::gemm_nn(M, N, K, A.data(), B.data(), c1.data(), true);
    kernels::reference::gemm_nn(M, N, K, A.data(), B.data(), c2.data(), true);
    for (int i = 0; i < M * N; ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));
    kernels::gemm_nt(M, N, K, A.data(), Bt.data(), c1.data(), false);
    kernels::reference::gemm_nt(M, N, K, A.data(), Bt.data(), c2.data(), false);
    for (int i = 0; i < M * N; ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));
    kernels::gemm_tn(M, N, K, At.data(), B.data(), c1.data(), false);
    kernels::reference::gemm_tn(M, N, K, At.data(), B.data(), c2.data(), false);
    for (int i = 0; i < M * N; ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));
  }
}

TEST_CASE("finite-difference gradient check") {
  Transformer<double> model(tiny_config(), 10, 10);
  Rng init(1);
  model.initialize(init);
  const auto pairs = toy_pairs();
  const Batch batch = collate(pairs);
  model.zero_grad();
  const LossStats base = model.forward_backward(batch, nullptr);
  REQUIRE(base.tokens > 0);

  auto params = model.parameters();
  Rng pick(11);
  const double h = 1e-5;
  double worst = 0;
  for (int s = 0; s < 100; ++s) {
    auto* p = params[uniform_index(pick, params.size())];
    const std::size_t i = uniform_index(pick, p->size());
    const double saved = p->value[i];
    p->value[i] = saved + h;
    const double up = model.compute_loss(batch).mean();
    p->value[i] = saved - h;
    const double down = model.compute_loss(batch).mean();
    p->value[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double analytic = p->grad[i];
    const double scale = std::max(std::abs(numeric), std::abs(analytic));
    const double rel = scale < 1e-10 ? 0.0 : std::abs(numeric - analytic) / scale;
    INFO(p->name << "[" << i << "] analytic " << analytic << " numeric " << numeric);
    CHECK(rel <= 1e-3);
    worst = std::max(worst, rel);
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("decoder output is causal") {
  Transformer<double> model(tiny_config(), 10, 10);
  Rng init(2);
  model.initialize(init);
  std::vector<EncodedPair> a{{{4, 5, 6}, {1, 5, 6, 7, 8, 2}}};
  auto b = a;
  b[0].tgt[4] = 9;  // perturb position 4 of tgt_in
  const auto la = model.logits(collate(a));
  const auto lb = model.logits(collate(b));
  const int V = 10;
  for (int t = 0; t < 4; ++t)
    for (int v = 0; v < V; ++v) CHECK(la[t * V + v] == lb[t * V + v]);
  bool changed = false;
  for (int v = 0; v < V; ++v) changed |= la[4 * V + v] != lb[4 * V + v];
  CHECK(changed);
}

TEST_CASE("padding does not change loss or logits") {
  Transformer<double> model(tiny_config(), 10, 10);
  Rng init(3);
  model.initialize(init);
  const auto pairs = toy_pairs();
  const Batch plain = collate(pairs);
  const Batch padded = collate(pairs, 3, 2);
  CHECK(model.compute_loss(plain).loss_sum == doctest::Approx(model.compute_loss(padded).loss_sum).epsilon(1e-12));
  const auto lp = model.logits(plain);
  const auto lq = model.logits(padded);
  const int V = 10;
  for (int b = 0; b < plain.size; ++b)
    for (int t = 0; t < plain.tgt_len[b]; ++t)
      for (int v = 0; v < V; ++v)
        CHECK(lp[(b * plain.tgt_len_max + t) * V + v] ==
              doctest::Approx(lq[(b * padded.tgt_len_max + t) * V + v]).epsilon(1e-12));
}

TEST_CASE("attention rows are normalized") {
  Transformer<float> model(tiny_config(), 10, 10);
  Rng init(4);
  model.initialize(init);
  const Batch batch = collate(toy_pairs());
  for (const auto& layer : model.decoder_self_attention(batch)) {
    const int tk = batch.tgt_len_max;
    for (std::size_t r = 0; r < layer.size() / tk; ++r) {
      double sum = 0;
      for (int j = 0; j < tk; ++j) {
        CHECK(layer[r * tk + j] >= 0.0f);
        sum += layer[r * tk + j];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("incremental decoding matches the teacher-forced forward pass") {
  Transformer<double> model(tiny_config(), 10, 10);
  Rng init(5);
  model.initialize(init);
  std::vector<EncodedPair> one{{{4, 5, 6, 7}, {1, 5, 6, 7, 2}}};
  const auto full = model.logits(collate(one));
  const auto mem = model.encode(one[0].src);
  auto st = model.start();
  std::vector<double> lp;
  const int V = 10;
  for (int t = 0; t < 4; ++t) {
    model.step(mem, st, one[0].tgt[t], lp);
    const double* z = full.data() + t * V;
    const double mx = *std::max_element(z, z + V);
    double den = 0;
    for (int v = 0; v < V; ++v) den += std::exp(z[v] - mx);
    for (int v = 0; v < V; ++v) CHECK(lp[v] == doctest::Approx(z[v] - mx - std::log(den)).epsilon(1e-9));
  }
}

TEST_CASE("initial loss is near ln|V|") {
  ModelConfig c = tiny_config();
  c.d_model = 64;
  c.ffn_dim = 128;
  c.heads = 4;
  c.label_smoothing = 0.1;
  Transformer<float> model(c, 20, 30);
  Rng init(6);
  model.initialize(init);
  const double loss = model.compute_loss(collate(toy_pairs())).mean();
  CHECK(std::abs(loss - std::log(30.0)) <= 0.2 * std::log(30.0));
}

TEST_CASE("noam schedule") {
  CHECK(noam_lr(8000, 512, 8000) == doctest::Approx(4.941e-4).epsilon(1e-3));
  CHECK(noam_lr(400, 128, 400) == doctest::Approx(std::pow(128.0, -0.5) * std::pow(400.0, -0.5)));
  double prev = 0;
  for (int s = 1; s <= 400; ++s) {
    CHECK(noam_lr(s, 128, 400) >= prev);
    prev = noam_lr(s, 128, 400);
  }
  for (int s = 401; s <= 1000; ++s) {
    CHECK(noam_lr(s, 128, 400) <= prev);
    prev = noam_lr(s, 128, 400);
  }
}
