#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "unifront/error.hpp"
#include "unifront/model/batching.hpp"
#include "unifront/model/checkpoint.hpp"
#include "unifront/model/decode.hpp"
#include "unifront/model/trainer.hpp"

using namespace unifront;
namespace fs = std::filesystem;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.layers = 2;
  c.d_model = 32;
  c.heads = 4;
  c.ffn_dim = 64;
  c.dropout = 0.0;
  c.max_src_len = 24;
  c.max_tgt_len = 24;
  c.seed = 5;
  return c;
}

std::vector<PronunciationEntry> tiny_corpus() {
  std::vector<PronunciationEntry> out;
  const char* words[][2] = {{"pata", "p a t a"}, {"kiso", "k i s o"}, {"tamu", "t a m u"}, {"sopi", "s o p i"},
                            {"muka", "m u k a"}, {"pito", "p i t o"}};
  for (auto& [t, p] : words) {
    PronunciationEntry e;
    e.locale = Locale::parse("qr-xa");
    e.text = t;
    e.pron = PhonemeSeq::parse(p);
    out.push_back(e);
  }
  return out;
}

Checkpoint random_checkpoint() {
  const auto corpus = tiny_corpus();
  Vocab v = Vocab::build(corpus);
  Transformer<float> m(small_config(), static_cast<int>(v.source.size()), static_cast<int>(v.target.size()));
  Rng rng(small_config().seed);
  m.initialize(rng);
  return Checkpoint{std::move(v), std::move(m), 0, "", std::nullopt};
}

std::vector<int> random_src(Rng& rng, const Vocab& v) {
  std::vector<int> s = {*v.source.find("<qr-xa>")};
  const std::size_t n = 1 + uniform_index(rng, 8);
  for (std::size_t i = 0; i < n; ++i) s.push_back(kNumSpecials + 1 + static_cast<int>(uniform_index(rng, v.source.size() - kNumSpecials - 1)));
  return s;
}

}  // namespace

TEST_CASE("batching") {
  std::vector<EncodedPair> pairs(10, EncodedPair{std::vector<int>(10, 5), std::vector<int>(11, 5)});
  CHECK(make_batches(pairs, 4096, 1).size() == 1);

  std::vector<EncodedPair> long_pairs(4, EncodedPair{std::vector<int>(100, 5), std::vector<int>(101, 5)});
  const auto one_each = make_batches(long_pairs, 150, 1);
  CHECK(one_each.size() == 4);

  std::vector<EncodedPair> mixed;
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    mixed.push_back({std::vector<int>(1 + uniform_index(rng, 30), 5), std::vector<int>(2 + uniform_index(rng, 30), 5)});
  }
  std::vector<std::size_t> seen;
  for (const auto& b : make_batches(mixed, 256, 9)) seen.insert(seen.end(), b.begin(), b.end());
  std::sort(seen.begin(), seen.end());
  std::vector<std::size_t> want(mixed.size());
  std::iota(want.begin(), want.end(), 0);
  CHECK(seen == want);
  CHECK(make_batches(mixed, 256, 9) == make_batches(mixed, 256, 9));
  CHECK_THROWS_AS(make_batches(long_pairs, 50, 1), ModelError);
}

TEST_CASE("checkpoint round trip") {
  const auto ck = random_checkpoint();
  const fs::path dir = fs::temp_directory_path() / "unifront_ckpt_test";
  fs::create_directories(dir);
  save_checkpoint(ck, dir / "a.ckpt");
  const auto back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.vocab == ck.vocab);
  CHECK(back.config() == ck.config());
  CHECK(parameter_bytes(back.model) == parameter_bytes(ck.model));
  save_checkpoint(back, dir / "b.ckpt");
  CHECK(parameter_bytes(load_checkpoint(dir / "b.ckpt").model) == parameter_bytes(ck.model));

  std::ofstream(dir / "bad.ckpt") << "nope";
  CHECK_THROWS(load_checkpoint(dir / "bad.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("greedy and beam decoding") {
  const auto ck = random_checkpoint();
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const auto src = random_src(rng, ck.vocab);
    const auto g = greedy_decode(ck.model, src, 12);
    const auto b1 = beam_decode(ck.model, src, 1, 12);
    CHECK(g.ids == b1.ids);
    CHECK(g.score == doctest::Approx(b1.score));
    const auto b4 = beam_decode(ck.model, src, 4, 12);
    CHECK(b4.score >= g.score - 1e-9);
    CHECK(greedy_decode(ck.model, src, 12).ids == g.ids);
  }
  const auto src = random_src(rng, ck.vocab);
  const auto t = greedy_decode(ck.model, src, 1);
  CHECK(t.ids.size() <= 1);
  if (!t.ids.empty()) CHECK(t.truncated);

  std::vector<std::vector<int>> srcs;
  for (int i = 0; i < 6; ++i) srcs.push_back(random_src(rng, ck.vocab));
  const auto all = decode_all(ck.model, srcs, 3, 12);
  for (std::size_t i = 0; i < srcs.size(); ++i) CHECK(all[i].ids == beam_decode(ck.model, srcs[i], 3, 12).ids);
}

TEST_CASE("training is reproducible and resumable") {
  const auto corpus = tiny_corpus();
  TrainConfig tc;
  tc.max_steps = 12;
  tc.warmup_steps = 4;
  tc.tokens_per_batch = 24;
  tc.checkpoint_every = 0;
  tc.dev_eval_every = 0;
  ModelConfig mc = small_config();
  mc.dropout = 0.1;
  const auto a = train(mc, tc, corpus, {}, {});
  const auto b = train(mc, tc, corpus, {}, {});
  CHECK(a.step_losses == b.step_losses);
  CHECK(a.steps == 12);

  const fs::path dir = fs::temp_directory_path() / "unifront_resume_test";
  fs::remove_all(dir);
  TrainConfig half = tc;
  half.max_steps = 6;
  TrainOptions first;
  first.out_dir = dir.string();
  train(mc, half, corpus, {}, first);
  const auto mid = load_checkpoint(dir / "last.ckpt");
  CHECK(mid.step == 6);
  TrainOptions rest;
  rest.resume = &mid;
  const auto resumed = train(mc, tc, corpus, {}, rest);
  REQUIRE(resumed.step_losses.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(resumed.step_losses[i] == doctest::Approx(a.step_losses[6 + i]).epsilon(1e-5));
  fs::remove_all(dir);
}
