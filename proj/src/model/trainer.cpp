#include "unifront/model/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "unifront/codec/codec.hpp"
#include "unifront/error.hpp"
#include "unifront/metrics/metrics.hpp"
#include "unifront/model/batching.hpp"
#include "unifront/model/decode.hpp"

namespace unifront {

namespace {

// Dropout draws come from a stream separate from initialization.
constexpr std::uint64_t kDropoutStream = 0x9e3779b97f4a7c15ull;

struct Adam {
  OptimizerState s;
  double b1, b2, eps;

  void ensure(const std::vector<Param<float>*>& params) {
    if (!s.m.empty()) return;
    for (const auto* p : params) {
      s.m.emplace_back(p->size(), 0.0f);
      s.v.emplace_back(p->size(), 0.0f);
    }
  }

  void update(const std::vector<Param<float>*>& params, double lr, std::int64_t t) {
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    const float step = static_cast<float>(lr / c1);
    const float rc2 = static_cast<float>(1.0 / std::sqrt(c2));
    const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2), feps = static_cast<float>(eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      auto& m = s.m[i];
      auto& v = s.v[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const float g = p.grad[j];
        m[j] = fb1 * m[j] + (1.0f - fb1) * g;
        v[j] = fb2 * v[j] + (1.0f - fb2) * g * g;
        p.value[j] -= step * m[j] / (std::sqrt(v[j]) * rc2 + feps);
      }
    }
  }
};

void clip_gradients(const std::vector<Param<float>*>& params, double max_norm) {
  if (max_norm <= 0) return;
  double sq = 0;
  for (const auto* p : params)
    for (float g : p->grad) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const float scale = static_cast<float>(max_norm / norm);
  for (auto* p : params)
    for (auto& g : p->grad) g *= scale;
}

std::vector<std::vector<float>> snapshot(const Transformer<float>& model) {
  std::vector<std::vector<float>> out;
  for (const auto* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(Transformer<float>& model, const std::vector<std::vector<float>>& values) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

void copy_params(const Transformer<float>& from, Transformer<float>& to) { restore(to, snapshot(from)); }

}  // namespace

std::string format_log_record(const TrainLogRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["lr"] = r.lr;
  j["train_loss"] = r.train_loss;
  j["dev_per"] = r.dev_per ? nlohmann::ordered_json(*r.dev_per) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

std::vector<EncodedPair> encode_entries(const Vocab& vocab, const std::vector<PronunciationEntry>& entries) {
  std::vector<EncodedPair> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({encode_source(vocab, e.locale, e.text), encode_target(vocab, e.pron)});
  return out;
}

double corpus_per(const Checkpoint& ckpt, const std::vector<PronunciationEntry>& entries, int beam) {
  std::vector<std::vector<int>> srcs;
  for (const auto& e : entries) srcs.push_back(encode_source(ckpt.vocab, e.locale, e.text));
  const auto results = decode_all(ckpt.model, srcs, beam, ckpt.config().max_tgt_len);
  std::vector<PronPair> pairs;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    pairs.push_back({entries[i].pron, decode_target(ckpt.vocab, results[i].ids)});
  }
  return per(pairs);
}

TrainResult train(const ModelConfig& model_config, const TrainConfig& tc,
                  const std::vector<PronunciationEntry>& train_set, const std::vector<PronunciationEntry>& dev_set,
                  const TrainOptions& options) {
  tc.validate(model_config);
  if (train_set.empty()) throw ModelError("training corpus is empty");

  Vocab vocab = options.resume ? options.resume->vocab : Vocab::build(train_set);
  const ModelConfig cfg = options.resume ? options.resume->config() : model_config;
  const auto pairs = encode_entries(vocab, train_set);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (static_cast<int>(pairs[i].src.size()) > cfg.max_src_len ||
        static_cast<int>(pairs[i].tgt.size()) - 1 > cfg.max_tgt_len) {
      throw ModelError("training entry " + std::to_string(i + 1) + " ('" + train_set[i].text +
                       "') exceeds max_src_len/max_tgt_len");
    }
  }
  std::vector<std::vector<int>> dev_src;
  std::vector<PhonemeSeq> dev_gold;
  for (const auto& e : dev_set) {
    dev_src.push_back(encode_source(vocab, e.locale, e.text));
    encode_target(vocab, e.pron);  // dev targets must be expressible
    dev_gold.push_back(e.pron);
  }

  Checkpoint ckpt{vocab, Transformer<float>(cfg, static_cast<int>(vocab.source.size()),
                                            static_cast<int>(vocab.target.size())),
                  0, "", std::nullopt};
  Rng dropout_rng(cfg.seed ^ kDropoutStream);
  Adam adam{{}, tc.adam_beta1, tc.adam_beta2, tc.adam_eps};
  if (options.resume) {
    copy_params(options.resume->model, ckpt.model);
    ckpt.step = options.resume->step;
    if (!options.resume->rng_state.empty()) set_rng_state(dropout_rng, options.resume->rng_state);
    if (options.resume->optimizer) adam.s = *options.resume->optimizer;
  } else {
    Rng init(cfg.seed);
    ckpt.model.initialize(init);
  }
  auto params = ckpt.model.parameters();
  adam.ensure(params);

  std::ofstream log_file;
  std::filesystem::path out_dir;
  if (!options.out_dir.empty()) {
    out_dir = options.out_dir;
    std::filesystem::create_directories(out_dir);
    log_file.open(out_dir / "train_log.jsonl", options.resume ? std::ios::app : std::ios::trunc);
  }
  auto save = [&](const std::string& name, const Transformer<float>* params_from) {
    if (out_dir.empty()) return;
    if (params_from == &ckpt.model) {
      ckpt.rng_state = rng_state(dropout_rng);
      ckpt.optimizer = adam.s;
      save_checkpoint(ckpt, out_dir / name);
      ckpt.optimizer.reset();
    }
  };

  TrainResult result{Checkpoint{vocab, Transformer<float>(cfg, static_cast<int>(vocab.source.size()),
                                                           static_cast<int>(vocab.target.size())),
                                0, "", std::nullopt},
                     0, std::nullopt, {}, {}};
  std::vector<std::vector<float>> best_values = snapshot(ckpt.model);
  std::int64_t best_step = ckpt.step;

  double window_loss = 0;
  long window_tokens = 0;
  bool stop = false;
  std::int64_t last_eval = -1;

  auto evaluate = [&](std::int64_t step) {
    TrainLogRecord rec;
    rec.step = step;
    rec.lr = tc.lr_factor * noam_lr(std::max<std::int64_t>(step, 1), cfg.d_model, tc.warmup_steps);
    rec.train_loss = window_tokens ? window_loss / window_tokens : 0.0;
    window_loss = 0;
    window_tokens = 0;
    if (!dev_src.empty()) {
      const auto decoded = decode_all(ckpt.model, dev_src, tc.dev_beam, cfg.max_tgt_len);
      std::vector<PronPair> scored;
      for (std::size_t i = 0; i < decoded.size(); ++i) {
        scored.push_back({dev_gold[i], decode_target(vocab, decoded[i].ids)});
      }
      rec.dev_per = per(scored);
      if (!result.best_dev_per || *rec.dev_per < *result.best_dev_per) {
        result.best_dev_per = rec.dev_per;
        best_values = snapshot(ckpt.model);
        best_step = step;
        save("best.ckpt", &ckpt.model);
      }
      if (tc.target_dev_per >= 0 && *rec.dev_per <= tc.target_dev_per) stop = true;
    }
    if (log_file.is_open()) log_file << format_log_record(rec) << '\n' << std::flush;
    if (options.on_record) options.on_record(rec);
    result.log.push_back(rec);
    last_eval = step;
  };

  // Batches are a pure function of (seed, epoch), so a resumed run skips
  // the steps already taken and continues with the same sequence.
  std::int64_t seen = 0;
  for (std::uint64_t epoch = 0; !stop && ckpt.step < tc.max_steps; ++epoch) {
    const auto batches = make_batches(pairs, tc.tokens_per_batch, cfg.seed + epoch);
    for (const auto& idx : batches) {
      if (stop || ckpt.step >= tc.max_steps) break;
      if (seen++ < ckpt.step) continue;
      std::vector<EncodedPair> chosen;
      chosen.reserve(idx.size());
      for (auto i : idx) chosen.push_back(pairs[i]);
      const Batch batch = collate(chosen);

      ckpt.model.zero_grad();
      const LossStats stats = ckpt.model.forward_backward(batch, &dropout_rng);
      const std::int64_t step = ckpt.step + 1;
      if (!std::isfinite(stats.loss_sum)) {
        throw ModelError("non-finite training loss at step " + std::to_string(step));
      }
      clip_gradients(params, tc.max_grad_norm);
      adam.update(params, tc.lr_factor * noam_lr(step, cfg.d_model, tc.warmup_steps), step);
      ckpt.step = step;
      result.step_losses.push_back(stats.mean());
      window_loss += stats.loss_sum;
      window_tokens += stats.tokens;

      if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0) save("last.ckpt", &ckpt.model);
      if (tc.dev_eval_every > 0 && step % tc.dev_eval_every == 0) evaluate(step);
    }
    if (seen == 0) break;
  }
  if (last_eval != ckpt.step) evaluate(ckpt.step);
  save("last.ckpt", &ckpt.model);

  result.steps = ckpt.step;
  if (dev_src.empty()) {
    best_values = snapshot(ckpt.model);
    best_step = ckpt.step;
    save("best.ckpt", &ckpt.model);
  }
  restore(result.best.model, best_values);
  result.best.step = best_step;
  result.best.rng_state = rng_state(dropout_rng);
  return result;
}

}  // namespace unifront
