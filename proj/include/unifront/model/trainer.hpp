#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "unifront/core/corpus.hpp"
#include "unifront/model/checkpoint.hpp"
#include "unifront/model/config.hpp"

namespace unifront {

/// One record per dev evaluation.
struct TrainLogRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  /// Mean per-token training loss since the previous record.
  double train_loss = 0.0;
  std::optional<double> dev_per;
};

std::string format_log_record(const TrainLogRecord& r);

struct TrainOptions {
  /// Receives last.ckpt, best.ckpt and train_log.jsonl; empty writes nothing.
  std::string out_dir;
  /// Continue from this checkpoint (vocab, parameters, optimizer, step, RNG).
  const Checkpoint* resume = nullptr;
  std::function<void(const TrainLogRecord&)> on_record;
};

struct TrainResult {
  /// Parameters with the best dev PER (the final ones when there is no dev set).
  Checkpoint best;
  std::int64_t steps = 0;
  std::optional<double> best_dev_per;
  /// Mean loss of every optimizer step, in order.
  std::vector<double> step_losses;
  std::vector<TrainLogRecord> log;
};

/// Adam on label-smoothed cross-entropy with the noam schedule and dynamic
/// token batches. The vocabulary is built from `train_set` unless resuming.
/// Throws ModelError on an empty training set, on entries longer than the
/// configured maximum lengths and on a non-finite loss (naming the step).
TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const std::vector<PronunciationEntry>& train_set, const std::vector<PronunciationEntry>& dev_set,
                  const TrainOptions& options = {});

/// Encodes entries under `vocab` (throws EncodeError on unknown tags or phonemes).
std::vector<EncodedPair> encode_entries(const Vocab& vocab, const std::vector<PronunciationEntry>& entries);

/// Greedy/beam decodes every entry and returns PER against the gold pronunciations.
double corpus_per(const Checkpoint& ckpt, const std::vector<PronunciationEntry>& entries, int beam = 1);

}  // namespace unifront
