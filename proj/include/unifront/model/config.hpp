#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace unifront {

/// Transformer encoder-decoder hyperparameters. Defaults are desk scale;
/// the 12-layer production shape is reachable through the same fields.
struct ModelConfig {
  int layers = 3;
  int d_model = 128;
  int heads = 4;
  int ffn_dim = 512;
  double dropout = 0.1;
  int max_src_len = 256;
  int max_tgt_len = 256;
  double label_smoothing = 0.1;
  std::uint64_t seed = 1;

  /// Throws ModelError when an invariant is violated.
  void validate() const;

  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  int max_steps = 2000;
  int warmup_steps = 400;
  int tokens_per_batch = 4096;
  int checkpoint_every = 500;
  int dev_eval_every = 250;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.998;
  double adam_eps = 1e-9;
  /// Multiplier on the noam schedule.
  double lr_factor = 1.0;
  /// Global gradient-norm clip; 0 disables clipping.
  double max_grad_norm = 0.0;
  /// Stop once dev PER reaches this value; negative disables early stopping.
  double target_dev_per = -1.0;
  /// Beam size used for dev evaluation (1 = greedy).
  int dev_beam = 1;

  void validate(const ModelConfig& model) const;
};

/// d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)
double noam_lr(long step, int d_model, int warmup);

}  // namespace unifront
