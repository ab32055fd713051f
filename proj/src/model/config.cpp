#include "unifront/model/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "unifront/error.hpp"

namespace unifront {

void ModelConfig::validate() const {
  if (layers <= 0 || d_model <= 0 || heads <= 0 || ffn_dim <= 0 || max_src_len <= 0 || max_tgt_len <= 0) {
    throw ModelError("model dimensions must be positive");
  }
  if (d_model % heads != 0) {
    throw ModelError("d_model (" + std::to_string(d_model) + ") must be divisible by heads (" +
                     std::to_string(heads) + ")");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ModelError("dropout must lie in [0, 1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw ModelError("label_smoothing must lie in [0, 1)");
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("model config is missing '" + key + "'");
  return it->second;
}

}  // namespace

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {
      {"layers", std::to_string(layers)},
      {"d_model", std::to_string(d_model)},
      {"heads", std::to_string(heads)},
      {"ffn_dim", std::to_string(ffn_dim)},
      {"dropout", fmt(dropout)},
      {"max_src_len", std::to_string(max_src_len)},
      {"max_tgt_len", std::to_string(max_tgt_len)},
      {"label_smoothing", fmt(label_smoothing)},
      {"seed", std::to_string(seed)},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  try {
    c.layers = std::stoi(need(kv, "layers"));
    c.d_model = std::stoi(need(kv, "d_model"));
    c.heads = std::stoi(need(kv, "heads"));
    c.ffn_dim = std::stoi(need(kv, "ffn_dim"));
    c.dropout = std::stod(need(kv, "dropout"));
    c.max_src_len = std::stoi(need(kv, "max_src_len"));
    c.max_tgt_len = std::stoi(need(kv, "max_tgt_len"));
    c.label_smoothing = std::stod(need(kv, "label_smoothing"));
    c.seed = std::stoull(need(kv, "seed"));
  } catch (const std::logic_error& e) {
    throw ParseError(std::string("bad model config value: ") + e.what());
  }
  c.validate();
  return c;
}

void TrainConfig::validate(const ModelConfig& model) const {
  if (max_steps < 1) throw ModelError("max_steps must be >= 1");
  if (warmup_steps < 1) throw ModelError("warmup_steps must be >= 1");
  if (tokens_per_batch < std::max(model.max_src_len, model.max_tgt_len)) {
    throw ModelError("tokens_per_batch must be at least max(max_src_len, max_tgt_len)");
  }
  if (checkpoint_every < 0 || dev_eval_every < 0) throw ModelError("schedule intervals must be >= 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0)) {
    throw ModelError("invalid Adam hyperparameters");
  }
  if (!(lr_factor > 0)) throw ModelError("lr_factor must be positive");
  if (dev_beam < 1) throw ModelError("dev_beam must be >= 1");
}

double noam_lr(long step, int d_model, int warmup) {
  const double s = static_cast<double>(std::max(step, 1L));
  return std::pow(static_cast<double>(d_model), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(static_cast<double>(warmup), -1.5));
}

}  // namespace unifront
