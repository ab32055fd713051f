#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "unifront/core/vocab.hpp"
#include "unifront/model/transformer.hpp"

namespace unifront {

/// Adam moments, one buffer per parameter in checkpoint order.
struct OptimizerState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

struct Checkpoint {
  Vocab vocab;
  Transformer<float> model;
  std::int64_t step = 0;
  std::string rng_state;
  std::optional<OptimizerState> optimizer;

  const ModelConfig& config() const { return model.config(); }
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   "UFCK" u32 version
//   u32 n, n x (str key, str value)            model config
//   u32 n, n x str                             source symbols
//   u32 n, n x str                             target symbols
//   i64 step, str rng state
//   u32 n, n x (str name, u32 rows, u32 cols, rows*cols f32)
//   u8 has_optimizer, then for each parameter: m f32[], v f32[]
// where str = u32 byte length + UTF-8 bytes. Parameters follow
// Transformer::parameters() order.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// The parameter payload exactly as written to disk (for round-trip checks).
std::string parameter_bytes(const Transformer<float>& model);

}  // namespace unifront
