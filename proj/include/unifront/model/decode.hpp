#pragma once

#include <span>
#include <vector>

#include "unifront/model/transformer.hpp"

namespace unifront {

struct DecodeResult {
  /// Output token ids without BOS/EOS.
  std::vector<int> ids;
  /// Sum of log-probabilities divided by the number of scored steps
  /// (EOS included when it was produced).
  double score = 0.0;
  /// max_len was reached before EOS.
  bool truncated = false;
};

/// Argmax decoding from BOS; ties go to the lower id. At most `max_len`
/// tokens are produced (capped by the model's max_tgt_len).
DecodeResult greedy_decode(const Transformer<float>& model, std::span<const int> src, int max_len);

/// Length-normalized beam search. Each step keeps the best `beam`
/// continuations by cumulative log-probability; continuations ending in EOS
/// are set aside as finished. The greedy path is always a finalist, so the
/// result never scores below greedy_decode. Equal scores go to the
/// lexicographically lower id sequence. beam == 1 is greedy decoding.
DecodeResult beam_decode(const Transformer<float>& model, std::span<const int> src, int beam, int max_len);

/// Decodes every source independently (OpenMP over inputs); results do not
/// depend on the thread count.
std::vector<DecodeResult> decode_all(const Transformer<float>& model, std::span<const std::vector<int>> srcs,
                                     int beam, int max_len);

}  // namespace unifront
