#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "unifront/codec/codec.hpp"

namespace unifront {

/// Padded teacher-forcing batch. `tgt_in` is the target without its final
/// EOS and `tgt_out` the target without its leading BOS; both are padded
/// with PAD to `tgt_len_max`.
struct Batch {
  int size = 0;
  int src_len_max = 0;
  int tgt_len_max = 0;
  std::vector<int> src;      // size * src_len_max
  std::vector<int> tgt_in;   // size * tgt_len_max
  std::vector<int> tgt_out;  // size * tgt_len_max
  std::vector<int> src_len;
  std::vector<int> tgt_len;

  int target_tokens() const;
};

/// Pads the given pairs into one batch. `extra_src_pad`/`extra_tgt_pad`
/// append additional PAD columns (used by padding-invariance tests).
Batch collate(std::span<const EncodedPair> pairs, int extra_src_pad = 0, int extra_tgt_pad = 0);

/// Token cost of one pair: max(source length, decoder steps).
int pair_cost(const EncodedPair& p);

/// Length-bucketed dynamic batches: pairs are shuffled by `seed`, stably
/// sorted by cost, and greedily packed while
/// batch_size * max(padded src len, padded tgt len) <= tokens_per_batch;
/// batch order is then shuffled. Returns indices into `pairs`; every index
/// appears exactly once. Throws ModelError if a single pair exceeds the budget.
std::vector<std::vector<std::size_t>> make_batches(std::span<const EncodedPair> pairs, int tokens_per_batch,
                                                   std::uint64_t seed);

}  // namespace unifront
