#include "unifront/model/batching.hpp"

#include <algorithm>
#include <numeric>

#include "unifront/core/vocab.hpp"
#include "unifront/error.hpp"
#include "unifront/random.hpp"

namespace unifront {

int Batch::target_tokens() const {
  int n = 0;
  for (int l : tgt_len) n += l;
  return n;
}

int pair_cost(const EncodedPair& p) {
  return std::max(static_cast<int>(p.src.size()), static_cast<int>(p.tgt.size()) - 1);
}

Batch collate(std::span<const EncodedPair> pairs, int extra_src_pad, int extra_tgt_pad) {
  Batch b;
  b.size = static_cast<int>(pairs.size());
  for (const auto& p : pairs) {
    if (p.src.empty() || p.tgt.size() < 2) throw ModelError("cannot batch an empty source or target");
    b.src_len_max = std::max(b.src_len_max, static_cast<int>(p.src.size()));
    b.tgt_len_max = std::max(b.tgt_len_max, static_cast<int>(p.tgt.size()) - 1);
  }
  b.src_len_max += extra_src_pad;
  b.tgt_len_max += extra_tgt_pad;
  b.src.assign(static_cast<std::size_t>(b.size) * b.src_len_max, kPad);
  b.tgt_in.assign(static_cast<std::size_t>(b.size) * b.tgt_len_max, kPad);
  b.tgt_out.assign(static_cast<std::size_t>(b.size) * b.tgt_len_max, kPad);
  for (int i = 0; i < b.size; ++i) {
    const auto& p = pairs[i];
    std::copy(p.src.begin(), p.src.end(), b.src.begin() + static_cast<std::ptrdiff_t>(i) * b.src_len_max);
    const int steps = static_cast<int>(p.tgt.size()) - 1;
    for (int t = 0; t < steps; ++t) {
      b.tgt_in[static_cast<std::size_t>(i) * b.tgt_len_max + t] = p.tgt[t];
      b.tgt_out[static_cast<std::size_t>(i) * b.tgt_len_max + t] = p.tgt[t + 1];
    }
    b.src_len.push_back(static_cast<int>(p.src.size()));
    b.tgt_len.push_back(steps);
  }
  return b;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const EncodedPair> pairs, int tokens_per_batch,
                                                   std::uint64_t seed) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pair_cost(pairs[i]) > tokens_per_batch) {
      throw ModelError("pair " + std::to_string(i) + " needs " + std::to_string(pair_cost(pairs[i])) +
                       " tokens, more than the batch budget of " + std::to_string(tokens_per_batch));
    }
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pair_cost(pairs[a]) < pair_cost(pairs[b]); });

  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  int src_max = 0, tgt_max = 0;
  for (std::size_t idx : order) {
    const int s = std::max(src_max, static_cast<int>(pairs[idx].src.size()));
    const int t = std::max(tgt_max, static_cast<int>(pairs[idx].tgt.size()) - 1);
    const long cost = static_cast<long>(current.size() + 1) * std::max(s, t);
    if (!current.empty() && cost > tokens_per_batch) {
      batches.push_back(std::move(current));
      current.clear();
      src_max = static_cast<int>(pairs[idx].src.size());
      tgt_max = static_cast<int>(pairs[idx].tgt.size()) - 1;
    } else {
      src_max = s;
      tgt_max = t;
    }
    current.push_back(idx);
  }
  if (!current.empty()) batches.push_back(std::move(current));
  shuffle(batches, rng);
  return batches;
}

}  // namespace unifront
