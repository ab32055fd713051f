#include "unifront/model/decode.hpp"

#include <algorithm>

#include "unifront/core/vocab.hpp"
#include "unifront/error.hpp"

namespace unifront {

namespace {

int cap_length(const Transformer<float>& model, int max_len) {
  return std::max(0, std::min(max_len, model.config().max_tgt_len));
}

// Higher normalized score wins; ties go to the lower id sequence.
bool better(const DecodeResult& a, const DecodeResult& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.ids < b.ids;
}

}  // namespace

DecodeResult greedy_decode(const Transformer<float>& model, std::span<const int> src, int max_len) {
  max_len = cap_length(model, max_len);
  const auto memory = model.encode(src);
  auto state = model.start();
  std::vector<float> lp;
  DecodeResult r;
  double total = 0;
  int token = kBos;
  for (int t = 0; t <= max_len; ++t) {
    if (t == max_len) {
      r.truncated = true;
      break;
    }
    model.step(memory, state, token, lp);
    const int best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    total += lp[best];
    if (best == kEos) {
      r.score = total / (t + 1);
      return r;
    }
    r.ids.push_back(best);
    token = best;
  }
  r.score = r.ids.empty() ? 0.0 : total / static_cast<double>(r.ids.size());
  return r;
}

DecodeResult beam_decode(const Transformer<float>& model, std::span<const int> src, int beam, int max_len) {
  if (beam < 1) throw ModelError("beam must be >= 1");
  DecodeResult greedy = greedy_decode(model, src, max_len);
  if (beam == 1) return greedy;
  max_len = cap_length(model, max_len);

  struct Hyp {
    std::vector<int> ids;
    double logp = 0;
    Transformer<float>::DecoderState state;
  };
  struct Cand {
    std::size_t parent;
    int token;
    double logp;
  };

  const auto memory = model.encode(src);
  std::vector<Hyp> live;
  live.push_back({{}, 0.0, model.start()});
  std::vector<DecodeResult> finished;
  std::vector<float> lp;
  bool truncated = true;
  for (int t = 0; t < max_len && !live.empty(); ++t) {
    std::vector<Cand> cands;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const int token = live[h].ids.empty() ? kBos : live[h].ids.back();
      model.step(memory, live[h].state, token, lp);
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) cands.push_back({h, v, live[h].logp + lp[v]});
    }
    auto order = [&](const Cand& a, const Cand& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      const auto& ia = live[a.parent].ids;
      const auto& ib = live[b.parent].ids;
      if (ia != ib) return ia < ib;
      return a.token < b.token;
    };
    const std::size_t keep = std::min<std::size_t>(beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), order);
    std::vector<Hyp> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const auto& cand = cands[c];
      const auto& parent = live[cand.parent];
      if (cand.token == kEos) {
        finished.push_back({parent.ids, cand.logp / (t + 1), false});
      } else {
        Hyp h{parent.ids, cand.logp, parent.state};
        h.ids.push_back(cand.token);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
    if (static_cast<int>(finished.size()) >= beam) {
      truncated = false;
      break;
    }
  }
  if (live.empty()) truncated = false;
  if (truncated) {
    for (const auto& h : live) {
      finished.push_back({h.ids, h.ids.empty() ? 0.0 : h.logp / static_cast<double>(h.ids.size()), true});
    }
  }
  finished.push_back(std::move(greedy));
  return *std::min_element(finished.begin(), finished.end(),
                           [](const DecodeResult& a, const DecodeResult& b) { return better(a, b); });
}

std::vector<DecodeResult> decode_all(const Transformer<float>& model, std::span<const std::vector<int>> srcs,
                                     int beam, int max_len) {
  std::vector<DecodeResult> out(srcs.size());
  std::vector<std::string> errors(srcs.size());
  const long n = static_cast<long>(srcs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = beam_decode(model, srcs[i], beam, max_len);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (long i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw ModelError("input " + std::to_string(i) + ": " + errors[i]);
  }
  return out;
}

}  // namespace unifront
