#include "unifront/metrics/metrics.hpp"

#include <algorithm>

#include "unifront/codec/codec.hpp"
#include "unifront/error.hpp"

namespace unifront {

EditAlignment edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  EditAlignment out;
  out.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t cur = at(i, j);
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i - 1, j - 1) == cur) {
      out.ops.push_back({EditOp::Match, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && j > 0 && at(i - 1, j - 1) + 1 == cur) {
      out.ops.push_back({EditOp::Substitute, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && at(i - 1, j) + 1 == cur) {
      out.ops.push_back({EditOp::Delete, i - 1, j});
      --i;
    } else {
      out.ops.push_back({EditOp::Insert, i, j - 1});
      --j;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

std::size_t edit_distance_value(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.size() < hyp.size()) std::swap(ref, hyp);
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

double per(std::span<const PronPair> pairs) {
  std::size_t edits = 0, length = 0;
  for (const auto& p : pairs) {
    edits += edit_distance_value(p.ref.tokens(), p.hyp.tokens());
    length += p.ref.size();
  }
  if (length == 0) throw MetricError("PER is undefined for an empty reference set");
  return static_cast<double>(edits) / static_cast<double>(length);
}

namespace {

double exact_error_rate(std::span<const PronPair> pairs, const char* name) {
  if (pairs.empty()) throw MetricError(std::string(name) + " is undefined for an empty test set");
  std::size_t wrong = 0;
  for (const auto& p : pairs) wrong += p.ref.tokens() == p.hyp.tokens() ? 0 : 1;
  return static_cast<double>(wrong) / static_cast<double>(pairs.size());
}

bool spans_equal(std::span<const std::string> a, std::span<const std::string> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

double wer(std::span<const PronPair> pairs) { return exact_error_rate(pairs, "WER"); }
double ser(std::span<const PronPair> pairs) { return exact_error_rate(pairs, "SER"); }

TaskResult homograph_accuracy(std::span<const HomographCase> cases) {
  TaskResult r;
  std::size_t correct = 0;
  for (const auto& c : cases) {
    auto ref_spans = word_spans(c.ref);
    if (c.word_index >= ref_spans.size()) {
      throw MetricError("homograph word index " + std::to_string(c.word_index) + " out of range");
    }
    auto hyp_spans = word_spans(c.hyp);
    if (hyp_spans.size() != ref_spans.size()) {
      ++r.skipped;
      continue;
    }
    ++r.evaluated;
    correct += spans_equal(ref_spans[c.word_index], hyp_spans[c.word_index]) ? 1 : 0;
  }
  if (r.evaluated) r.accuracy = static_cast<double>(correct) / static_cast<double>(r.evaluated);
  return r;
}

std::vector<std::pair<std::size_t, std::size_t>> project_spans(
    const EditAlignment& alignment, std::size_t ref_len, std::size_t hyp_len,
    std::span<const std::pair<std::size_t, std::size_t>> ref_spans) {
  // before[r] = hypothesis tokens consumed before reference token r is processed.
  // Every reference token is consumed by exactly one non-insert op; insertions
  // therefore attach to the span of the preceding reference token.
  std::vector<std::size_t> before(ref_len + 1, hyp_len);
  std::size_t consumed = 0;
  for (const auto& op : alignment.ops) {
    if (op.op != EditOp::Insert) before[op.ref] = consumed;
    if (op.op != EditOp::Delete) ++consumed;
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(ref_spans.size());
  for (const auto& [s, e] : ref_spans) out.emplace_back(before[s], before[e]);
  return out;
}

PolyphoneResult polyphone_accuracy(std::span<const PolyphoneCase> cases) {
  PolyphoneResult r;
  std::size_t correct_all = 0, correct_poly = 0;
  for (const auto& c : cases) {
    if (c.hyp.degenerate()) {
      ++r.skipped;
      continue;
    }
    ++r.evaluated;
    const auto& ref = c.ref.tokens();
    const auto& hyp = c.hyp.tokens();
    for (const auto& [s, e] : c.char_spans) {
      if (s > e || e > ref.size()) throw MetricError("character span out of reference range");
    }
    auto alignment = edit_distance(ref, hyp);
    auto projected = project_spans(alignment, ref.size(), hyp.size(), c.char_spans);
    std::vector<bool> ok(c.char_spans.size());
    for (std::size_t k = 0; k < c.char_spans.size(); ++k) {
      auto [rs, re] = c.char_spans[k];
      auto [hs, he] = projected[k];
      ok[k] = std::equal(ref.begin() + rs, ref.begin() + re, hyp.begin() + hs, hyp.begin() + he);
      correct_all += ok[k] ? 1 : 0;
    }
    r.chars_scored += c.char_spans.size();
    for (auto k : c.polyphone_chars) {
      if (k >= ok.size()) throw MetricError("polyphone character index out of range");
      correct_poly += ok[k] ? 1 : 0;
      ++r.polyphones_scored;
    }
  }
  if (r.chars_scored) r.accuracy_all_chars = static_cast<double>(correct_all) / r.chars_scored;
  if (r.polyphones_scored) r.accuracy_polyphones = static_cast<double>(correct_poly) / r.polyphones_scored;
  return r;
}

PlrResult plr_eval(std::span<const PlrCase> cases) {
  PlrResult r;
  std::size_t whole_edits = 0, whole_len = 0, aff_edits = 0, aff_len = 0, aff_wrong = 0;
  for (const auto& c : cases) {
    whole_edits += edit_distance_value(c.ref.tokens(), c.hyp.tokens());
    whole_len += c.ref.size();
    auto ref_spans = word_spans(c.ref);
    for (auto w : c.affected_words) {
      if (w >= ref_spans.size()) throw MetricError("PLR word index out of range");
    }
    auto hyp_spans = word_spans(c.hyp);
    if (hyp_spans.size() != ref_spans.size()) {
      ++r.skipped;
      continue;
    }
    ++r.evaluated;
    for (auto w : c.affected_words) {
      aff_edits += edit_distance_value(ref_spans[w], hyp_spans[w]);
      aff_len += ref_spans[w].size();
      aff_wrong += spans_equal(ref_spans[w], hyp_spans[w]) ? 0 : 1;
      ++r.affected_words;
    }
  }
  if (whole_len == 0) throw MetricError("PLR evaluation needs at least one nonempty reference");
  r.per_whole = static_cast<double>(whole_edits) / static_cast<double>(whole_len);
  if (aff_len) r.per_affected = static_cast<double>(aff_edits) / static_cast<double>(aff_len);
  if (r.affected_words) r.wer_affected = static_cast<double>(aff_wrong) / static_cast<double>(r.affected_words);
  return r;
}

}  // namespace unifront
