#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "unifront/core/phoneme.hpp"

namespace unifront {

enum class EditOp { Match, Substitute, Insert, Delete };

/// One alignment step. ref/hyp are the positions consumed by the step;
/// an Insert consumes no reference token and a Delete no hypothesis token,
/// in which case the index points at the next unconsumed position.
struct AlignedOp {
  EditOp op;
  std::size_t ref;
  std::size_t hyp;
};

struct EditAlignment {
  std::size_t distance = 0;
  std::vector<AlignedOp> ops;
};

/// Unit-cost Levenshtein distance with one alignment. Backtrace prefers
/// Match > Substitute > Delete > Insert so alignments are deterministic.
EditAlignment edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp);
/// Distance only, O(min(n,m)) memory.
std::size_t edit_distance_value(std::span<const std::string> ref, std::span<const std::string> hyp);

struct PronPair {
  PhonemeSeq ref;
  PhonemeSeq hyp;
};

/// Micro-averaged phone error rate: total edits / total reference tokens,
/// boundaries included. Throws MetricError when the references are empty.
double per(std::span<const PronPair> pairs);
/// Fraction of word pairs that differ in any token.
double wer(std::span<const PronPair> pairs);
/// Fraction of sentence pairs that differ in any token (boundaries included).
double ser(std::span<const PronPair> pairs);

/// Accuracy over the evaluable subset plus skip accounting.
struct TaskResult {
  std::optional<double> accuracy;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

struct HomographCase {
  PhonemeSeq ref;
  PhonemeSeq hyp;
  std::size_t word_index;
};

/// Compares the homograph's word span; hypotheses whose span count differs
/// from the reference cannot be isolated and are skipped.
TaskResult homograph_accuracy(std::span<const HomographCase> cases);

struct PolyphoneCase {
  PhonemeSeq ref;
  PhonemeSeq hyp;
  /// Reference token range [first, second) of every source character.
  std::vector<std::pair<std::size_t, std::size_t>> char_spans;
  std::vector<std::size_t> polyphone_chars;
};

struct PolyphoneResult {
  std::optional<double> accuracy_all_chars;
  std::optional<double> accuracy_polyphones;
  std::size_t chars_scored = 0;
  std::size_t polyphones_scored = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

/// Projects reference character spans onto the hypothesis through the
/// edit alignment and scores each character by exact span equality.
/// Degenerate hypotheses are skipped.
PolyphoneResult polyphone_accuracy(std::span<const PolyphoneCase> cases);

/// Hypothesis token ranges for each reference range, projected through `alignment`.
std::vector<std::pair<std::size_t, std::size_t>> project_spans(
    const EditAlignment& alignment, std::size_t ref_len, std::size_t hyp_len,
    std::span<const std::pair<std::size_t, std::size_t>> ref_spans);

struct PlrCase {
  PhonemeSeq ref;
  PhonemeSeq hyp;
  std::vector<std::size_t> affected_words;
};

struct PlrResult {
  std::optional<double> per_affected;
  std::optional<double> wer_affected;
  double per_whole = 0.0;
  std::size_t affected_words = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

/// PER/WER over the words changed by post-lexical rules, plus whole-sentence PER.
PlrResult plr_eval(std::span<const PlrCase> cases);

}  // namespace unifront
