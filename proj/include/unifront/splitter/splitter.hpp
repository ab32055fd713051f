#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unifront/core/corpus.hpp"

namespace unifront {

enum class Partition { Train, Dev, Test };

std::string_view partition_name(Partition p);
Partition parse_partition(std::string_view s);

/// Word entries sharing one lemma.
struct LemmaGroup {
  std::string lemma;
  std::vector<PronunciationEntry> members;

  std::size_t size() const { return members.size(); }
};

using LemmatizeFn = std::function<std::string(const std::string&)>;

/// Groups word entries by lemmatize(text); groups are sorted by lemma and
/// members keep their input order.
std::vector<LemmaGroup> group_by_lemma(const std::vector<PronunciationEntry>& entries,
                                       const LemmatizeFn& lemmatize);
/// Uses each entry's lemma column, falling back to default_lemmatizer.
std::vector<LemmaGroup> group_by_lemma(const std::vector<PronunciationEntry>& entries);

/// Suffix-stripping lemmatizer for languages without a real lemmatizer.
/// An exact word->lemma table, when loaded, takes precedence.
class SuffixLemmatizer {
 public:
  SuffixLemmatizer();
  explicit SuffixLemmatizer(std::vector<std::string> suffixes);

  void set_exceptions(std::unordered_map<std::string, std::string> table) { exact_ = std::move(table); }
  /// Loads `word TAB lemma` lines.
  void load_exceptions(const std::string& path);

  std::string operator()(const std::string& word) const;

  static constexpr std::size_t kMinStem = 3;

 private:
  std::vector<std::string> suffixes_;
  std::unordered_map<std::string, std::string> exact_;
};

std::string default_lemmatizer(const std::string& word);

/// Word -> count; lookup of an absent word yields 0.
class FrequencyTable {
 public:
  FrequencyTable() = default;
  explicit FrequencyTable(std::unordered_map<std::string, std::uint64_t> counts)
      : counts_(std::move(counts)) {}

  /// Reads `word TAB count` lines.
  static FrequencyTable load(const std::string& path);
  static FrequencyTable read(std::istream& in);

  std::uint64_t count(const std::string& word) const {
    auto it = counts_.find(word);
    return it == counts_.end() ? 0 : it->second;
  }
  void set(const std::string& word, std::uint64_t n) { counts_[word] = n; }
  std::size_t size() const { return counts_.size(); }

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
};

struct SplitRatios {
  double train = 0.85;
  double dev = 0.05;
  double test = 0.10;
};

/// Lemma -> partition assignment for one locale. Stored as a list (sorted by
/// lemma when produced by sample_split) so that corrupted manifests with
/// duplicated lemmas can still be represented and diagnosed.
struct SplitManifest {
  Locale locale;
  std::uint64_t seed = 0;
  SplitRatios requested;
  SplitRatios achieved;
  /// Frequency cap (95th percentile of word frequencies).
  std::uint64_t frequency_cap = 0;
  std::vector<std::pair<std::string, Partition>> assignment;
  /// Words drawn directly by the sampler, in draw order.
  std::vector<std::string> drawn_test;
  std::vector<std::string> drawn_dev;

  std::map<std::string, Partition> as_map() const;

  void write(std::ostream& out) const;
  static SplitManifest read(std::istream& in);
};

/// Nearest-rank percentile (pct in (0,100]) of the word-type frequencies.
std::uint64_t nearest_rank_percentile(std::vector<std::uint64_t> values, double pct);

/// Lemma-grouped, frequency-capped random split. See the README for the
/// sampling procedure. Throws SplitError if the eligible pool runs out.
SplitManifest sample_split(const std::vector<LemmaGroup>& groups, const FrequencyTable& freqs,
                           const SplitRatios& ratios, std::uint64_t seed, double percentile = 95.0);

/// Per-entry partition for sentence data. Entries of one locale with an
/// identical pronunciation (diacritized/undiacritized twins) move together.
struct SentenceSplit {
  std::vector<Partition> assignment;

  std::size_t count(Partition p) const;
};

SentenceSplit split_sentences(const std::vector<PronunciationEntry>& entries, double test_fraction,
                              std::uint64_t seed, double dev_fraction = 0.0);

/// Lemma-disjointness and coverage check; empty result means valid.
std::vector<std::string> verify_split(const SplitManifest& manifest, const std::vector<LemmaGroup>& groups);

}  // namespace unifront
