#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "unifront/metrics/report.hpp"
#include "unifront/model/config.hpp"
#include "unifront/splitter/splitter.hpp"
#include "unifront/synthlang/synthlang.hpp"

namespace unifront {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailures = 1;
inline constexpr int kExitUsage = 2;

struct SynthOptions {
  std::vector<std::string> specs;
  int words = 2000;
  int sentences = 0;
  std::uint64_t seed = 1;
  std::string out_dir;
  SentenceOptions sentence;
};

/// Writes `<locale>.words.tsv` (and `<locale>.sentences.tsv`) per spec plus
/// `manifest.tsv`. Spec errors raise UsageError naming the path.
int cmd_synth(const SynthOptions& o, std::ostream& log);

struct SplitOptions {
  std::vector<std::string> corpora;
  std::string freq_file;  // optional
  SplitRatios ratios;
  std::uint64_t seed = 1;
  std::string out_dir;
  double sentence_test = 0.10;
  double sentence_dev = 0.0;
  double percentile = 95.0;
};

/// Per locale: lemma-grouped word split and twin-preserving sentence split,
/// written as `<locale>.{train,dev,test}.tsv` and `<locale>.manifest`.
/// Returns kExitFailures when verify_split reports violations.
int cmd_split(const SplitOptions& o, std::ostream& log);

struct TrainOptionsCli {
  ModelConfig model;
  TrainConfig train;
  std::vector<std::string> train_files;
  std::vector<std::string> dev_files;
  /// Restrict to one locale (monolingual baseline); empty keeps all.
  std::string locale;
  std::string resume;
  std::string out_dir;
};

/// Writes best.ckpt, last.ckpt and train_log.jsonl into out_dir.
int cmd_train(const TrainOptionsCli& o, std::ostream& log);

struct PredictOptions {
  std::string checkpoint;
  std::string input;
  std::string output;
  int beam = 1;
  int max_len = 0;  // 0: the model's max_tgt_len
  std::string locale;  // optional filter
};

/// Input lines are `locale TAB text` or corpus lines. Output lines are
/// `locale TAB kind TAB text TAB pron TAB flags` with flags `-` or a comma
/// list of truncated, degenerate, error=...
int cmd_predict(const PredictOptions& o, std::ostream& log);

struct Prediction {
  std::string locale;
  char kind = 'w';
  std::string text;
  PhonemeSeq pron;
  std::vector<std::string> flags;
};

std::string format_prediction(const Prediction& p);
Prediction parse_prediction(const std::string& line);
std::vector<Prediction> read_predictions_file(const std::string& path);

/// Threshold such as `per<=0.02` or `homograph_accuracy@sentences>=0.95`.
struct Assertion {
  std::string metric;
  std::string test_set;  // empty: any
  std::string op;
  double bound = 0.0;

  static Assertion parse(const std::string& s);
  bool holds(double value) const;
};

struct EvalOptions {
  std::string gold;
  std::string predictions;
  std::string output;
  std::vector<std::string> asserts;
  std::string locale;  // optional filter
};

/// Scores predictions against gold by (locale, text, occurrence) key and
/// writes one record per (locale, test set, metric). Test sets are `words`
/// and `sentences`, split into `*_diac` / `*_undiac` for entries tagged as
/// diacritization twins. Returns kExitFailures when an assertion fails.
int cmd_eval(const EvalOptions& o, std::ostream& log);

std::vector<EvalRecord> evaluate_entries(const std::vector<PronunciationEntry>& gold,
                                         const std::vector<Prediction>& predictions, std::ostream& log);

struct CompareOptions {
  std::string report_a;
  std::string report_b;
  std::string label_a = "A";
  std::string label_b = "B";
  /// Writes `<out>.tsv` and `<out>.md`.
  std::string out_prefix;
};

struct ComparisonRow {
  std::string locale, test_set, metric;
  std::optional<double> a, b, delta;
  std::string flag;  // empty, missing_a, missing_b, no_value
};

std::vector<ComparisonRow> compare_reports(const std::vector<EvalRecord>& a, const std::vector<EvalRecord>& b);
std::string format_comparison_tsv(const std::vector<ComparisonRow>& rows, const std::string& label_a,
                                  const std::string& label_b);
/// Locale rows by (test set, metric) columns, "A / B (delta)" cells.
std::string format_comparison_markdown(const std::vector<ComparisonRow>& rows, const std::string& label_a,
                                       const std::string& label_b);

int cmd_compare(const CompareOptions& o, std::ostream& log);

}  // namespace unifront
