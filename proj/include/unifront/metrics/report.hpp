#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace unifront {

/// One (locale, test set, metric) result. `value` is empty when the metric
/// had nothing to score (e.g. every homograph case skipped).
struct EvalRecord {
  std::string locale;
  std::string test_set;
  std::string metric;
  std::optional<double> value;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;

  std::string key() const { return locale + "\t" + test_set + "\t" + metric; }
};

/// Line-delimited JSON records with a fixed field order.
std::string format_record(const EvalRecord& r);
EvalRecord parse_record(const std::string& line);

std::string format_report(const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_report(std::istream& in);
std::vector<EvalRecord> read_report_file(const std::string& path);

}  // namespace unifront
