#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace unifront {

/// Language identification tag prefixed to every source sequence.
///
/// Either `language-region` (two lowercase letters each, e.g. `en-gb`) or a
/// bare three-letter language code for region-less locales (e.g. `arb`).
class Locale {
 public:
  Locale() = default;

  /// Parses case-insensitively; throws ParseError naming the bad segment.
  static Locale parse(std::string_view s);

  const std::string& language() const { return language_; }
  const std::string& region() const { return region_; }
  bool has_region() const { return !region_.empty(); }

  /// Canonical lowercase form.
  std::string str() const;
  /// Source-vocabulary spelling, e.g. `<en-gb>`.
  std::string tag() const { return "<" + str() + ">"; }

  friend bool operator==(const Locale& a, const Locale& b) { return a.str() == b.str(); }
  friend std::strong_ordering operator<=>(const Locale& a, const Locale& b) {
    return a.str() <=> b.str();
  }

 private:
  Locale(std::string language, std::string region)
      : language_(std::move(language)), region_(std::move(region)) {}

  std::string language_;
  std::string region_;
};

}  // namespace unifront
