#include "unifront/core/locale.hpp"

#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"

namespace unifront {

namespace {

bool all_letters(std::string_view s) {
  for (char c : s) {
    if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'))) return false;
  }
  return true;
}

[[noreturn]] void bad_segment(std::string_view code, std::string_view segment, std::string_view why) {
  throw ParseError("malformed locale '" + std::string(code) + "': segment '" + std::string(segment) +
                   "' " + std::string(why));
}

}  // namespace

Locale Locale::parse(std::string_view s) {
  if (s.empty()) throw ParseError("malformed locale: empty code");
  auto segments = split(s, '-');
  if (segments.size() > 2) bad_segment(s, segments[2], "is unexpected (at most language-region)");
  for (const auto& seg : segments) {
    if (!all_letters(seg)) bad_segment(s, seg, "contains characters other than ASCII letters");
  }
  if (segments.size() == 1) {
    if (segments[0].size() != 3) {
      bad_segment(s, segments[0], "must be a 3-letter code when no region is given");
    }
    return Locale(ascii_lower(segments[0]), "");
  }
  if (segments[0].size() != 2) bad_segment(s, segments[0], "must be a 2-letter language code");
  if (segments[1].size() != 2) bad_segment(s, segments[1], "must be a 2-letter region code");
  return Locale(ascii_lower(segments[0]), ascii_lower(segments[1]));
}

std::string Locale::str() const { return region_.empty() ? language_ : language_ + "-" + region_; }

}  // namespace unifront
