#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace unifront {

/// Splits UTF-8 text into code points, each returned as its own string.
/// Throws ParseError on invalid UTF-8.
std::vector<std::string> utf8_chars(std::string_view text);

std::size_t utf8_length(std::string_view text);

/// ASCII-only lowercase; bytes >= 0x80 are left untouched.
std::string ascii_lower(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);
std::string trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace unifront
