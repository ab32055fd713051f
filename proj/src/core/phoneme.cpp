#include "unifront/core/phoneme.hpp"

#include <cctype>

#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"

namespace unifront {

bool is_phoneme_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return !(token.size() >= 2 && token.front() == '<' && token.back() == '>');
}

std::string structure_violation(std::span<const std::string> tokens) {
  if (tokens.empty()) return "empty phoneme sequence";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (is_boundary(t)) {
      if (i == 0) return "leading word boundary";
      if (i + 1 == tokens.size()) return "trailing word boundary";
      if (is_boundary(tokens[i + 1])) return "adjacent word boundaries at position " + std::to_string(i);
    } else if (!is_phoneme_token(t)) {
      return "invalid phoneme token '" + t + "' at position " + std::to_string(i);
    }
  }
  return {};
}

PhonemeSeq PhonemeSeq::parse(std::string_view s) { return from_tokens(split_ws(s)); }

PhonemeSeq PhonemeSeq::from_tokens(std::vector<std::string> tokens) {
  std::string why = structure_violation(tokens);
  if (!why.empty()) throw StructureError(why);
  return PhonemeSeq(std::move(tokens), false);
}

PhonemeSeq PhonemeSeq::lenient(std::vector<std::string> tokens) {
  bool bad = !structure_violation(tokens).empty();
  return PhonemeSeq(std::move(tokens), bad);
}

std::size_t PhonemeSeq::word_count() const {
  if (tokens_.empty()) return 0;
  std::size_t n = 1;
  for (const auto& t : tokens_) n += is_boundary(t) ? 1 : 0;
  return n;
}

std::string PhonemeSeq::str() const { return join(tokens_, " "); }

}  // namespace unifront
