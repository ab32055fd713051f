#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unifront {

/// Literal spelling of the word-boundary token on both sides of the model.
inline constexpr std::string_view kWordBoundary = "<wb>";

inline bool is_boundary(std::string_view token) { return token == kWordBoundary; }

/// True for a well-formed X-SAMPA token: nonempty, no whitespace, and not a
/// reserved `<...>` spelling. Stress marks and diacritics are part of the token.
bool is_phoneme_token(std::string_view token);

/// Ordered phoneme tokens with word-boundary markers between words.
///
/// Sequences built through parse()/from_tokens() satisfy the structural
/// invariants (nonempty, no leading, trailing or doubled boundaries).
/// Sequences decoded from model output may violate them; those carry the
/// degenerate flag instead of being rejected so they can still be scored.
class PhonemeSeq {
 public:
  PhonemeSeq() = default;

  /// Strict parse of a space-separated token string. Throws StructureError.
  static PhonemeSeq parse(std::string_view s);
  /// Strict construction from tokens. Throws StructureError.
  static PhonemeSeq from_tokens(std::vector<std::string> tokens);
  /// Lenient construction; sets degenerate() when invariants do not hold.
  static PhonemeSeq lenient(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  bool degenerate() const { return degenerate_; }

  /// Number of word spans (boundaries + 1); 0 for an empty sequence.
  std::size_t word_count() const;

  /// Space-joined spelling, the inverse of parse() for valid sequences.
  std::string str() const;

  friend bool operator==(const PhonemeSeq& a, const PhonemeSeq& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  explicit PhonemeSeq(std::vector<std::string> tokens, bool degenerate)
      : tokens_(std::move(tokens)), degenerate_(degenerate) {}

  std::vector<std::string> tokens_;
  bool degenerate_ = false;
};

/// Returns a description of the first structural violation, or empty.
std::string structure_violation(std::span<const std::string> tokens);

}  // namespace unifront
