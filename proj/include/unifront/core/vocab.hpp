#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "unifront/core/corpus.hpp"

namespace unifront {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kNumSpecials = 4;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBosToken = "<bos>";
inline constexpr std::string_view kEosToken = "<eos>";
inline constexpr std::string_view kUnkToken = "<unk>";

/// Bijective token <-> id map. Ids 0..3 are the special tokens.
class SymbolTable {
 public:
  SymbolTable();
  /// Rebuilds a table from its full symbol list (specials included).
  explicit SymbolTable(std::vector<std::string> symbols);

  /// Appends `symbol` if absent; returns its id.
  int add(std::string_view symbol);
  std::optional<int> find(std::string_view symbol) const;
  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  friend bool operator==(const SymbolTable& a, const SymbolTable& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

/// Source (locale tags + characters) and target (phoneme tokens) vocabularies.
/// A space character is spelled `<wb>` in the source table.
struct Vocab {
  SymbolTable source;
  SymbolTable target;

  /// Specials first, then sorted locale tags and characters (source) or the
  /// boundary followed by sorted phoneme tokens (target). Throws on an empty corpus.
  static Vocab build(const std::vector<PronunciationEntry>& corpus);

  /// Locales whose tags are present in the source table.
  std::vector<Locale> locales() const;

  friend bool operator==(const Vocab&, const Vocab&) = default;
};

}  // namespace unifront
