#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "unifront/core/locale.hpp"

namespace unifront {

/// Neighbour condition of a rewrite rule or a contextual reading.
struct RuleContext {
  enum class Kind { Any, Boundary, Vowel, Consonant, Set };
  Kind kind = Kind::Any;
  std::set<std::string> items;  // for Kind::Set
};

/// `graphemes -> phonemes / left _ right`. An empty phoneme list is silent.
struct RewriteRule {
  std::vector<std::string> graphemes;  // code points
  std::vector<std::string> phonemes;
  RuleContext left;
  RuleContext right;
  int line = 0;
};

enum class Stress { None, Initial };

/// Which neighbour selects the alternative reading.
enum class TriggerSide { Next, Prev };

struct Homograph {
  std::string word;
  std::vector<std::string> default_pron;
  std::vector<std::string> alt_pron;
  TriggerSide side = TriggerSide::Next;
  std::set<std::string> triggers;  // neighbouring words
};

struct Logogram {
  bool initial = true;  // starts a character group
  std::vector<std::string> reading;
};

struct Polyphone {
  std::vector<std::string> alt_reading;
  TriggerSide side = TriggerSide::Next;
  std::set<std::string> triggers;  // neighbouring characters
};

struct WordGrammar {
  std::vector<std::string> onsets;  // "" allowed
  std::vector<std::string> nuclei;
  std::vector<std::string> codas;
  int min_units = 1;  // syllables, or characters for logographic specs
  int max_units = 3;
  std::vector<std::string> suffixes;
};

/// A rule-based synthetic language. Alphabetic specs pronounce words with
/// ordered leftmost-longest rewrite rules; logographic specs (no spaces in
/// text) read each character and group characters into words.
struct LangSpec {
  std::string path;
  Locale locale;
  std::vector<std::string> alphabet;
  std::set<std::string> vowels;
  Stress stress = Stress::None;
  bool segmented = true;
  WordGrammar words;
  std::vector<RewriteRule> rules;
  std::map<std::string, Homograph> homographs;
  std::map<std::string, std::vector<std::string>> liaison;
  std::map<std::string, Logogram> logograms;
  std::map<std::string, Polyphone> polyphones;
  /// Marked grapheme -> plain replacement ("" drops it).
  std::map<std::string, std::string> diacritics;

  bool in_alphabet(std::string_view ch) const;
  bool is_vowel(std::string_view ch) const { return vowels.count(std::string(ch)) > 0; }
};

/// Parses the sectioned spec format:
///
///   [lang]        locale, alphabet, vowels, stress = none|initial, script = alphabetic|logographic
///   [words]       onsets, nuclei, codas ('-' is empty), units = MIN-MAX, suffixes
///   [rules]       GRAPHEMES -> PHONEMES [/ LEFT _ RIGHT]     PHONEMES '0' is silent;
///                 contexts are '#', 'V', 'C', a grapheme or '[a b c]'
///   [homographs]  WORD = DEFAULT | ALT | next: W1 W2     (or prev:)
///   [liaison]     GRAPHEME = PHONEMES
///   [characters]  CHAR = initial|medial | READING
///   [polyphones]  CHAR = ALT READING | next: C1 C2       (or prev:)
///   [diacritics]  MARKED = PLAIN                          (PLAIN may be empty)
///
/// '#' starts a comment only at the beginning of a line. Errors name the
/// file and line.
LangSpec parse_langspec(std::string_view text, const std::string& source_name = "<spec>");
LangSpec load_langspec(const std::string& path);

}  // namespace unifront
