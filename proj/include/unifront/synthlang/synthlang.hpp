#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "unifront/core/corpus.hpp"
#include "unifront/synthlang/langspec.hpp"

namespace unifront {

struct OracleResult {
  PhonemeSeq pron;
  /// Word-index tags `hom=def|alt` and `plr`; character-index tags `poly`
  /// and `span=S-E` (logographic specs).
  std::vector<Annotation> annotations;
};

/// Context-free pronunciation of one word (no homograph or liaison context).
std::vector<std::string> pronounce_word(const LangSpec& spec, std::string_view word);

/// Gold pronunciation of a word or sentence. Alphabetic text is split on
/// single spaces; logographic text has no spaces and is grouped into words
/// at every initial-class character. Throws SynthError for characters
/// outside the alphabet.
OracleResult oracle_pronounce(const LangSpec& spec, std::string_view text);

/// Splits logographic text into character groups.
std::vector<std::string> segment_logographic(const LangSpec& spec, std::string_view text);

/// Maps marked graphemes to their plain forms; text without marks is unchanged.
std::string remove_diacritics(const LangSpec& spec, std::string_view text);

struct LexiconOptions {
  /// With a diacritics map, emit an undiacritized twin of every word
  /// (annotated `0:undiac`, the original `0:diac`) with the same pronunciation.
  bool diacritic_twins = true;
  /// At most this many inflected forms are drawn per stem (stem included).
  int max_forms_per_stem = 3;
};

/// `n` distinct words built from the word grammar; lemma = stem. Homograph
/// spellings are excluded. Twins (when emitted) come in addition to the n
/// words. Throws SynthError when n distinct words cannot be produced.
std::vector<PronunciationEntry> gen_lexicon(const LangSpec& spec, int n, std::uint64_t seed,
                                            const LexiconOptions& options = {});

struct SentenceOptions {
  int min_words = 3;
  int max_words = 6;
  /// Minimum fraction of sentences containing each phenomenon the spec
  /// defines (homograph, liaison context, polyphone). Half of the planted
  /// occurrences are in trigger context and half are not.
  double homograph_incidence = 0.5;
  double liaison_incidence = 0.5;
  double polyphone_incidence = 0.5;
  /// Number of distinct words sentences draw from.
  int vocabulary = 400;
  bool diacritic_twins = true;
};

/// `n` sentences (plus twins for diacritic specs). Incidences for phenomena
/// the spec lacks are ignored. Throws SynthError when an incidence lies
/// outside [0, 1] or cannot be met by the word grammar.
std::vector<PronunciationEntry> gen_sentences(const LangSpec& spec, int n, std::uint64_t seed,
                                              const SentenceOptions& options = {});

/// All phoneme tokens the spec can produce (rules, homographs, liaison,
/// readings), including stressed variants.
std::set<std::string> phoneme_inventory(const LangSpec& spec);

/// |inventory(spec i) ∩ union of the others| / |inventory(spec i)| for each spec.
std::vector<double> inventory_overlap(const std::vector<LangSpec>& specs);

}  // namespace unifront
