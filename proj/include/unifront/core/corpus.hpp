#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unifront/core/locale.hpp"
#include "unifront/core/phoneme.hpp"

namespace unifront {

enum class EntryKind { Word, Sentence };

char kind_code(EntryKind k);
EntryKind parse_kind(std::string_view s);

/// `index:tag` pair. The index is a word index for word-level tags
/// (`hom`, `plr`, `diac`, `undiac`) and a character index for
/// character-level tags (`poly`, `span=S-E`).
struct Annotation {
  int index = 0;
  std::string tag;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// One <text, pronunciation> pair at word or sentence granularity.
struct PronunciationEntry {
  Locale locale;
  EntryKind kind = EntryKind::Word;
  std::string text;
  PhonemeSeq pron;
  std::optional<std::string> lemma;
  std::vector<Annotation> annotations;

  /// Indices carrying a tag equal to `tag` or starting with `tag=`.
  std::vector<int> indices_with(std::string_view tag) const;
  bool has_tag(std::string_view tag) const { return !indices_with(tag).empty(); }

  friend bool operator==(const PronunciationEntry&, const PronunciationEntry&) = default;
};

/// Words of a sentence text, split on single spaces.
std::vector<std::string> text_words(std::string_view text);

/// Checks entry-level invariants; returns an empty string when valid.
/// Sentence texts containing no space are treated as unsegmented script and
/// exempt from the word-count check.
std::string entry_violation(const PronunciationEntry& e);

std::string format_annotations(const std::vector<Annotation>& annotations);
std::vector<Annotation> parse_annotations(std::string_view s);

/// Parses one corpus line (`locale TAB kind TAB text TAB pron [TAB lemma [TAB annotations]]`).
PronunciationEntry parse_corpus_line(std::string_view line);
std::string format_corpus_line(const PronunciationEntry& e);

/// Reads a corpus; `#` lines and blank lines are skipped. Errors carry the line number.
std::vector<PronunciationEntry> read_corpus(std::istream& in, std::string_view source_name = "<stream>");
std::vector<PronunciationEntry> read_corpus_file(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<PronunciationEntry>& entries);
void write_corpus_file(const std::string& path, const std::vector<PronunciationEntry>& entries);

/// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace unifront
