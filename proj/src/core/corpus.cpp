#include "unifront/core/corpus.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"

namespace unifront {

char kind_code(EntryKind k) { return k == EntryKind::Word ? 'w' : 's'; }

EntryKind parse_kind(std::string_view s) {
  if (s == "w") return EntryKind::Word;
  if (s == "s") return EntryKind::Sentence;
  throw ParseError("entry kind must be 'w' or 's', got '" + std::string(s) + "'");
}

std::vector<int> PronunciationEntry::indices_with(std::string_view tag) const {
  std::vector<int> out;
  for (const auto& a : annotations) {
    if (a.tag == tag || (a.tag.size() > tag.size() && a.tag.compare(0, tag.size(), tag) == 0 &&
                         a.tag[tag.size()] == '=')) {
      out.push_back(a.index);
    }
  }
  return out;
}

std::vector<std::string> text_words(std::string_view text) { return split(text, ' '); }

std::string entry_violation(const PronunciationEntry& e) {
  if (e.text.empty()) return "empty text";
  std::string why = structure_violation(e.pron.tokens());
  if (!why.empty()) return why;
  if (e.kind == EntryKind::Word) {
    if (e.text.find(' ') != std::string::npos) return "word entry text contains a space";
    if (e.pron.word_count() != 1) return "word entry pronunciation contains a word boundary";
    return {};
  }
  if (e.lemma) return "sentence entries carry no lemma";
  if (e.text.find(' ') == std::string::npos) return {};
  auto words = text_words(e.text);
  for (const auto& w : words) {
    if (w.empty()) return "sentence text has empty words (leading, trailing or doubled spaces)";
  }
  if (words.size() != e.pron.word_count()) {
    return "sentence has " + std::to_string(words.size()) + " words but pronunciation has " +
           std::to_string(e.pron.word_count()) + " word spans";
  }
  return {};
}

std::string format_annotations(const std::vector<Annotation>& annotations) {
  std::string out;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(annotations[i].index);
    out += ':';
    out += annotations[i].tag;
  }
  return out;
}

std::vector<Annotation> parse_annotations(std::string_view s) {
  std::vector<Annotation> out;
  if (s.empty()) return out;
  for (const auto& item : split(s, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
      throw ParseError("annotation '" + item + "' is not index:tag");
    }
    Annotation a;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + colon, a.index);
    if (ec != std::errc() || ptr != item.data() + colon || a.index < 0) {
      throw ParseError("annotation '" + item + "' has a bad index");
    }
    a.tag = item.substr(colon + 1);
    out.push_back(std::move(a));
  }
  return out;
}

PronunciationEntry parse_corpus_line(std::string_view line) {
  auto fields = split(line, '\t');
  if (fields.size() < 4 || fields.size() > 6) {
    throw ParseError("expected 4-6 tab-separated fields, got " + std::to_string(fields.size()));
  }
  PronunciationEntry e;
  e.locale = Locale::parse(fields[0]);
  e.kind = parse_kind(fields[1]);
  e.text = fields[2];
  utf8_chars(e.text);
  e.pron = PhonemeSeq::parse(fields[3]);
  if (fields.size() >= 5 && !fields[4].empty()) e.lemma = fields[4];
  if (fields.size() == 6) e.annotations = parse_annotations(fields[5]);
  std::string why = entry_violation(e);
  if (!why.empty()) throw ParseError(why);
  return e;
}

std::string format_corpus_line(const PronunciationEntry& e) {
  std::string line = e.locale.str();
  line += '\t';
  line += kind_code(e.kind);
  line += '\t';
  line += e.text;
  line += '\t';
  line += e.pron.str();
  if (e.lemma || !e.annotations.empty()) {
    line += '\t';
    line += e.lemma.value_or("");
  }
  if (!e.annotations.empty()) {
    line += '\t';
    line += format_annotations(e.annotations);
  }
  return line;
}

std::vector<PronunciationEntry> read_corpus(std::istream& in, std::string_view source_name) {
  std::vector<PronunciationEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(parse_corpus_line(line));
    } catch (const Error& err) {
      throw ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
  return out;
}

std::vector<PronunciationEntry> read_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open corpus file " + path);
  return read_corpus(in, path);
}

void write_corpus(std::ostream& out, const std::vector<PronunciationEntry>& entries) {
  for (const auto& e : entries) out << format_corpus_line(e) << '\n';
}

void write_corpus_file(const std::string& path, const std::vector<PronunciationEntry>& entries) {
  std::ostringstream os;
  write_corpus(os, entries);
  write_file_atomic(path, os.str());
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace unifront
