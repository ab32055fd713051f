#include "unifront/core/vocab.hpp"

#include <set>

#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"

namespace unifront {

SymbolTable::SymbolTable() {
  for (auto s : {kPadToken, kBosToken, kEosToken, kUnkToken}) add(s);
}

SymbolTable::SymbolTable(std::vector<std::string> symbols) {
  if (symbols.size() < kNumSpecials || symbols[kPad] != kPadToken || symbols[kBos] != kBosToken ||
      symbols[kEos] != kEosToken || symbols[kUnk] != kUnkToken) {
    throw ParseError("symbol table does not start with the reserved special tokens");
  }
  for (const auto& s : symbols) {
    if (ids_.count(s)) throw ParseError("duplicate symbol '" + s + "' in symbol table");
    add(s);
  }
}

int SymbolTable::add(std::string_view symbol) {
  std::string key(symbol);
  auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(symbols_.size());
  symbols_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::optional<int> SymbolTable::find(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Vocab Vocab::build(const std::vector<PronunciationEntry>& corpus) {
  if (corpus.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  std::set<std::string> tags, chars, phonemes;
  for (const auto& e : corpus) {
    tags.insert(e.locale.tag());
    for (auto& c : utf8_chars(e.text)) chars.insert(c == " " ? std::string(kWordBoundary) : c);
    for (const auto& t : e.pron.tokens()) {
      if (!is_boundary(t)) phonemes.insert(t);
    }
  }
  Vocab v;
  for (const auto& t : tags) v.source.add(t);
  for (const auto& c : chars) v.source.add(c);
  v.target.add(kWordBoundary);
  for (const auto& p : phonemes) v.target.add(p);
  return v;
}

std::vector<Locale> Vocab::locales() const {
  std::vector<Locale> out;
  for (const auto& s : source.symbols()) {
    if (s.size() > 2 && s.front() == '<' && s.back() == '>' && s != kWordBoundary) {
      std::string inner = s.substr(1, s.size() - 2);
      if (inner == "pad" || inner == "bos" || inner == "eos" || inner == "unk") continue;
      out.push_back(Locale::parse(inner));
    }
  }
  return out;
}

}  // namespace unifront
