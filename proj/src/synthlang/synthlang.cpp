#include "unifront/synthlang/synthlang.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"
#include "unifront/random.hpp"

namespace unifront {

namespace {

constexpr std::string_view kStressMark = "\"";

bool context_holds(const LangSpec& spec, const RuleContext& c, const std::vector<std::string>& chars, long pos) {
  const bool outside = pos < 0 || pos >= static_cast<long>(chars.size());
  switch (c.kind) {
    case RuleContext::Kind::Any:
      return true;
    case RuleContext::Kind::Boundary:
      return outside;
    case RuleContext::Kind::Vowel:
      return !outside && spec.is_vowel(chars[pos]);
    case RuleContext::Kind::Consonant:
      return !outside && !spec.is_vowel(chars[pos]);
    case RuleContext::Kind::Set:
      return !outside && c.items.count(chars[pos]) > 0;
  }
  return false;
}

const RewriteRule* match_rule(const LangSpec& spec, const std::vector<std::string>& chars, std::size_t i) {
  const RewriteRule* best = nullptr;
  for (const auto& r : spec.rules) {
    const std::size_t len = r.graphemes.size();
    if (i + len > chars.size()) continue;
    if (!std::equal(r.graphemes.begin(), r.graphemes.end(), chars.begin() + static_cast<long>(i))) continue;
    if (!context_holds(spec, r.left, chars, static_cast<long>(i) - 1)) continue;
    if (!context_holds(spec, r.right, chars, static_cast<long>(i + len))) continue;
    if (!best || len > best->graphemes.size()) best = &r;
  }
  return best;
}

void check_alphabet(const LangSpec& spec, const std::vector<std::string>& chars, std::string_view text) {
  for (const auto& c : chars) {
    if (!spec.in_alphabet(c)) {
      throw SynthError(spec.locale.str() + ": character '" + c + "' in '" + std::string(text) +
                       "' is outside the alphabet");
    }
  }
}

// Reading of character k of `chars`, with the polyphone rule applied
// against its neighbours in the same text.
const std::vector<std::string>& reading(const LangSpec& spec, const std::vector<std::string>& chars, std::size_t k,
                                        bool* is_poly) {
  const auto& g = spec.logograms.at(chars[k]);
  auto it = spec.polyphones.find(chars[k]);
  if (is_poly) *is_poly = it != spec.polyphones.end();
  if (it == spec.polyphones.end()) return g.reading;
  const auto& p = it->second;
  const long n = p.side == TriggerSide::Next ? static_cast<long>(k) + 1 : static_cast<long>(k) - 1;
  if (n >= 0 && n < static_cast<long>(chars.size()) && p.triggers.count(chars[n])) return p.alt_reading;
  return g.reading;
}

std::vector<std::string> alphabetic_word(const LangSpec& spec, std::string_view word) {
  const auto chars = utf8_chars(word);
  check_alphabet(spec, chars, word);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < chars.size();) {
    const RewriteRule* r = match_rule(spec, chars, i);
    if (!r) {
      throw SynthError(spec.locale.str() + ": no rule covers '" + chars[i] + "' in '" + std::string(word) + "'");
    }
    out.insert(out.end(), r->phonemes.begin(), r->phonemes.end());
    i += r->graphemes.size();
  }
  if (out.empty()) throw SynthError(spec.locale.str() + ": word '" + std::string(word) + "' is entirely silent");
  if (spec.stress == Stress::Initial) out[0] = std::string(kStressMark) + out[0];
  return out;
}

}  // namespace

std::vector<std::string> pronounce_word(const LangSpec& spec, std::string_view word) {
  if (spec.segmented) return alphabetic_word(spec, word);
  const auto chars = utf8_chars(word);
  check_alphabet(spec, chars, word);
  std::vector<std::string> out;
  for (std::size_t k = 0; k < chars.size(); ++k) {
    const auto& r = reading(spec, chars, k, nullptr);
    out.insert(out.end(), r.begin(), r.end());
  }
  if (out.empty()) throw SynthError("empty word");
  return out;
}

std::vector<std::string> segment_logographic(const LangSpec& spec, std::string_view text) {
  const auto chars = utf8_chars(text);
  check_alphabet(spec, chars, text);
  std::vector<std::string> groups;
  for (const auto& c : chars) {
    if (groups.empty() || spec.logograms.at(c).initial) groups.emplace_back();
    groups.back() += c;
  }
  return groups;
}

OracleResult oracle_pronounce(const LangSpec& spec, std::string_view text) {
  if (text.empty()) throw SynthError("empty text");
  OracleResult res;
  std::vector<std::string> tokens;

  if (!spec.segmented) {
    const auto chars = utf8_chars(text);
    check_alphabet(spec, chars, text);
    for (std::size_t k = 0; k < chars.size(); ++k) {
      if (k > 0 && spec.logograms.at(chars[k]).initial) tokens.emplace_back(kWordBoundary);
      bool poly = false;
      const auto& r = reading(spec, chars, k, &poly);
      const std::size_t start = tokens.size();
      tokens.insert(tokens.end(), r.begin(), r.end());
      if (poly) res.annotations.push_back({static_cast<int>(k), "poly"});
      res.annotations.push_back(
          {static_cast<int>(k), "span=" + std::to_string(start) + "-" + std::to_string(tokens.size())});
    }
    res.pron = PhonemeSeq::from_tokens(std::move(tokens));
    return res;
  }

  const auto words = split(text, ' ');
  for (const auto& w : words) {
    if (w.empty()) throw SynthError("text '" + std::string(text) + "' has empty words");
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::vector<std::string> p;
    if (auto h = spec.homographs.find(words[i]); h != spec.homographs.end()) {
      const long n = h->second.side == TriggerSide::Next ? static_cast<long>(i) + 1 : static_cast<long>(i) - 1;
      const bool alt =
          n >= 0 && n < static_cast<long>(words.size()) && h->second.triggers.count(words[n]) > 0;
      p = alt ? h->second.alt_pron : h->second.default_pron;
      res.annotations.push_back({static_cast<int>(i), alt ? "hom=alt" : "hom=def"});
    } else {
      p = alphabetic_word(spec, words[i]);
    }
    if (i + 1 < words.size() && !spec.liaison.empty()) {
      const auto last = utf8_chars(words[i]).back();
      const auto next_first = utf8_chars(words[i + 1]).front();
      auto l = spec.liaison.find(last);
      if (l != spec.liaison.end() && spec.is_vowel(next_first)) {
        p.insert(p.end(), l->second.begin(), l->second.end());
        res.annotations.push_back({static_cast<int>(i), "plr"});
      }
    }
    if (i > 0) tokens.emplace_back(kWordBoundary);
    tokens.insert(tokens.end(), p.begin(), p.end());
  }
  res.pron = PhonemeSeq::from_tokens(std::move(tokens));
  return res;
}

std::string remove_diacritics(const LangSpec& spec, std::string_view text) {
  if (spec.diacritics.empty()) return std::string(text);
  std::string out;
  for (const auto& c : utf8_chars(text)) {
    auto it = spec.diacritics.find(c);
    out += it == spec.diacritics.end() ? c : it->second;
  }
  return out;
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

bool has_mark(const LangSpec& spec, std::string_view word) {
  for (const auto& c : utf8_chars(word)) {
    if (spec.diacritics.count(c)) return true;
  }
  return false;
}

struct Initials {
  std::vector<std::string> initial, medial;
};

Initials character_classes(const LangSpec& spec) {
  Initials c;
  for (const auto& [ch, g] : spec.logograms) (g.initial ? c.initial : c.medial).push_back(ch);
  return c;
}

std::string random_group(const LangSpec& spec, const Initials& cls, Rng& rng) {
  const auto& w = spec.words;
  const int units = w.min_units + static_cast<int>(uniform_index(rng, w.max_units - w.min_units + 1));
  std::string word = pick(cls.initial, rng);
  for (int u = 1; u < units && !cls.medial.empty(); ++u) word += pick(cls.medial, rng);
  return word;
}

std::string random_stem(const LangSpec& spec, Rng& rng) {
  const auto& w = spec.words;
  const int units = w.min_units + static_cast<int>(uniform_index(rng, w.max_units - w.min_units + 1));
  std::string stem;
  for (int u = 0; u < units; ++u) {
    if (!w.onsets.empty()) stem += pick(w.onsets, rng);
    stem += pick(w.nuclei, rng);
    if (!w.codas.empty()) stem += pick(w.codas, rng);
  }
  return stem;
}

PronunciationEntry word_entry(const LangSpec& spec, const std::string& word, const std::string& lemma) {
  PronunciationEntry e;
  e.locale = spec.locale;
  e.kind = EntryKind::Word;
  e.text = word;
  e.lemma = lemma;
  if (spec.segmented) {
    e.pron = PhonemeSeq::from_tokens(pronounce_word(spec, word));
  } else {
    auto r = oracle_pronounce(spec, word);
    e.pron = std::move(r.pron);
    e.annotations = std::move(r.annotations);
  }
  return e;
}

// Appends the diacritized entry (tagged) and its undiacritized twin.
void push_with_twin(const LangSpec& spec, PronunciationEntry e, bool twins, std::vector<PronunciationEntry>& out) {
  if (!twins) {
    out.push_back(std::move(e));
    return;
  }
  PronunciationEntry plain = e;
  plain.text = remove_diacritics(spec, e.text);
  e.annotations.insert(e.annotations.begin(), {0, "diac"});
  plain.annotations.insert(plain.annotations.begin(), {0, "undiac"});
  out.push_back(std::move(e));
  out.push_back(std::move(plain));
}

}  // namespace

std::vector<PronunciationEntry> gen_lexicon(const LangSpec& spec, int n, std::uint64_t seed,
                                            const LexiconOptions& options) {
  if (n < 1) throw SynthError("lexicon size must be >= 1");
  const bool twins = options.diacritic_twins && !spec.diacritics.empty();
  Rng rng(seed);
  std::vector<PronunciationEntry> out;
  std::unordered_set<std::string> seen;
  const Initials cls = character_classes(spec);
  const long budget = 100L * n + 1000;
  long failures = 0;
  int made = 0;
  while (made < n) {
    if (failures > budget) {
      throw SynthError(spec.locale.str() + ": cannot generate " + std::to_string(n) + " distinct words (got " +
                       std::to_string(made) + ")");
    }
    std::vector<std::string> forms;
    std::string lemma;
    if (spec.segmented) {
      lemma = random_stem(spec, rng);
      forms.push_back(lemma);
      std::vector<std::string> suffixes = spec.words.suffixes;
      shuffle(suffixes, rng);
      const int extra = static_cast<int>(uniform_index(rng, options.max_forms_per_stem));
      for (int s = 0; s < extra && s < static_cast<int>(suffixes.size()); ++s) forms.push_back(lemma + suffixes[s]);
    } else {
      lemma = random_group(spec, cls, rng);
      forms.push_back(lemma);
    }
    bool added = false;
    for (const auto& word : forms) {
      if (made >= n) break;
      if (seen.count(word) || spec.homographs.count(word)) continue;
      if (twins && !has_mark(spec, word)) continue;
      seen.insert(word);
      push_with_twin(spec, word_entry(spec, word, lemma), twins, out);
      ++made;
      added = true;
    }
    failures = added ? 0 : failures + 1;
  }
  return out;
}

namespace {

struct Planter {
  const LangSpec& spec;
  std::vector<std::string> vocab;
  std::vector<std::string> latent_final, vowel_initial, consonant_initial;
  Initials cls;

  std::string non_trigger(const std::set<std::string>& triggers, Rng& rng) const {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const auto& w = pick(vocab, rng);
      if (!triggers.count(w)) return w;
    }
    throw SynthError("no non-trigger words available");
  }

  std::vector<std::string> homograph(bool trigger, Rng& rng) const {
    std::vector<const Homograph*> hs;
    for (const auto& [w, h] : spec.homographs) hs.push_back(&h);
    const Homograph& h = *pick(hs, rng);
    std::vector<std::string> trig(h.triggers.begin(), h.triggers.end());
    const std::string other = trigger ? pick(trig, rng) : non_trigger(h.triggers, rng);
    if (h.side == TriggerSide::Next) return {h.word, other};
    return {other, h.word};
  }

  std::vector<std::string> liaison(bool trigger, Rng& rng) const {
    return {pick(latent_final, rng), trigger ? pick(vowel_initial, rng) : pick(consonant_initial, rng)};
  }

  // Logographic: returns character groups placing the polyphone next to a
  // trigger (or non-trigger) character on its trigger side.
  std::vector<std::string> polyphone(bool trigger, Rng& rng) const {
    std::vector<std::string> polys;
    for (const auto& [c, p] : spec.polyphones) polys.push_back(c);
    const std::string c = pick(polys, rng);
    const Polyphone& p = spec.polyphones.at(c);
    std::string t;
    if (trigger) {
      std::vector<std::string> trig(p.triggers.begin(), p.triggers.end());
      t = pick(trig, rng);
    } else {
      for (int attempt = 0; attempt < 1000 && t.empty(); ++attempt) {
        const auto& cand = pick(spec.alphabet, rng);
        if (!p.triggers.count(cand)) t = cand;
      }
      if (t.empty()) throw SynthError("polyphone '" + c + "' has no non-trigger characters");
    }
    const std::string first = p.side == TriggerSide::Next ? c : t;
    const std::string second = p.side == TriggerSide::Next ? t : c;
    std::vector<std::string> groups;
    groups.push_back(spec.logograms.at(first).initial ? first : pick(cls.initial, rng) + first);
    if (spec.logograms.at(second).initial) {
      groups.push_back(second);
    } else {
      groups.back() += second;
    }
    return groups;
  }
};

}  // namespace

std::vector<PronunciationEntry> gen_sentences(const LangSpec& spec, int n, std::uint64_t seed,
                                              const SentenceOptions& o) {
  if (n < 1) throw SynthError("sentence count must be >= 1");
  if (o.min_words < 1 || o.max_words < o.min_words) throw SynthError("words per sentence must satisfy 1 <= min <= max");
  for (double x : {o.homograph_incidence, o.liaison_incidence, o.polyphone_incidence}) {
    if (!(x >= 0.0 && x <= 1.0)) throw SynthError("incidence must lie in [0, 1]");
  }
  const double hom = spec.homographs.empty() ? 0.0 : o.homograph_incidence;
  const double lia = spec.liaison.empty() ? 0.0 : o.liaison_incidence;
  const double pol = spec.polyphones.empty() ? 0.0 : o.polyphone_incidence;

  Rng rng(seed);
  Planter planter{spec, {}, {}, {}, {}, character_classes(spec)};
  LexiconOptions lo;
  lo.diacritic_twins = false;
  for (const auto& e : gen_lexicon(spec, o.vocabulary, seed ^ 0x5bd1e995ull, lo)) planter.vocab.push_back(e.text);
  if (spec.segmented) {
    for (const auto& w : planter.vocab) {
      const auto chars = utf8_chars(w);
      if (spec.liaison.count(chars.back())) planter.latent_final.push_back(w);
      (spec.is_vowel(chars.front()) ? planter.vowel_initial : planter.consonant_initial).push_back(w);
    }
    if (lia > 0 && (planter.latent_final.empty() || planter.vowel_initial.empty() ||
                    planter.consonant_initial.empty())) {
      throw SynthError(spec.locale.str() + ": liaison incidence cannot be met by the word grammar");
    }
  }

  // Which sentences receive a planted occurrence, and whether it is in
  // trigger context (the first half of the plan) or not.
  enum Kind { Hom, Lia, Pol };
  std::vector<std::vector<std::pair<Kind, bool>>> plan(n);
  for (auto [kind, rate] : {std::pair{Hom, hom}, std::pair{Lia, lia}, std::pair{Pol, pol}}) {
    const int count = static_cast<int>(std::ceil(rate * n - 1e-9));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    shuffle(order, rng);
    for (int j = 0; j < count; ++j) plan[order[j]].push_back({kind, j < (count + 1) / 2});
  }

  const bool twins = o.diacritic_twins && !spec.diacritics.empty();
  std::vector<PronunciationEntry> out;
  for (int i = 0; i < n; ++i) {
    const int len = o.min_words + static_cast<int>(uniform_index(rng, o.max_words - o.min_words + 1));
    std::vector<std::vector<std::string>> plants;
    int planted_words = 0;
    for (auto [kind, trigger] : plan[i]) {
      if (kind == Hom) plants.push_back(planter.homograph(trigger, rng));
      if (kind == Lia) plants.push_back(planter.liaison(trigger, rng));
      if (kind == Pol) plants.push_back(planter.polyphone(trigger, rng));
      planted_words += static_cast<int>(plants.back().size());
    }
    // Fillers first, then every plant goes in as a block at a random slot.
    std::vector<std::vector<std::string>> blocks;
    for (int w = 0; w < std::max(0, len - planted_words); ++w) blocks.push_back({pick(planter.vocab, rng)});
    for (auto& p : plants) {
      const std::size_t at = uniform_index(rng, blocks.size() + 1);
      blocks.insert(blocks.begin() + static_cast<long>(at), std::move(p));
    }
    std::string text;
    for (const auto& b : blocks) {
      for (const auto& w : b) {
        if (!text.empty() && spec.segmented) text += ' ';
        text += w;
      }
    }
    auto oracle = oracle_pronounce(spec, text);
    PronunciationEntry e;
    e.locale = spec.locale;
    e.kind = EntryKind::Sentence;
    e.text = std::move(text);
    e.pron = std::move(oracle.pron);
    e.annotations = std::move(oracle.annotations);
    push_with_twin(spec, std::move(e), twins, out);
  }
  return out;
}

std::set<std::string> phoneme_inventory(const LangSpec& spec) {
  std::set<std::string> inv;
  auto add = [&](const std::vector<std::string>& toks) { inv.insert(toks.begin(), toks.end()); };
  for (const auto& r : spec.rules) {
    add(r.phonemes);
    const bool can_start = r.left.kind == RuleContext::Kind::Any || r.left.kind == RuleContext::Kind::Boundary;
    if (spec.stress == Stress::Initial && can_start && !r.phonemes.empty()) {
      inv.insert(std::string(kStressMark) + r.phonemes[0]);
    }
  }
  for (const auto& [w, h] : spec.homographs) {
    add(h.default_pron);
    add(h.alt_pron);
  }
  for (const auto& [g, p] : spec.liaison) add(p);
  for (const auto& [c, g] : spec.logograms) add(g.reading);
  for (const auto& [c, p] : spec.polyphones) add(p.alt_reading);
  return inv;
}

std::vector<double> inventory_overlap(const std::vector<LangSpec>& specs) {
  std::vector<std::set<std::string>> invs;
  for (const auto& s : specs) invs.push_back(phoneme_inventory(s));
  std::vector<double> out;
  for (std::size_t i = 0; i < invs.size(); ++i) {
    std::set<std::string> others;
    for (std::size_t j = 0; j < invs.size(); ++j) {
      if (j != i) others.insert(invs[j].begin(), invs[j].end());
    }
    std::size_t shared = 0;
    for (const auto& t : invs[i]) shared += others.count(t);
    out.push_back(invs[i].empty() ? 0.0 : static_cast<double>(shared) / invs[i].size());
  }
  return out;
}

}  // namespace unifront
