#include "unifront/synthlang/langspec.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "unifront/core/phoneme.hpp"
#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"

namespace unifront {

bool LangSpec::in_alphabet(std::string_view ch) const {
  return std::find(alphabet.begin(), alphabet.end(), ch) != alphabet.end();
}

namespace {

class SpecParser {
 public:
  SpecParser(std::string name) : name_(std::move(name)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw SynthError(name_ + ":" + std::to_string(line_) + ": " + what);
  }

  LangSpec run(std::string_view text) {
    spec_.path = name_;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::string section;
    while (std::getline(in, raw)) {
      ++line_;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      if (line.front() == '[' && line.back() == ']' && line.find(' ') == std::string::npos) {
        section = line.substr(1, line.size() - 2);
        seen_.insert(section);
        continue;
      }
      if (section.empty()) fail("entry outside any section");
      if (section == "rules") {
        rule(line);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected KEY = VALUE");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail("empty key");
      if (section == "lang") {
        lang(key, value);
      } else if (section == "words") {
        words(key, value);
      } else if (section == "homographs") {
        homograph(key, value);
      } else if (section == "liaison") {
        spec_.liaison[single_char(key)] = phonemes(value, false);
      } else if (section == "characters") {
        character(key, value);
      } else if (section == "polyphones") {
        polyphone(key, value);
      } else if (section == "diacritics") {
        spec_.diacritics[single_char(key)] = value;
      } else {
        fail("unknown section [" + section + "]");
      }
    }
    finish();
    return std::move(spec_);
  }

 private:
  std::string single_char(const std::string& s) {
    if (utf8_length(s) != 1) fail("'" + s + "' must be a single character");
    return s;
  }

  std::vector<std::string> phonemes(const std::string& s, bool allow_silent) {
    auto toks = split_ws(s);
    if (allow_silent && toks.size() == 1 && toks[0] == "0") return {};
    if (toks.empty()) fail("empty pronunciation");
    for (const auto& t : toks) {
      if (!is_phoneme_token(t)) fail("'" + t + "' is not a phoneme token");
    }
    return toks;
  }

  void lang(const std::string& key, const std::string& value) {
    if (key == "locale") {
      spec_.locale = Locale::parse(value);
      has_locale_ = true;
    } else if (key == "alphabet") {
      spec_.alphabet = split_ws(value);
      for (const auto& c : spec_.alphabet) single_char(c);
    } else if (key == "vowels") {
      for (const auto& v : split_ws(value)) spec_.vowels.insert(single_char(v));
    } else if (key == "stress") {
      if (value == "none") {
        spec_.stress = Stress::None;
      } else if (value == "initial") {
        spec_.stress = Stress::Initial;
      } else {
        fail("stress must be none or initial");
      }
    } else if (key == "script") {
      if (value == "alphabetic") {
        spec_.segmented = true;
      } else if (value == "logographic") {
        spec_.segmented = false;
      } else {
        fail("script must be alphabetic or logographic");
      }
    } else {
      fail("unknown [lang] key '" + key + "'");
    }
  }

  void words(const std::string& key, const std::string& value) {
    auto list = [&] {
      auto items = split_ws(value);
      for (auto& i : items)
        if (i == "-") i.clear();
      return items;
    };
    auto& w = spec_.words;
    if (key == "onsets") {
      w.onsets = list();
    } else if (key == "nuclei") {
      w.nuclei = list();
    } else if (key == "codas") {
      w.codas = list();
    } else if (key == "suffixes") {
      w.suffixes = split_ws(value);
    } else if (key == "units") {
      const auto dash = value.find('-');
      try {
        w.min_units = std::stoi(value.substr(0, dash));
        w.max_units = dash == std::string::npos ? w.min_units : std::stoi(value.substr(dash + 1));
      } catch (const std::logic_error&) {
        fail("units must be MIN-MAX");
      }
      if (w.min_units < 1 || w.max_units < w.min_units) fail("units must satisfy 1 <= MIN <= MAX");
    } else {
      fail("unknown [words] key '" + key + "'");
    }
  }

  RuleContext context(const std::string& s) {
    RuleContext c;
    if (s.empty()) return c;
    if (s == "#") {
      c.kind = RuleContext::Kind::Boundary;
    } else if (s == "V") {
      c.kind = RuleContext::Kind::Vowel;
    } else if (s == "C") {
      c.kind = RuleContext::Kind::Consonant;
    } else if (s.front() == '[' && s.back() == ']') {
      c.kind = RuleContext::Kind::Set;
      for (const auto& item : split_ws(s.substr(1, s.size() - 2))) c.items.insert(single_char(item));
      if (c.items.empty()) fail("empty context set");
    } else {
      c.kind = RuleContext::Kind::Set;
      c.items.insert(single_char(s));
    }
    return c;
  }

  void rule(const std::string& line) {
    const auto arrow = line.find("->");
    if (arrow == std::string::npos) fail("rule needs '->'");
    RewriteRule r;
    r.line = line_;
    const std::string lhs = trim(line.substr(0, arrow));
    std::string rhs = line.substr(arrow + 2);
    std::string ctx;
    if (const auto slash = rhs.find('/'); slash != std::string::npos) {
      ctx = trim(rhs.substr(slash + 1));
      rhs = rhs.substr(0, slash);
    }
    if (lhs.empty()) fail("rule has no graphemes");
    r.graphemes = utf8_chars(lhs);
    r.phonemes = phonemes(trim(rhs), true);
    if (!ctx.empty()) {
      const auto us = ctx.find('_');
      if (us == std::string::npos) fail("context needs '_'");
      r.left = context(trim(ctx.substr(0, us)));
      r.right = context(trim(ctx.substr(us + 1)));
    }
    spec_.rules.push_back(std::move(r));
  }

  void trigger(const std::string& s, TriggerSide& side, std::set<std::string>& triggers) {
    const std::string t = trim(s);
    std::string rest;
    if (t.rfind("next:", 0) == 0) {
      side = TriggerSide::Next;
      rest = t.substr(5);
    } else if (t.rfind("prev:", 0) == 0) {
      side = TriggerSide::Prev;
      rest = t.substr(5);
    } else {
      fail("trigger must start with next: or prev:");
    }
    for (const auto& w : split_ws(rest)) triggers.insert(w);
    if (triggers.empty()) fail("empty trigger list");
  }

  void homograph(const std::string& key, const std::string& value) {
    auto parts = split(value, '|');
    if (parts.size() != 3) fail("homograph needs DEFAULT | ALT | next: ...");
    Homograph h;
    h.word = key;
    h.default_pron = phonemes(trim(parts[0]), false);
    h.alt_pron = phonemes(trim(parts[1]), false);
    if (h.default_pron == h.alt_pron) fail("homograph '" + key + "' has identical pronunciations");
    trigger(parts[2], h.side, h.triggers);
    spec_.homographs[key] = std::move(h);
  }

  void character(const std::string& key, const std::string& value) {
    auto parts = split(value, '|');
    if (parts.size() != 2) fail("character needs initial|medial | READING");
    Logogram g;
    const std::string cls = trim(parts[0]);
    if (cls == "initial") {
      g.initial = true;
    } else if (cls == "medial") {
      g.initial = false;
    } else {
      fail("character class must be initial or medial");
    }
    g.reading = phonemes(trim(parts[1]), false);
    spec_.logograms[single_char(key)] = std::move(g);
  }

  void polyphone(const std::string& key, const std::string& value) {
    auto parts = split(value, '|');
    if (parts.size() != 2) fail("polyphone needs ALT READING | next: ...");
    Polyphone p;
    p.alt_reading = phonemes(trim(parts[0]), false);
    trigger(parts[1], p.side, p.triggers);
    spec_.polyphones[single_char(key)] = std::move(p);
  }

  void finish() {
    if (!has_locale_) fail("[lang] locale is required");
    if (!spec_.segmented) {
      if (spec_.logograms.empty()) fail("logographic spec needs [characters]");
      spec_.alphabet.clear();
      for (const auto& [c, g] : spec_.logograms) spec_.alphabet.push_back(c);
      if (std::none_of(spec_.logograms.begin(), spec_.logograms.end(), [](const auto& kv) { return kv.second.initial; })) {
        fail("logographic spec needs at least one initial character");
      }
      for (const auto& [c, p] : spec_.polyphones) {
        auto it = spec_.logograms.find(c);
        if (it == spec_.logograms.end()) fail("polyphone '" + c + "' is not a listed character");
        if (it->second.reading == p.alt_reading) fail("polyphone '" + c + "' has identical readings");
        for (const auto& t : p.triggers) {
          if (!spec_.logograms.count(t)) fail("polyphone trigger '" + t + "' is not a listed character");
        }
      }
      return;
    }
    if (spec_.alphabet.empty()) fail("[lang] alphabet is required");
    for (const auto& v : spec_.vowels) {
      if (!spec_.in_alphabet(v)) fail("vowel '" + v + "' is not in the alphabet");
    }
    auto check_text = [&](const std::string& s, const std::string& what) {
      for (const auto& c : utf8_chars(s)) {
        if (!spec_.in_alphabet(c)) fail(what + " '" + s + "' uses '" + c + "' outside the alphabet");
      }
    };
    for (const auto& [w, h] : spec_.homographs) {
      check_text(w, "homograph");
      for (const auto& t : h.triggers) check_text(t, "trigger");
    }
    for (const auto& [m, plain] : spec_.diacritics) {
      if (!spec_.in_alphabet(m)) fail("diacritic '" + m + "' is not in the alphabet");
      if (!plain.empty()) check_text(plain, "diacritic replacement");
    }
    for (const auto& [g, p] : spec_.liaison) {
      if (!spec_.in_alphabet(g)) fail("liaison grapheme '" + g + "' is not in the alphabet");
    }
    if (spec_.words.nuclei.empty()) fail("[words] nuclei are required");
  }

  std::string name_;
  int line_ = 0;
  LangSpec spec_;
  bool has_locale_ = false;
  std::set<std::string> seen_;
};

}  // namespace

LangSpec parse_langspec(std::string_view text, const std::string& source_name) {
  return SpecParser(source_name).run(text);
}

LangSpec load_langspec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SynthError("cannot open spec file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_langspec(buf.str(), path);
}

}  // namespace unifront
