#include <set>

#include "doctest.h"
#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"
#include "unifront/metrics/metrics.hpp"
#include "unifront/splitter/splitter.hpp"
#include "unifront/synthlang/synthlang.hpp"

using namespace unifront;

namespace {

const LangSpec& spec(const std::string& name) {
  static std::map<std::string, LangSpec> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, load_langspec(std::string(UNIFRONT_SPEC_DIR) + "/" + name + ".spec")).first;
  return it->second;
}

std::string first_word(const PhonemeSeq& p) {
  std::vector<std::string> out;
  for (const auto& t : p.tokens()) {
    if (is_boundary(t)) break;
    out.push_back(t);
  }
  return join(out, " ");
}

}  // namespace

TEST_CASE("regular spec oracle") {
  const auto& s = spec("regular");
  CHECK(oracle_pronounce(s, "pata").pron.str() == "\"p a t a");
  CHECK(oracle_pronounce(s, "ceca").pron.str() == "\"s e k a");
  CHECK(oracle_pronounce(s, "pata kiso").pron.word_count() == 2);
  CHECK_THROWS_AS(oracle_pronounce(s, "paqa"), SynthError);
}

TEST_CASE("spec parse errors carry a line number") {
  try {
    parse_langspec("[lang]\nlocale = qx-xa\n[rules]\na => b\n", "bad.spec");
    FAIL("expected a parse failure");
  } catch (const SynthError& e) {
    CHECK(std::string(e.what()).find("bad.spec:4") != std::string::npos);
  }
}

TEST_CASE("homograph context flips the reading") {
  const auto& s = spec("homograph");
  const auto trig = oracle_pronounce(s, "lida pora");
  const auto plain = oracle_pronounce(s, "lida sera");
  CHECK(first_word(trig.pron) == "\"l e d a");
  CHECK(first_word(plain.pron) == "\"l i d a");
  CHECK(std::find(trig.annotations.begin(), trig.annotations.end(), Annotation{0, "hom=alt"}) != trig.annotations.end());
  CHECK(std::find(plain.annotations.begin(), plain.annotations.end(), Annotation{0, "hom=def"}) !=
        plain.annotations.end());
}

TEST_CASE("liaison surfaces before vowels only") {
  const auto& s = spec("liaison");
  const auto before_vowel = oracle_pronounce(s, "vokat istatis");
  const auto before_cons = oracle_pronounce(s, "vokat garneront");
  CHECK(first_word(before_vowel.pron).back() == 't');
  CHECK(first_word(before_cons.pron).back() != 't');
  CHECK(std::find(before_vowel.annotations.begin(), before_vowel.annotations.end(), Annotation{0, "plr"}) !=
        before_vowel.annotations.end());
  CHECK(before_cons.annotations.empty());
}

TEST_CASE("logographic polyphones and spans") {
  const auto& s = spec("logographic");
  const auto alt = oracle_pronounce(s, "水人");
  const auto def = oracle_pronounce(s, "水山");
  CHECK(alt.pron.tokens()[0] != def.pron.tokens()[0]);
  int spans = 0, poly = 0;
  for (const auto& a : alt.annotations) {
    spans += a.tag.rfind("span=", 0) == 0;
    poly += a.tag == "poly";
  }
  CHECK(spans == 2);
  CHECK(poly == 1);
}

TEST_CASE("diacritic removal") {
  const auto& s = spec("diacritic");
  CHECK(remove_diacritics(s, "pătă") == "pt");
  CHECK(remove_diacritics(s, "pata") == "pata");
  const auto lex = gen_lexicon(s, 300, 4);
  std::size_t diac = 0, undiac = 0;
  for (const auto& e : lex) {
    diac += e.has_tag("diac");
    undiac += e.has_tag("undiac");
  }
  CHECK(diac == undiac);
  CHECK(diac > 0);
}

TEST_CASE("lexicon generation") {
  const auto& s = spec("regular");
  const auto lex = gen_lexicon(s, 1000, 3);
  CHECK(lex.size() == 1000);
  std::set<std::string> texts;
  for (const auto& e : lex) {
    texts.insert(e.text);
    CHECK(oracle_pronounce(s, e.text).pron == e.pron);
    REQUIRE(e.lemma.has_value());
    CHECK(e.text.rfind(*e.lemma, 0) == 0);
  }
  CHECK(texts.size() == 1000);
  CHECK(gen_lexicon(s, 1000, 3) == lex);
  CHECK_FALSE(gen_lexicon(s, 1000, 4) == lex);
}

TEST_CASE("sentence generation") {
  const auto& s = spec("homograph");
  SentenceOptions o;
  o.homograph_incidence = 0.3;
  const auto sents = gen_sentences(s, 500, 9, o);
  CHECK(sents.size() == 500);
  std::size_t with_hom = 0;
  std::vector<PronPair> pairs;
  for (const auto& e : sents) {
    with_hom += e.has_tag("hom");
    pairs.push_back({e.pron, oracle_pronounce(s, e.text).pron});
  }
  CHECK(with_hom >= 150);
  CHECK(ser(pairs) == 0.0);
  CHECK(gen_sentences(s, 500, 9, o) == sents);
  SentenceOptions bad;
  bad.homograph_incidence = 1.5;
  CHECK_THROWS_AS(gen_sentences(s, 10, 1, bad), SynthError);
  CHECK(gen_sentences(spec("regular"), 10, 1).size() == 10);
}

TEST_CASE("specs share most of their phoneme inventory") {
  std::vector<LangSpec> all;
  for (const char* n : {"regular", "homograph", "liaison", "logographic", "diacritic"}) all.push_back(spec(n));
  for (double o : inventory_overlap(all)) CHECK(o >= 0.6);
}
