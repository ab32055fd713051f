#include <set>
#include <sstream>

#include "doctest.h"
#include "unifront/error.hpp"
#include "unifront/splitter/splitter.hpp"

using namespace unifront;

namespace {

PronunciationEntry w(const std::string& text) {
  PronunciationEntry e;
  e.locale = Locale::parse("qr-xa");
  e.text = text;
  e.pron = PhonemeSeq::parse("a");
  return e;
}

std::vector<LemmaGroup> singletons(int n) {
  std::vector<LemmaGroup> g;
  for (int i = 0; i < n; ++i) g.push_back({"w" + std::to_string(i), {w("w" + std::to_string(i))}});
  return g;
}

}  // namespace

TEST_CASE("lemma grouping") {
  const std::vector<PronunciationEntry> es = {w("cats"), w("cat"), w("dog")};
  const auto g = group_by_lemma(es, [](const std::string& s) { return default_lemmatizer(s); });
  REQUIRE(g.size() == 2);
  std::map<std::string, std::size_t> sizes;
  for (const auto& x : g) sizes[x.lemma] = x.size();
  CHECK(sizes["cat"] == 2);
  CHECK(sizes["dog"] == 1);
  CHECK(group_by_lemma(es, [](const std::string& s) { return s; }).size() == 3);
  CHECK(group_by_lemma({}, default_lemmatizer).empty());

  // the lemma column wins over the lemmatizer
  auto a = w("runner");
  a.lemma = "run";
  auto b = w("ran");
  b.lemma = "run";
  CHECK(group_by_lemma({a, b}).size() == 1);
}

TEST_CASE("default lemmatizer") {
  CHECK(default_lemmatizer("Walking") == "walk");
  CHECK(default_lemmatizer("as") == "as");
  SuffixLemmatizer lem;
  lem.set_exceptions({{"cats", "cat"}});
  CHECK(lem("cats") == "cat");
}

TEST_CASE("frequency table lookup is total") {
  std::istringstream in("pata\t12\nkiso\t3\n");
  const auto f = FrequencyTable::read(in);
  CHECK(f.count("pata") == 12);
  CHECK(f.count("nope") == 0);
}

TEST_CASE("sample_split on singletons") {
  const auto groups = singletons(100);
  const auto m = sample_split(groups, FrequencyTable{}, SplitRatios{}, 7);
  int counts[3] = {0, 0, 0};
  std::set<std::string> seen;
  for (const auto& [lemma, p] : m.assignment) {
    ++counts[static_cast<int>(p)];
    CHECK(seen.insert(lemma).second);
  }
  CHECK(counts[0] == 85);
  CHECK(counts[1] == 5);
  CHECK(counts[2] == 10);
  CHECK(verify_split(m, groups).empty());

  const auto again = sample_split(groups, FrequencyTable{}, SplitRatios{}, 7);
  CHECK(again.assignment == m.assignment);

  std::stringstream ss;
  m.write(ss);
  const auto back = SplitManifest::read(ss);
  CHECK(back.assignment == m.assignment);
}

TEST_CASE("sample_split with one oversized group") {
  auto groups = singletons(80);
  LemmaGroup big{"big", {}};
  for (int i = 0; i < 20; ++i) big.members.push_back(w("big" + std::to_string(i)));
  groups.push_back(big);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = sample_split(groups, FrequencyTable{}, SplitRatios{}, seed);
    CHECK(verify_split(m, groups).empty());
    if (m.as_map().at("big") == Partition::Test) CHECK(m.achieved.test >= 0.20);
  }
}

TEST_CASE("frequency cap excludes frequent words from direct test draws") {
  const auto groups = singletons(200);
  FrequencyTable f;
  for (int i = 0; i < 200; ++i) f.set("w" + std::to_string(i), static_cast<std::uint64_t>(i));
  const auto m = sample_split(groups, f, SplitRatios{}, 3);
  CHECK(m.frequency_cap == nearest_rank_percentile([] {
          std::vector<std::uint64_t> v;
          for (int i = 0; i < 200; ++i) v.push_back(i);
          return v;
        }(), 95.0));
  for (const auto& word : m.drawn_test) CHECK(f.count(word) <= m.frequency_cap);
}

TEST_CASE("verify_split finds corruption") {
  const auto groups = singletons(10);
  auto m = sample_split(groups, FrequencyTable{}, SplitRatios{}, 1);
  auto dup = m;
  dup.assignment.push_back({dup.assignment[0].first, Partition::Test});
  CHECK(verify_split(dup, groups).size() == 1);
  auto missing = m;
  missing.assignment.pop_back();
  CHECK(verify_split(missing, groups).size() == 1);
}

TEST_CASE("sentence split") {
  std::vector<PronunciationEntry> s;
  for (int i = 0; i < 1000; ++i) {
    auto e = w("s" + std::to_string(i));
    e.kind = EntryKind::Sentence;
    e.pron = PhonemeSeq::parse("s " + std::to_string(i));
    s.push_back(e);
  }
  const auto a = split_sentences(s, 0.10, 1);
  CHECK(a.count(Partition::Test) == 100);
  CHECK(split_sentences(s, 0.10, 1).assignment == a.assignment);
  CHECK_THROWS_AS(split_sentences(s, 0.5, 1), SplitError);

  // twins (same pronunciation) never straddle partitions
  auto twin = s[0];
  twin.text = "s0x";
  s.push_back(twin);
  const auto t = split_sentences(s, 0.10, 4);
  CHECK(t.assignment.front() == t.assignment.back());
}
