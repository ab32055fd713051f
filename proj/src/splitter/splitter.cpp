#include "unifront/splitter/splitter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"
#include "unifront/random.hpp"

namespace unifront {

std::string_view partition_name(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Dev: return "dev";
    case Partition::Test: return "test";
  }
  return "train";
}

Partition parse_partition(std::string_view s) {
  if (s == "train") return Partition::Train;
  if (s == "dev") return Partition::Dev;
  if (s == "test") return Partition::Test;
  throw ParseError("unknown partition '" + std::string(s) + "'");
}

std::vector<LemmaGroup> group_by_lemma(const std::vector<PronunciationEntry>& entries,
                                       const LemmatizeFn& lemmatize) {
  std::map<std::string, LemmaGroup> by_lemma;
  for (const auto& e : entries) {
    std::string lemma = lemmatize(e.text);
    auto& g = by_lemma[lemma];
    g.lemma = lemma;
    g.members.push_back(e);
  }
  std::vector<LemmaGroup> out;
  out.reserve(by_lemma.size());
  for (auto& [_, g] : by_lemma) out.push_back(std::move(g));
  return out;
}

std::vector<LemmaGroup> group_by_lemma(const std::vector<PronunciationEntry>& entries) {
  std::unordered_map<std::string, std::string> table;
  for (const auto& e : entries) {
    if (e.lemma && !e.lemma->empty()) table.emplace(e.text, *e.lemma);
  }
  return group_by_lemma(entries, [&](const std::string& w) {
    auto it = table.find(w);
    return it == table.end() ? default_lemmatizer(w) : it->second;
  });
}

SuffixLemmatizer::SuffixLemmatizer() : SuffixLemmatizer({"s", "es", "ed", "ing", "er", "est"}) {}

SuffixLemmatizer::SuffixLemmatizer(std::vector<std::string> suffixes) : suffixes_(std::move(suffixes)) {}

void SuffixLemmatizer::load_exceptions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lemma file " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected word<TAB>lemma");
    }
    exact_[fields[0]] = fields[1];
  }
}

std::string SuffixLemmatizer::operator()(const std::string& word) const {
  if (auto it = exact_.find(word); it != exact_.end()) return it->second;
  std::string lower = ascii_lower(word);
  if (auto it = exact_.find(lower); it != exact_.end()) return it->second;
  auto chars = utf8_chars(lower);
  std::size_t best = 0;
  for (const auto& suffix : suffixes_) {
    std::size_t n = utf8_length(suffix);
    if (n <= best || n == 0 || chars.size() < n + kMinStem) continue;
    if (lower.size() >= suffix.size() && lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0) {
      best = n;
    }
  }
  if (best == 0) return lower;
  std::string stem;
  for (std::size_t i = 0; i + best < chars.size(); ++i) stem += chars[i];
  return stem;
}

std::string default_lemmatizer(const std::string& word) {
  static const SuffixLemmatizer lemmatizer;
  return lemmatizer(word);
}

FrequencyTable FrequencyTable::read(std::istream& in) {
  FrequencyTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    std::uint64_t n = 0;
    if (fields.size() != 2) throw ParseError("frequency line " + std::to_string(line_no) + ": expected word<TAB>count");
    auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), n);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size()) {
      throw ParseError("frequency line " + std::to_string(line_no) + ": bad count '" + fields[1] + "'");
    }
    table.counts_[fields[0]] = n;
  }
  return table;
}

FrequencyTable FrequencyTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open frequency file " + path);
  return read(in);
}

std::map<std::string, Partition> SplitManifest::as_map() const {
  std::map<std::string, Partition> out;
  for (const auto& [lemma, p] : assignment) out[lemma] = p;
  return out;
}

void SplitManifest::write(std::ostream& out) const {
  auto fmt = [](double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
  };
  out << "# locale=" << locale.str() << " seed=" << seed << " ratios=" << fmt(requested.train) << ','
      << fmt(requested.dev) << ',' << fmt(requested.test) << " achieved=" << fmt(achieved.train) << ','
      << fmt(achieved.dev) << ',' << fmt(achieved.test) << " cap=" << frequency_cap << '\n';
  for (const auto& [lemma, p] : assignment) out << lemma << '\t' << partition_name(p) << '\n';
}

namespace {

SplitRatios parse_ratio_triple(const std::string& s) {
  auto parts = split(s, ',');
  if (parts.size() != 3) throw ParseError("ratio triple '" + s + "' must have three values");
  return {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
}

}  // namespace

SplitManifest SplitManifest::read(std::istream& in) {
  SplitManifest m;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header) continue;
      header = true;
      for (const auto& kv : split_ws(line.substr(1))) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "locale") m.locale = Locale::parse(value);
        else if (key == "seed") m.seed = std::stoull(value);
        else if (key == "ratios") m.requested = parse_ratio_triple(value);
        else if (key == "achieved") m.achieved = parse_ratio_triple(value);
        else if (key == "cap") m.frequency_cap = std::stoull(value);
      }
      continue;
    }
    auto fields = split(line, '\t');
    if (fields.size() != 2) throw ParseError("manifest line '" + line + "' is not lemma<TAB>partition");
    m.assignment.emplace_back(fields[0], parse_partition(fields[1]));
  }
  if (!header) throw ParseError("manifest has no header line");
  return m;
}

std::uint64_t nearest_rank_percentile(std::vector<std::uint64_t> values, double pct) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

SplitManifest sample_split(const std::vector<LemmaGroup>& groups, const FrequencyTable& freqs,
                           const SplitRatios& ratios, std::uint64_t seed, double percentile) {
  if (groups.empty()) throw SplitError("cannot split an empty group list");
  if (ratios.train <= 0 || ratios.dev <= 0 || ratios.test <= 0 ||
      std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-6) {
    throw SplitError("split ratios must be positive and sum to 1");
  }

  // Frequencies are taken over word types: each distinct spelling counts once.
  std::set<std::string> types;
  std::size_t total = 0;
  for (const auto& g : groups) {
    total += g.members.size();
    for (const auto& m : g.members) types.insert(m.text);
  }
  std::vector<std::uint64_t> type_freqs;
  type_freqs.reserve(types.size());
  for (const auto& t : types) type_freqs.push_back(freqs.count(t));

  SplitManifest m;
  m.locale = groups.front().members.front().locale;
  m.seed = seed;
  m.requested = ratios;
  m.frequency_cap = nearest_rank_percentile(std::move(type_freqs), percentile);

  struct Candidate {
    std::size_t group;
    std::size_t member;
  };
  std::vector<Candidate> pool;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (std::size_t mi = 0; mi < groups[gi].members.size(); ++mi) {
      if (freqs.count(groups[gi].members[mi].text) <= m.frequency_cap) pool.push_back({gi, mi});
    }
  }

  std::vector<int> assigned(groups.size(), -1);
  Rng rng(seed);
  std::size_t counts[3] = {0, 0, 0};

  auto fill = [&](Partition p, double ratio, std::vector<std::string>& drawn) {
    const double quota = ratio * static_cast<double>(total);
    auto& count = counts[static_cast<int>(p)];
    while (static_cast<double>(count) < quota) {
      if (pool.empty()) {
        throw SplitError("eligible pool exhausted while filling " + std::string(partition_name(p)) +
                         ": achieved fraction " + std::to_string(static_cast<double>(count) / total) +
                         " of requested " + std::to_string(ratio) + "; relax the percentile cap");
      }
      const Candidate pick = pool[uniform_index(rng, pool.size())];
      drawn.push_back(groups[pick.group].members[pick.member].text);
      assigned[pick.group] = static_cast<int>(p);
      count += groups[pick.group].members.size();
      std::erase_if(pool, [&](const Candidate& c) { return c.group == pick.group; });
    }
  };
  fill(Partition::Test, ratios.test, m.drawn_test);
  fill(Partition::Dev, ratios.dev, m.drawn_dev);

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    Partition p = assigned[gi] < 0 ? Partition::Train : static_cast<Partition>(assigned[gi]);
    if (assigned[gi] < 0) counts[0] += groups[gi].members.size();
    m.assignment.emplace_back(groups[gi].lemma, p);
  }
  std::sort(m.assignment.begin(), m.assignment.end());
  const double n = static_cast<double>(total);
  m.achieved = {counts[0] / n, counts[1] / n, counts[2] / n};
  return m;
}

std::size_t SentenceSplit::count(Partition p) const {
  return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), p));
}

SentenceSplit split_sentences(const std::vector<PronunciationEntry>& entries, double test_fraction,
                              std::uint64_t seed, double dev_fraction) {
  if (!(test_fraction >= 0.01 && test_fraction <= 0.10)) {
    throw SplitError("sentence test fraction must lie in [0.01, 0.10], got " + std::to_string(test_fraction));
  }
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0 - test_fraction)) {
    throw SplitError("sentence dev fraction out of range");
  }
  // Units: entries sharing (locale, pronunciation), in first-seen order.
  std::map<std::pair<std::string, std::string>, std::size_t> unit_of;
  std::vector<std::vector<std::size_t>> units;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto key = std::make_pair(entries[i].locale.str(), entries[i].pron.str());
    auto [it, inserted] = unit_of.emplace(key, units.size());
    if (inserted) units.emplace_back();
    units[it->second].push_back(i);
  }
  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);

  SentenceSplit out;
  out.assignment.assign(entries.size(), Partition::Train);
  const double n = static_cast<double>(entries.size());
  const auto test_quota = static_cast<std::size_t>(std::llround(test_fraction * n));
  const auto dev_quota = static_cast<std::size_t>(std::llround(dev_fraction * n));
  std::size_t next = 0, test_count = 0, dev_count = 0;
  while (test_count < test_quota && next < order.size()) {
    for (auto i : units[order[next]]) out.assignment[i] = Partition::Test;
    test_count += units[order[next++]].size();
  }
  while (dev_count < dev_quota && next < order.size()) {
    for (auto i : units[order[next]]) out.assignment[i] = Partition::Dev;
    dev_count += units[order[next++]].size();
  }
  return out;
}

std::vector<std::string> verify_split(const SplitManifest& manifest, const std::vector<LemmaGroup>& groups) {
  std::vector<std::string> violations;
  std::map<std::string, std::vector<Partition>> seen;
  for (const auto& [lemma, p] : manifest.assignment) seen[lemma].push_back(p);
  std::set<std::string> known;
  for (const auto& g : groups) {
    known.insert(g.lemma);
    auto it = seen.find(g.lemma);
    if (it == seen.end()) {
      violations.push_back("lemma '" + g.lemma + "' is not assigned to any partition");
    } else if (it->second.size() > 1) {
      std::string parts;
      for (auto p : it->second) parts += std::string(parts.empty() ? "" : ",") + std::string(partition_name(p));
      violations.push_back("lemma '" + g.lemma + "' is assigned " + std::to_string(it->second.size()) +
                           " times (" + parts + ")");
    }
  }
  for (const auto& [lemma, _] : seen) {
    if (!known.count(lemma)) violations.push_back("manifest lemma '" + lemma + "' matches no group");
  }
  return violations;
}

}  // namespace unifront
