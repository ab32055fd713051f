#include "unifront/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "unifront/codec/codec.hpp"
#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"
#include "unifront/metrics/metrics.hpp"
#include "unifront/model/checkpoint.hpp"
#include "unifront/model/decode.hpp"
#include "unifront/model/trainer.hpp"

namespace fs = std::filesystem;

namespace unifront {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::vector<PronunciationEntry> read_all(const std::vector<std::string>& files, const std::string& locale) {
  std::vector<PronunciationEntry> out;
  std::optional<Locale> only;
  if (!locale.empty()) only = Locale::parse(locale);
  for (const auto& f : files) {
    require_file(f, "corpus file");
    for (auto& e : read_corpus_file(f)) {
      if (!only || e.locale == *only) out.push_back(std::move(e));
    }
  }
  return out;
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- synth

int cmd_synth(const SynthOptions& o, std::ostream& log) {
  if (o.specs.empty()) throw UsageError("at least one spec file is required");
  if (o.out_dir.empty()) throw UsageError("output directory is required");
  if (o.words < 0 || o.sentences < 0) throw UsageError("counts must be >= 0");
  std::vector<LangSpec> specs;
  for (const auto& path : o.specs) {
    require_file(path, "spec file");
    try {
      specs.push_back(load_langspec(path));
    } catch (const SynthError& e) {
      throw UsageError(e.what());
    }
  }
  fs::create_directories(o.out_dir);
  std::ostringstream manifest;
  manifest << "# file\tlocale\tkind\tentries\tspec\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    const std::string loc = spec.locale.str();
    const std::uint64_t seed = o.seed ^ fnv1a(loc);
    if (o.words > 0) {
      const auto lex = gen_lexicon(spec, o.words, seed);
      const std::string name = loc + ".words.tsv";
      write_corpus_file(path_in(o.out_dir, name), lex);
      manifest << name << '\t' << loc << "\tw\t" << lex.size() << '\t' << o.specs[i] << '\n';
      log << loc << ": " << lex.size() << " word entries\n";
    }
    if (o.sentences > 0) {
      const auto sent = gen_sentences(spec, o.sentences, seed + 1, o.sentence);
      const std::string name = loc + ".sentences.tsv";
      write_corpus_file(path_in(o.out_dir, name), sent);
      manifest << name << '\t' << loc << "\ts\t" << sent.size() << '\t' << o.specs[i] << '\n';
      log << loc << ": " << sent.size() << " sentence entries\n";
    }
  }
  write_file_atomic(path_in(o.out_dir, "manifest.tsv"), manifest.str());
  return kExitOk;
}

// ---------------------------------------------------------------- split

int cmd_split(const SplitOptions& o, std::ostream& log) {
  if (o.corpora.empty()) throw UsageError("at least one corpus file is required");
  if (o.out_dir.empty()) throw UsageError("output directory is required");
  const auto& r = o.ratios;
  if (r.train < 0 || r.dev < 0 || r.test < 0 || std::abs(r.train + r.dev + r.test - 1.0) > 1e-6) {
    throw UsageError("split ratios must be nonnegative and sum to 1");
  }
  if (!(o.sentence_test >= 0.01 && o.sentence_test <= 0.10)) {
    throw UsageError("sentence test fraction must lie in [0.01, 0.10]");
  }
  FrequencyTable freqs;
  if (!o.freq_file.empty() && fs::is_regular_file(o.freq_file)) {
    freqs = FrequencyTable::load(o.freq_file);
  } else {
    log << "warning: frequency file " << (o.freq_file.empty() ? "<none>" : o.freq_file)
        << " not found; all frequencies are 0\n";
  }

  std::map<Locale, std::vector<PronunciationEntry>> words, sentences;
  for (auto& e : read_all(o.corpora, "")) {
    (e.kind == EntryKind::Word ? words : sentences)[e.locale].push_back(std::move(e));
  }
  std::set<Locale> locales;
  for (const auto& [l, _] : words) locales.insert(l);
  for (const auto& [l, _] : sentences) locales.insert(l);

  fs::create_directories(o.out_dir);
  int violations = 0;
  for (const auto& loc : locales) {
    std::vector<PronunciationEntry> part[3];
    auto slot = [](Partition p) { return static_cast<int>(p); };
    if (auto it = words.find(loc); it != words.end()) {
      const auto groups = group_by_lemma(it->second);
      SplitManifest m = sample_split(groups, freqs, o.ratios, o.seed, o.percentile);
      m.locale = loc;
      for (const auto& v : verify_split(m, groups)) {
        log << loc.str() << ": split violation: " << v << '\n';
        ++violations;
      }
      const auto assign = m.as_map();
      for (const auto& g : groups) {
        const Partition p = assign.at(g.lemma);
        for (const auto& e : g.members) part[slot(p)].push_back(e);
      }
      std::ostringstream ms;
      m.write(ms);
      write_file_atomic(path_in(o.out_dir, loc.str() + ".manifest"), ms.str());
      log << loc.str() << ": words train/dev/test = " << part[0].size() << "/" << part[1].size() << "/"
          << part[2].size() << " (achieved test " << fmt_double(m.achieved.test) << ", cap " << m.frequency_cap
          << ")\n";
    }
    if (auto it = sentences.find(loc); it != sentences.end()) {
      const auto s = split_sentences(it->second, o.sentence_test, o.seed, o.sentence_dev);
      for (std::size_t i = 0; i < it->second.size(); ++i) part[slot(s.assignment[i])].push_back(it->second[i]);
      log << loc.str() << ": sentences train/dev/test = " << s.count(Partition::Train) << "/"
          << s.count(Partition::Dev) << "/" << s.count(Partition::Test) << '\n';
    }
    for (Partition p : {Partition::Train, Partition::Dev, Partition::Test}) {
      write_corpus_file(path_in(o.out_dir, loc.str() + "." + std::string(partition_name(p)) + ".tsv"), part[slot(p)]);
    }
  }
  return violations ? kExitFailures : kExitOk;
}

// ---------------------------------------------------------------- train

int cmd_train(const TrainOptionsCli& o, std::ostream& log) {
  if (o.out_dir.empty()) throw UsageError("output directory is required");
  if (o.train_files.empty()) throw UsageError("at least one training file is required");
  try {
    o.model.validate();
    o.train.validate(o.model);
  } catch (const ModelError& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  const auto train_set = read_all(o.train_files, o.locale);
  const auto dev_set = read_all(o.dev_files, o.locale);
  if (train_set.empty()) throw UsageError("no training entries" + (o.locale.empty() ? "" : " for locale " + o.locale));

  std::optional<Checkpoint> resume;
  TrainOptions opts;
  opts.out_dir = o.out_dir;
  if (!o.resume.empty()) {
    require_file(o.resume, "resume checkpoint");
    resume.emplace(load_checkpoint(o.resume));
    opts.resume = &*resume;
    log << "resuming from step " << resume->step << '\n';
  }
  opts.on_record = [&](const TrainLogRecord& r) { log << format_log_record(r) << '\n'; };
  const auto result = train(o.model, o.train, train_set, dev_set, opts);
  log << "trained " << result.steps << " steps, " << result.best.model.parameter_count() << " parameters";
  if (result.best_dev_per) log << ", best dev PER " << fmt_double(*result.best_dev_per) << " at step " << result.best.step;
  log << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- predict

std::string format_prediction(const Prediction& p) {
  std::string line = p.locale + '\t' + p.kind + '\t' + p.text + '\t' + p.pron.str() + '\t';
  line += p.flags.empty() ? "-" : join(p.flags, ",");
  return line;
}

Prediction parse_prediction(const std::string& line) {
  auto f = split(line, '\t');
  if (f.size() != 5) throw ParseError("prediction line needs 5 tab-separated fields");
  Prediction p;
  p.locale = f[0];
  if (f[1].size() != 1) throw ParseError("bad kind '" + f[1] + "'");
  p.kind = f[1][0];
  p.text = f[2];
  p.pron = PhonemeSeq::lenient(split_ws(f[3]));
  if (f[4] != "-") p.flags = split(f[4], ',');
  return p;
}

std::vector<Prediction> read_predictions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open predictions file " + path);
  std::vector<Prediction> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(parse_prediction(line));
    } catch (const Error& e) {
      throw ParseError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

int cmd_predict(const PredictOptions& o, std::ostream& log) {
  require_file(o.checkpoint, "checkpoint");
  require_file(o.input, "input file");
  if (o.output.empty()) throw UsageError("output file is required");
  if (o.beam < 1) throw UsageError("beam must be >= 1");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const int max_len = o.max_len > 0 ? o.max_len : ckpt.config().max_tgt_len;

  std::ifstream in(o.input);
  std::vector<Prediction> preds;
  std::vector<std::vector<int>> srcs;
  std::vector<std::size_t> slots;
  std::string line;
  std::size_t errors = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    Prediction p;
    p.locale = f[0];
    if (f.size() >= 3) {
      p.kind = f[1].empty() ? 'w' : f[1][0];
      p.text = f[2];
    } else {
      p.text = f.size() > 1 ? f[1] : "";
      p.kind = p.text.find(' ') == std::string::npos ? 'w' : 's';
    }
    try {
      const Locale loc = Locale::parse(f[0]);
      if (!o.locale.empty() && !(loc == Locale::parse(o.locale))) continue;
      p.locale = loc.str();
      if (p.text.empty()) throw EncodeError("empty text");
      auto src = encode_source(ckpt.vocab, loc, p.text);
      if (static_cast<int>(src.size()) > ckpt.config().max_src_len) throw EncodeError("text too long");
      slots.push_back(preds.size());
      srcs.push_back(std::move(src));
    } catch (const Error& e) {
      std::string why = e.what();
      std::replace(why.begin(), why.end(), '\t', ' ');
      std::replace(why.begin(), why.end(), ',', ';');
      p.flags.push_back("error=" + why);
      ++errors;
    }
    preds.push_back(std::move(p));
  }
  const auto results = decode_all(ckpt.model, srcs, o.beam, max_len);
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& p = preds[slots[i]];
    p.pron = decode_target(ckpt.vocab, results[i].ids);
    if (results[i].truncated) p.flags.push_back("truncated");
    if (p.pron.degenerate()) p.flags.push_back("degenerate");
  }
  std::string out;
  for (const auto& p : preds) out += format_prediction(p) + '\n';
  write_file_atomic(o.output, out);
  log << preds.size() << " predictions (" << errors << " input errors)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

Assertion Assertion::parse(const std::string& s) {
  static const char* ops[] = {"<=", ">=", "<", ">"};
  for (const char* op : ops) {
    const auto at = s.find(op);
    if (at == std::string::npos) continue;
    Assertion a;
    a.metric = trim(s.substr(0, at));
    a.op = op;
    const std::string rhs = trim(s.substr(at + std::string(op).size()));
    if (auto amp = a.metric.find('@'); amp != std::string::npos) {
      a.test_set = a.metric.substr(amp + 1);
      a.metric = a.metric.substr(0, amp);
    }
    try {
      std::size_t used = 0;
      a.bound = std::stod(rhs, &used);
      if (used != rhs.size()) throw std::invalid_argument(rhs);
    } catch (const std::logic_error&) {
      throw UsageError("bad assertion bound in '" + s + "'");
    }
    if (a.metric.empty()) throw UsageError("assertion '" + s + "' names no metric");
    return a;
  }
  throw UsageError("assertion '" + s + "' needs one of <=, >=, <, >");
}

bool Assertion::holds(double v) const {
  if (op == "<=") return v <= bound;
  if (op == ">=") return v >= bound;
  if (op == "<") return v < bound;
  return v > bound;
}

namespace {

std::string test_set_of(const PronunciationEntry& e) {
  std::string base = e.kind == EntryKind::Word ? "words" : "sentences";
  for (const auto& a : e.annotations) {
    if (a.index == 0 && a.tag == "diac") return base + "_diac";
    if (a.index == 0 && a.tag == "undiac") return base + "_undiac";
  }
  return base;
}

std::vector<std::pair<std::size_t, std::size_t>> char_spans(const PronunciationEntry& e) {
  std::map<int, std::pair<std::size_t, std::size_t>> by_index;
  for (const auto& a : e.annotations) {
    if (a.tag.rfind("span=", 0) != 0) continue;
    const std::string v = a.tag.substr(5);
    const auto dash = v.find('-');
    if (dash == std::string::npos) throw ParseError("bad span annotation '" + a.tag + "'");
    by_index[a.index] = {std::stoul(v.substr(0, dash)), std::stoul(v.substr(dash + 1))};
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [i, s] : by_index) {
    if (i != static_cast<int>(out.size())) throw ParseError("span annotations must cover every character of '" + e.text + "'");
    out.push_back(s);
  }
  return out;
}

struct SetData {
  std::vector<PronPair> pairs;
  std::vector<HomographCase> hom;
  std::vector<PolyphoneCase> poly;
  std::vector<PlrCase> plr;
  bool has_hom = false, has_poly = false, has_plr = false;
  bool sentences = false;
  std::size_t unmatched = 0;
};

}  // namespace

std::vector<EvalRecord> evaluate_entries(const std::vector<PronunciationEntry>& gold,
                                         const std::vector<Prediction>& predictions, std::ostream& log) {
  std::map<std::pair<std::string, std::string>, std::deque<const Prediction*>> by_key;
  for (const auto& p : predictions) by_key[{p.locale, p.text}].push_back(&p);

  std::map<std::pair<std::string, std::string>, SetData> sets;
  std::size_t unmatched_gold = 0;
  for (const auto& g : gold) {
    auto& d = sets[{g.locale.str(), test_set_of(g)}];
    d.sentences = g.kind == EntryKind::Sentence;
    d.has_hom |= g.has_tag("hom");
    d.has_plr |= g.has_tag("plr");
    d.has_poly |= g.has_tag("span");
    auto it = by_key.find({g.locale.str(), g.text});
    if (it == by_key.end() || it->second.empty()) {
      ++d.unmatched;
      if (++unmatched_gold <= 20) log << "unmatched gold line: " << g.locale.str() << '\t' << g.text << '\n';
      continue;
    }
    const PhonemeSeq hyp = it->second.front()->pron;
    it->second.pop_front();
    d.pairs.push_back({g.pron, hyp});
    for (int w : g.indices_with("hom")) d.hom.push_back({g.pron, hyp, static_cast<std::size_t>(w)});
    if (g.has_tag("plr") || d.sentences) {
      PlrCase c{g.pron, hyp, {}};
      for (int w : g.indices_with("plr")) c.affected_words.push_back(static_cast<std::size_t>(w));
      d.plr.push_back(std::move(c));
    }
    if (g.has_tag("span")) {
      PolyphoneCase c{g.pron, hyp, char_spans(g), {}};
      for (int i : g.indices_with("poly")) c.polyphone_chars.push_back(static_cast<std::size_t>(i));
      d.poly.push_back(std::move(c));
    }
  }
  std::size_t leftover = 0;
  for (const auto& [_, q] : by_key) leftover += q.size();
  if (unmatched_gold) log << unmatched_gold << " gold lines had no prediction and were excluded\n";
  if (leftover) log << leftover << " predictions had no gold line and were ignored\n";

  std::vector<EvalRecord> out;
  for (const auto& [key, d] : sets) {
    const auto& [locale, test_set] = key;
    auto rec = [&](std::string metric, std::optional<double> v, std::size_t evaluated, std::size_t skipped) {
      out.push_back({locale, test_set, std::move(metric), v, evaluated, skipped + d.unmatched});
    };
    const std::size_t n = d.pairs.size();
    rec("per", n ? std::optional(per(d.pairs)) : std::nullopt, n, 0);
    if (d.sentences) {
      rec("ser", n ? std::optional(ser(d.pairs)) : std::nullopt, n, 0);
    } else {
      rec("wer", n ? std::optional(wer(d.pairs)) : std::nullopt, n, 0);
    }
    if (d.has_hom) {
      const auto r = homograph_accuracy(d.hom);
      rec("homograph_accuracy", r.accuracy, r.evaluated, r.skipped);
    }
    if (d.has_poly) {
      const auto r = polyphone_accuracy(d.poly);
      rec("polyphone_char_accuracy", r.accuracy_all_chars, r.chars_scored, r.skipped);
      rec("polyphone_accuracy", r.accuracy_polyphones, r.polyphones_scored, r.skipped);
    }
    if (d.has_plr) {
      std::optional<PlrResult> r;
      if (!d.plr.empty()) r = plr_eval(d.plr);
      rec("plr_per_affected", r ? r->per_affected : std::nullopt, r ? r->affected_words : 0, r ? r->skipped : 0);
      rec("plr_wer_affected", r ? r->wer_affected : std::nullopt, r ? r->affected_words : 0, r ? r->skipped : 0);
      rec("plr_per_whole", r ? std::optional(r->per_whole) : std::nullopt, r ? r->evaluated : 0, r ? r->skipped : 0);
    }
  }
  return out;
}

int cmd_eval(const EvalOptions& o, std::ostream& log) {
  require_file(o.gold, "gold file");
  require_file(o.predictions, "predictions file");
  if (o.output.empty()) throw UsageError("output report path is required");
  std::vector<Assertion> asserts;
  for (const auto& s : o.asserts) asserts.push_back(Assertion::parse(s));

  auto gold = read_all({o.gold}, o.locale);
  auto preds = read_predictions_file(o.predictions);
  const auto records = evaluate_entries(gold, preds, log);
  write_file_atomic(o.output, format_report(records));

  int failed = 0;
  for (const auto& a : asserts) {
    bool matched = false;
    for (const auto& r : records) {
      if (r.metric != a.metric || (!a.test_set.empty() && r.test_set != a.test_set)) continue;
      matched = true;
      if (!r.value || !a.holds(*r.value)) {
        log << "assertion failed: " << r.locale << ' ' << r.test_set << ' ' << r.metric << " = "
            << (r.value ? fmt_double(*r.value) : "null") << " (want " << a.op << ' ' << fmt_double(a.bound) << ")\n";
        ++failed;
      }
    }
    if (!matched) {
      log << "assertion failed: no records for metric " << a.metric << '\n';
      ++failed;
    }
  }
  log << records.size() << " records written to " << o.output << '\n';
  return failed ? kExitFailures : kExitOk;
}

// ---------------------------------------------------------------- compare

std::vector<ComparisonRow> compare_reports(const std::vector<EvalRecord>& a, const std::vector<EvalRecord>& b) {
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<const EvalRecord*, const EvalRecord*>> joined;
  for (const auto& r : a) joined[{r.locale, r.test_set, r.metric}].first = &r;
  for (const auto& r : b) joined[{r.locale, r.test_set, r.metric}].second = &r;
  std::vector<ComparisonRow> rows;
  for (const auto& [key, pr] : joined) {
    ComparisonRow row;
    std::tie(row.locale, row.test_set, row.metric) = key;
    if (pr.first) row.a = pr.first->value;
    if (pr.second) row.b = pr.second->value;
    if (!pr.first) {
      row.flag = "missing_a";
    } else if (!pr.second) {
      row.flag = "missing_b";
    } else if (!row.a || !row.b) {
      row.flag = "no_value";
    } else {
      row.delta = *row.b - *row.a;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt_double(*v) : "-"; }

}  // namespace

std::string format_comparison_tsv(const std::vector<ComparisonRow>& rows, const std::string& label_a,
                                  const std::string& label_b) {
  std::string out = "locale\ttest_set\tmetric\t" + label_a + "\t" + label_b + "\tdelta\tflag\n";
  for (const auto& r : rows) {
    out += r.locale + '\t' + r.test_set + '\t' + r.metric + '\t' + cell(r.a) + '\t' + cell(r.b) + '\t' +
           cell(r.delta) + '\t' + (r.flag.empty() ? "-" : r.flag) + '\n';
  }
  return out;
}

std::string format_comparison_markdown(const std::vector<ComparisonRow>& rows, const std::string& label_a,
                                       const std::string& label_b) {
  std::vector<std::string> columns;
  std::map<std::string, std::map<std::string, const ComparisonRow*>> grid;
  for (const auto& r : rows) {
    const std::string col = r.test_set + " " + r.metric;
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    grid[r.locale][col] = &r;
  }
  std::sort(columns.begin(), columns.end());
  std::string out = "Cells are " + label_a + " / " + label_b + " (delta).\n\n| locale |";
  for (const auto& c : columns) out += " " + c + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
  out += '\n';
  for (const auto& [locale, cells] : grid) {
    out += "| " + locale + " |";
    for (const auto& c : columns) {
      auto it = cells.find(c);
      if (it == cells.end()) {
        out += " |";
        continue;
      }
      const auto& r = *it->second;
      out += " " + cell(r.a) + " / " + cell(r.b);
      if (r.delta) out += " (" + (*r.delta >= 0 ? std::string("+") : std::string()) + fmt_double(*r.delta) + ")";
      if (!r.flag.empty()) out += " [" + r.flag + "]";
      out += " |";
    }
    out += '\n';
  }
  return out;
}

int cmd_compare(const CompareOptions& o, std::ostream& log) {
  require_file(o.report_a, "report A");
  require_file(o.report_b, "report B");
  if (o.out_prefix.empty()) throw UsageError("output prefix is required");
  const auto rows = compare_reports(read_report_file(o.report_a), read_report_file(o.report_b));
  std::size_t missing = 0;
  for (const auto& r : rows) missing += r.flag.empty() ? 0 : 1;
  if (missing) log << "warning: " << missing << " of " << rows.size() << " rows lack a value on one side\n";
  write_file_atomic(o.out_prefix + ".tsv", format_comparison_tsv(rows, o.label_a, o.label_b));
  write_file_atomic(o.out_prefix + ".md", format_comparison_markdown(rows, o.label_a, o.label_b));
  log << rows.size() << " rows compared\n";
  return kExitOk;
}

}  // namespace unifront
