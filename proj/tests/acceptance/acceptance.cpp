// Acceptance suite. One line per criterion:
//   [PASS] C7 <title>: <measured values> (<seconds> s)
// Training criteria drive the `unifront` executable end to end (synth, split,
// train, predict, eval) and read the resulting report files.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "unifront/cli/commands.hpp"
#include "unifront/codec/codec.hpp"
#include "unifront/core/utf8.hpp"
#include "unifront/error.hpp"
#include "unifront/metrics/metrics.hpp"
#include "unifront/metrics/report.hpp"
#include "unifront/model/batching.hpp"
#include "unifront/model/transformer.hpp"
#include "unifront/splitter/splitter.hpp"
#include "unifront/synthlang/synthlang.hpp"

namespace fs = std::filesystem;
using namespace unifront;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Env {
  std::string cli = UNIFRONT_CLI_PATH;
  std::string spec_dir = UNIFRONT_SPEC_DIR;
  fs::path work = UNIFRONT_WORK_DIR;
  int threads = 1;
};

Env env;

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

std::string spec_file(const std::string& name) { return env.spec_dir + "/" + name + ".spec"; }

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs one CLI invocation, logging it (and its stderr) under the task dir.
int cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = quote(env.cli) + " --threads " + std::to_string(env.threads) + " " + args;
  std::ofstream(dir / "commands.log", std::ios::app) << cmd << '\n';
  const int rc = std::system((cmd + " 2>>" + quote((dir / "stderr.log").string())).c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : 128;
}

void must(const fs::path& dir, const std::string& args) {
  const int rc = cli(dir, args);
  if (rc != 0) throw Error("command failed (exit " + std::to_string(rc) + "): unifront " + args + "; see " +
                           (dir / "stderr.log").string());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = env.work / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const EvalRecord* find_record(const std::vector<EvalRecord>& recs, const std::string& test_set,
                              const std::string& metric) {
  for (const auto& r : recs)
    if (r.test_set == test_set && r.metric == metric) return &r;
  return nullptr;
}

double value_of(const std::vector<EvalRecord>& recs, const std::string& test_set, const std::string& metric) {
  const auto* r = find_record(recs, test_set, metric);
  if (!r || !r->value) throw Error("report lacks " + test_set + "/" + metric);
  return *r->value;
}

// ------------------------------------------------------------ pipelines

struct Task {
  std::string name;
  std::string spec;
  int words = 0;
  int sentences = 0;
  std::string synth_args;
  std::string model_args;
  std::string train_args;
  int beam = 1;
};

struct TaskRun {
  fs::path dir;
  std::string locale;
  std::vector<EvalRecord> records;
  double train_seconds = 0;
  std::int64_t steps = 0;
};

TaskRun run_task(const Task& t) {
  TaskRun run;
  run.dir = fresh_dir(t.name);
  run.locale = load_langspec(spec_file(t.spec)).locale.str();
  const fs::path& d = run.dir;
  auto p = [&](const std::string& rel) { return quote((d / rel).string()); };

  must(d, "synth --spec " + quote(spec_file(t.spec)) + " --words " + std::to_string(t.words) + " --sentences " +
              std::to_string(t.sentences) + " --seed 11 " + t.synth_args + " --out " + p("corpus"));
  std::string corpora;
  if (t.words) corpora += " --corpus " + p("corpus/" + run.locale + ".words.tsv");
  if (t.sentences) corpora += " --corpus " + p("corpus/" + run.locale + ".sentences.tsv");
  must(d, "split" + corpora + " --seed 11 --sentence-test 0.10 --sentence-dev 0.05 --out " + p("split"));

  const auto split = [&](const char* part) { return p("split/" + run.locale + "." + part + ".tsv"); };
  const auto t0 = std::chrono::steady_clock::now();
  must(d, "train --train-file " + split("train") + " --dev-file " + split("dev") + " " + t.model_args + " " +
              t.train_args + " --out " + p("model"));
  run.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ifstream log(d / "model/train_log.jsonl");
  for (std::string line; std::getline(log, line);) {
    const auto at = line.find("\"step\":");
    if (at != std::string::npos) run.steps = std::stoll(line.substr(at + 7));
  }

  must(d, "predict --checkpoint " + p("model/best.ckpt") + " --input " + split("test") + " --beam " +
              std::to_string(t.beam) + " --out " + p("predictions.tsv"));
  must(d, "eval --gold " + split("test") + " --predictions " + p("predictions.tsv") + " --out " + p("report.jsonl"));
  run.records = read_report_file((d / "report.jsonl").string());
  return run;
}

std::string train_note(const TaskRun& r) {
  return "trained " + std::to_string(r.steps) + " steps in " + fmt(r.train_seconds, 3) + " s";
}

// Desk-scale shapes shared by the learning criteria.
const std::string kModel3x64 =
    "--layers 3 --d-model 64 --heads 4 --ffn-dim 256 --dropout 0.1 --max-src-len 96 --max-tgt-len 96";

// ------------------------------------------------------------ C1

std::size_t brute_edit(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                       std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  std::size_t best = 1 + brute_edit(a, i + 1, b, j);
  best = std::min(best, 1 + brute_edit(a, i, b, j + 1));
  best = std::min(best, (a[i] == b[j] ? 0 : 1) + brute_edit(a, i + 1, b, j + 1));
  return best;
}

Outcome c1() {
  Rng rng(101);
  const std::vector<std::string> alphabet = {"a", "b", "c", "@"};
  int mismatches = 0, bad_scripts = 0;
  for (int n = 0; n < 1000; ++n) {
    std::vector<std::string> a(uniform_index(rng, 7)), b(uniform_index(rng, 7));
    for (auto& x : a) x = alphabet[uniform_index(rng, alphabet.size())];
    for (auto& x : b) x = alphabet[uniform_index(rng, alphabet.size())];
    const auto al = edit_distance(a, b);
    if (al.distance != brute_edit(a, 0, b, 0)) ++mismatches;
    // the script must transform ref into hyp at the stated cost
    std::vector<std::string> out;
    std::size_t cost = 0;
    for (const auto& op : al.ops) {
      if (op.op == EditOp::Match) {
        if (a[op.ref] != b[op.hyp]) ++cost;  // a mislabeled match breaks the cost check
        out.push_back(a[op.ref]);
      } else if (op.op == EditOp::Substitute || op.op == EditOp::Insert) {
        out.push_back(b[op.hyp]);
        ++cost;
      } else {
        ++cost;
      }
    }
    if (out != b || cost != al.distance) ++bad_scripts;
  }
  return {mismatches == 0 && bad_scripts == 0,
          "1000 pairs, " + std::to_string(mismatches) + " distance mismatches, " + std::to_string(bad_scripts) +
              " invalid scripts"};
}

// ------------------------------------------------------------ C2

Outcome c2() {
  auto P = [](const char* s) { return PhonemeSeq::parse(s); };
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.push_back(what);
  };
  check(per(std::vector<PronPair>{{P("a b c d e f g h i j"), P("a b c d e f g h i x")}}) == 0.1, "per single pair");
  check(per(std::vector<PronPair>{{P("a b c d e"), P("a b c d e")}, {P("a b c d e"), P("a b c d x")}}) == 0.1,
        "per micro average");
  check(per(std::vector<PronPair>{{P("a b"), P("a b")}}) == 0.0, "per all correct");
  check(wer(std::vector<PronPair>{{P("a"), P("a")}, {P("b"), P("b")}, {P("c"), P("c")}, {P("k { t"), P("x")}}) == 0.25,
        "wer 1 of 4");
  check(wer(std::vector<PronPair>{{P("k { t"), P("\"k { t")}}) == 1.0, "wer stress-only difference");
  std::vector<PronPair> s;
  for (int i = 0; i < 10; ++i) s.push_back({P("a b <wb> c"), i < 3 ? P("a <wb> b c") : P("a b <wb> c")});
  check(ser(s) == 0.3, "ser 3 of 10 with misplaced boundaries");
  check(ser(std::vector<PronPair>{{P("a <wb> b"), P("a <wb> b")}}) == 0.0, "ser all exact");
  return {failed.empty(), failed.empty() ? "all unit examples exact" : "failed: " + join(failed, "; ")};
}

// ------------------------------------------------------------ C3

Outcome c3() {
  const auto spec = load_langspec(spec_file("regular"));
  LexiconOptions lo;
  const auto lex = gen_lexicon(spec, 10000, 5, lo);
  const auto groups = group_by_lemma(lex);
  // Zipf-like counts so the percentile cap bites.
  FrequencyTable freqs;
  Rng rng(9);
  for (const auto& e : lex) freqs.set(e.text, static_cast<std::uint64_t>(100000.0 / (1 + uniform_index(rng, 5000))));
  int violations = 0, off_ratio = 0, over_cap = 0;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto m = sample_split(groups, freqs, SplitRatios{}, seed);
    violations += static_cast<int>(verify_split(m, groups).size());
    const double dev = std::abs(m.achieved.test - 0.10);
    worst = std::max(worst, dev);
    off_ratio += dev > 0.02;
    for (const auto& w : m.drawn_test) over_cap += freqs.count(w) > m.frequency_cap;
  }
  return {violations == 0 && off_ratio == 0 && over_cap == 0,
          "100 seeds: " + std::to_string(violations) + " violations, worst |test-0.10| = " + fmt(worst, 3) + ", " +
              std::to_string(over_cap) + " drawn words over the cap"};
}

// ------------------------------------------------------------ C4

Outcome c4() {
  std::vector<PronunciationEntry> corpus;
  std::vector<std::string> phones = {"a", "e", "i", "\"a", "p", "t", "k", "S", "dZ", "@", "u_H", "a:"};
  PronunciationEntry e;
  e.locale = Locale::parse("qr-xa");
  e.text = "pa tik";
  e.kind = EntryKind::Sentence;
  e.pron = PhonemeSeq::parse(join(phones, " ") + " <wb> a");
  corpus.push_back(e);
  const Vocab v = Vocab::build(corpus);
  Rng rng(4);
  int failures = 0;
  for (int n = 0; n < 10000; ++n) {
    std::vector<std::string> toks;
    const std::size_t words = 1 + uniform_index(rng, 4);
    for (std::size_t w = 0; w < words; ++w) {
      if (w) toks.emplace_back(kWordBoundary);
      const std::size_t len = 1 + uniform_index(rng, 6);
      for (std::size_t i = 0; i < len; ++i) toks.push_back(phones[uniform_index(rng, phones.size())]);
    }
    const auto seq = PhonemeSeq::from_tokens(toks);
    const auto ids = encode_target(v, seq);
    if (!(decode_target(v, ids) == seq) || ids.size() != seq.size() + 2) ++failures;
  }
  int law = 0;
  const Locale loc = Locale::parse("qr-xa");
  const std::vector<std::string> chars = {"a", "p", "t", " ", "é", "水", "k"};
  for (int n = 0; n < 1000; ++n) {
    std::string text = "a";
    const std::size_t len = uniform_index(rng, 12);
    for (std::size_t i = 0; i < len; ++i) text += chars[uniform_index(rng, chars.size())];
    if (encode_source(v, loc, text).size() != 1 + utf8_length(text)) ++law;
  }
  return {failures == 0 && law == 0, "10000 target round trips, " + std::to_string(failures) +
                                          " failures; 1000 source length-law checks, " + std::to_string(law) +
                                          " failures"};
}

// ------------------------------------------------------------ C5

Outcome c5() {
  ModelConfig c;
  c.layers = 2;
  c.d_model = 16;
  c.heads = 2;
  c.ffn_dim = 32;
  c.dropout = 0.0;
  c.max_src_len = 16;
  c.max_tgt_len = 16;
  const int V = 12;
  const std::vector<EncodedPair> pairs = {
      {{4, 5, 6, 7}, {1, 5, 6, 2}}, {{4, 8, 9}, {1, 7, 8, 9, 5, 2}}, {{4, 5}, {1, 6, 2}}, {{4, 10, 11, 5, 6}, {1, 10, 2}}};
  std::vector<std::string> notes;
  bool ok = true;

  {  // gradient check
    Transformer<double> m(c, V, V);
    Rng init(1);
    m.initialize(init);
    const Batch batch = collate(pairs);
    m.zero_grad();
    m.forward_backward(batch, nullptr);
    auto params = m.parameters();
    Rng pick(7);
    double worst = 0;
    const double h = 1e-5;
    for (int s = 0; s < 100; ++s) {
      auto* p = params[uniform_index(pick, params.size())];
      const std::size_t i = uniform_index(pick, p->size());
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = m.compute_loss(batch).mean();
      p->value[i] = saved - h;
      const double down = m.compute_loss(batch).mean();
      p->value[i] = saved;
      const double num = (up - down) / (2 * h), ana = p->grad[i];
      const double scale = std::max(std::abs(num), std::abs(ana));
      worst = std::max(worst, scale < 1e-10 ? 0.0 : std::abs(num - ana) / scale);
    }
    ok &= worst <= 1e-3;
    notes.push_back("grad rel err " + fmt(worst, 3));
  }
  {  // causal mask
    Transformer<double> m(c, V, V);
    Rng init(2);
    m.initialize(init);
    std::vector<EncodedPair> a{{{4, 5, 6}, {1, 5, 6, 7, 8, 9, 2}}};
    bool causal = true;
    for (int pos = 1; pos < 6; ++pos) {
      auto b = a;
      b[0].tgt[pos] = 10;
      const auto la = m.logits(collate(a)), lb = m.logits(collate(b));
      for (int t = 0; t < pos; ++t)
        for (int v = 0; v < V; ++v) causal &= la[t * V + v] == lb[t * V + v];
    }
    ok &= causal;
    notes.push_back(causal ? "causal" : "NOT causal");
  }
  {  // padding
    Transformer<double> m(c, V, V);
    Rng init(3);
    m.initialize(init);
    const Batch plain = collate(pairs), padded = collate(pairs, 4, 3);
    const double a = m.compute_loss(plain).loss_sum, b = m.compute_loss(padded).loss_sum;
    const bool same = std::abs(a - b) <= 1e-10 * std::abs(a);
    ok &= same;
    notes.push_back("padding loss diff " + fmt(std::abs(a - b), 2));
  }
  {  // softmax rows
    Transformer<float> m(c, V, V);
    Rng init(4);
    m.initialize(init);
    const Batch batch = collate(pairs);
    double worst = 0;
    for (const auto& layer : m.decoder_self_attention(batch)) {
      const int tk = batch.tgt_len_max;
      for (std::size_t r = 0; r < layer.size() / tk; ++r) {
        double sum = 0;
        for (int j = 0; j < tk; ++j) sum += layer[r * tk + j];
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    }
    ok &= worst <= 1e-6;
    notes.push_back("softmax row err " + fmt(worst, 2));
  }
  return {ok, join(notes, ", ")};
}

// ------------------------------------------------------------ C6

Outcome c6() {
  const fs::path d = fresh_dir("c6_overfit");
  auto p = [&](const std::string& rel) { return quote((d / rel).string()); };
  const auto t0 = std::chrono::steady_clock::now();
  must(d, "synth --spec " + quote(spec_file("regular")) + " --words 100 --seed 6 --out " + p("corpus"));
  const std::string data = p("corpus/qr-xa.words.tsv");
  must(d, "train --train-file " + data + " --dev-file " + data +
              " --layers 3 --d-model 64 --heads 4 --ffn-dim 256 --dropout 0.0 --label-smoothing 0.0"
              " --max-src-len 32 --max-tgt-len 32 --max-steps 2000 --warmup 300 --tokens-per-batch 2048"
              " --lr-factor 1.0 --clip 1.0 --dev-every 100 --checkpoint-every 0 --target-dev-per 0 --seed 6 --out " +
              p("model"));
  must(d, "predict --checkpoint " + p("model/best.ckpt") + " --input " + data + " --out " + p("predictions.tsv"));
  const int rc = cli(d, "eval --gold " + data + " --predictions " + p("predictions.tsv") + " --out " +
                            p("report.jsonl") + " --assert 'per<=0.01'");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto recs = read_report_file((d / "report.jsonl").string());
  const double v = value_of(recs, "words", "per");
  std::ifstream log(d / "model/train_log.jsonl");
  std::int64_t steps = 0;
  for (std::string line; std::getline(log, line);) steps = std::stoll(line.substr(line.find("\"step\":") + 7));
  return {rc == 0 && v <= 0.01 && steps <= 2000 && secs < 600,
          "training-set PER " + fmt(v) + " (<= 0.01) after " + std::to_string(steps) + " steps, " + fmt(secs, 3) +
              " s (< 600)"};
}

// ------------------------------------------------------------ C7

Outcome c7() {
  Task t;
  t.name = "c7_regular";
  t.spec = "regular";
  t.words = 9400;  // about 8000 after the 85/5/10 split
  t.model_args = kModel3x64;
  t.train_args =
      "--max-steps 2500 --warmup 300 --tokens-per-batch 2048 --lr-factor 1.0 --clip 1.0 --dev-every 250 "
      "--checkpoint-every 500 --target-dev-per 0.002";
  const auto t0 = std::chrono::steady_clock::now();
  const auto run = run_task(t);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto train_n = read_corpus_file((run.dir / "split/qr-xa.train.tsv").string()).size();
  const double v = value_of(run.records, "words", "per");
  return {v <= 0.02 && secs < 1800 && train_n >= 7800,
          std::to_string(train_n) + " training words; unseen-lemma test PER " + fmt(v) + " (<= 0.02); " +
              train_note(run) + "; total " + fmt(secs, 4) + " s (< 1800)"};
}

// ------------------------------------------------------------ C8

Outcome c8() {
  Task t;
  t.name = "c8_homograph";
  t.spec = "homograph";
  t.words = 3000;
  t.sentences = 4000;
  t.model_args = kModel3x64;
  t.train_args =
      "--max-steps 5000 --warmup 300 --tokens-per-batch 3072 --lr-factor 1.0 --clip 1.0 --dev-every 500 "
      "--checkpoint-every 1000 --target-dev-per 0.0005";
  const auto run = run_task(t);
  const auto* r = find_record(run.records, "sentences", "homograph_accuracy");
  if (!r || !r->value) return {false, "no homograph accuracy in report"};
  const double skipped = static_cast<double>(r->skipped) / static_cast<double>(r->evaluated + r->skipped);
  std::size_t alt = 0, def = 0;
  for (const auto& e : read_corpus_file((run.dir / "split/qh-xa.test.tsv").string())) {
    for (const auto& a : e.annotations) {
      alt += a.tag == "hom=alt";
      def += a.tag == "hom=def";
    }
  }
  return {*r->value >= 0.95 && skipped <= 0.05,
          "accuracy " + fmt(*r->value) + " (>= 0.95) on " + std::to_string(alt) + " trigger / " + std::to_string(def) +
              " non-trigger cases, skipped " + fmt(skipped, 3) + " (<= 0.05); " + train_note(run)};
}

// ------------------------------------------------------------ C9

Outcome c9() {
  Task t;
  t.name = "c9_liaison";
  t.spec = "liaison";
  t.words = 3000;
  t.sentences = 4000;
  t.model_args = kModel3x64;
  t.train_args =
      "--max-steps 5000 --warmup 300 --tokens-per-batch 3072 --lr-factor 1.0 --clip 1.0 --dev-every 500 "
      "--checkpoint-every 1000 --target-dev-per 0.0005";
  const auto run = run_task(t);
  const double pa = value_of(run.records, "sentences", "plr_per_affected");
  const double wa = value_of(run.records, "sentences", "plr_wer_affected");
  const double whole = value_of(run.records, "sentences", "plr_per_whole");
  return {pa <= 3 * whole && wa <= 0.10,
          "per_affected " + fmt(pa) + " (<= 3 x whole " + fmt(whole) + "), wer_affected " + fmt(wa) + " (<= 0.10); " +
              train_note(run)};
}

// ------------------------------------------------------------ C10

Outcome c10() {
  Task t;
  t.name = "c10_polyphone";
  t.spec = "logographic";
  t.words = 800;  // the spec allows 876 distinct words
  t.sentences = 4000;
  t.synth_args = "--min-words 2 --max-words 5";
  t.model_args = kModel3x64;
  t.train_args =
      "--max-steps 5000 --warmup 300 --tokens-per-batch 3072 --lr-factor 1.0 --clip 1.0 --dev-every 500 "
      "--checkpoint-every 1000 --target-dev-per 0.0005";
  const auto run = run_task(t);
  const auto* r = find_record(run.records, "sentences", "polyphone_accuracy");
  if (!r || !r->value) return {false, "no polyphone accuracy in report"};
  const double all = value_of(run.records, "sentences", "polyphone_char_accuracy");
  return {*r->value >= 0.95, "polyphone accuracy " + fmt(*r->value) + " (>= 0.95) over " +
                                 std::to_string(r->evaluated) + " polyphones; all-character accuracy " + fmt(all) +
                                 "; " + train_note(run)};
}

// ------------------------------------------------------------ C11

Outcome c11() {
  Task t;
  t.name = "c11_diacritic";
  t.spec = "diacritic";
  t.words = 5000;  // plus one undiacritized twin each
  t.model_args = kModel3x64;
  t.train_args =
      "--max-steps 3000 --warmup 300 --tokens-per-batch 2048 --lr-factor 1.0 --clip 1.0 --dev-every 250 "
      "--checkpoint-every 500";
  const auto run = run_task(t);
  const double d = value_of(run.records, "words_diac", "per");
  const double u = value_of(run.records, "words_undiac", "per");
  return {d <= u && d <= 0.01, "PER diacritized " + fmt(d) + " (<= 0.01), undiacritized " + fmt(u) +
                                   (d > 0 ? " (ratio " + fmt(u / d, 3) + ")" : "") + "; " + train_note(run)};
}

// ------------------------------------------------------------ C12

Outcome c12() {
  const fs::path d = fresh_dir("c12_mono_multi");
  auto p = [&](const std::string& rel) { return quote((d / rel).string()); };
  const std::vector<std::string> specs = {"regular", "homograph", "liaison"};
  std::vector<std::string> locales;
  std::string spec_args;
  for (const auto& s : specs) {
    spec_args += " --spec " + quote(spec_file(s));
    locales.push_back(load_langspec(spec_file(s)).locale.str());
  }
  must(d, "synth" + spec_args + " --words 400 --sentences 150 --seed 12 --out " + p("corpus"));
  std::string corpora;
  for (const auto& l : locales) corpora += " --corpus " + p("corpus/" + l + ".words.tsv") + " --corpus " + p("corpus/" + l + ".sentences.tsv");
  must(d, "split" + corpora + " --seed 12 --out " + p("split"));
  std::string train_files, test_gold;
  std::vector<PronunciationEntry> gold;
  for (const auto& l : locales) {
    train_files += " --train-file " + p("split/" + l + ".train.tsv");
    const auto part = read_corpus_file((d / ("split/" + l + ".test.tsv")).string());
    gold.insert(gold.end(), part.begin(), part.end());
  }
  write_corpus_file((d / "test.tsv").string(), gold);
  const std::string shape =
      " --layers 2 --d-model 64 --heads 4 --ffn-dim 256 --max-src-len 96 --max-tgt-len 96 --max-steps 700"
      " --warmup 300 --tokens-per-batch 2048 --clip 1.0 --dev-every 0 --checkpoint-every 0";

  must(d, "train" + train_files + shape + " --out " + p("multi"));
  must(d, "predict --checkpoint " + p("multi/best.ckpt") + " --input " + p("test.tsv") + " --out " + p("multi.pred"));
  must(d, "eval --gold " + p("test.tsv") + " --predictions " + p("multi.pred") + " --out " + p("multi.jsonl"));

  std::string mono_report;
  for (const auto& l : locales) {
    must(d, "train" + train_files + shape + " --locale " + l + " --out " + p("mono_" + l));
    must(d, "predict --checkpoint " + p("mono_" + l + "/best.ckpt") + " --locale " + l + " --input " +
                p("test.tsv") + " --out " + p("mono_" + l + ".pred"));
    must(d, "eval --gold " + p("test.tsv") + " --locale " + l + " --predictions " + p("mono_" + l + ".pred") +
                " --out " + p("mono_" + l + ".jsonl"));
    mono_report += slurp(d / ("mono_" + l + ".jsonl"));
  }
  write_file_atomic((d / "mono.jsonl").string(), mono_report);
  must(d, "compare --a " + p("mono.jsonl") + " --b " + p("multi.jsonl") +
              " --label-a mono --label-b multi --out " + p("table"));
  must(d, "compare --a " + p("multi.jsonl") + " --b " + p("multi.jsonl") + " --out " + p("self"));

  const auto mono = read_report_file((d / "mono.jsonl").string());
  const auto multi = read_report_file((d / "multi.jsonl").string());
  const auto rows = compare_reports(mono, multi);
  std::size_t missing = 0;
  std::set<std::string> row_locales, metrics;
  for (const auto& r : rows) {
    missing += !r.flag.empty() || !r.delta;
    row_locales.insert(r.locale);
    metrics.insert(r.test_set + "/" + r.metric);
  }
  const bool shaped = row_locales.size() == locales.size() && metrics.count("words/per") && metrics.count("words/wer") &&
                      metrics.count("sentences/per") && metrics.count("sentences/ser");
  std::size_t nonzero = 0;
  for (const auto& r : compare_reports(multi, multi)) nonzero += !r.delta || *r.delta != 0.0;
  return {missing == 0 && shaped && nonzero == 0 && !rows.empty(),
          std::to_string(rows.size()) + " rows over " + std::to_string(row_locales.size()) + " locales x " +
              std::to_string(metrics.size()) + " columns, " + std::to_string(missing) + " missing cells; self-compare " +
              std::to_string(nonzero) + " nonzero deltas; table at " + (d / "table.md").string()};
}

// ------------------------------------------------------------ C13

Outcome c13() {
  const fs::path d = fresh_dir("c13_determinism");
  auto p = [&](const std::string& rel) { return quote((d / rel).string()); };
  must(d, "synth --spec " + quote(spec_file("homograph")) + " --spec " + quote(spec_file("diacritic")) +
              " --words 300 --sentences 100 --seed 13 --out " + p("corpus"));
  must(d, "split --corpus " + p("corpus/qh-xa.words.tsv") + " --corpus " + p("corpus/qh-xa.sentences.tsv") +
              " --corpus " + p("corpus/qd-xa.words.tsv") + " --seed 13 --sentence-dev 0.05 --out " + p("split"));
  must(d, "train --train-file " + p("split/qh-xa.train.tsv") + " --train-file " + p("split/qd-xa.train.tsv") +
              " --dev-file " + p("split/qh-xa.dev.tsv") +
              " --layers 2 --d-model 32 --heads 4 --ffn-dim 64 --dropout 0.1 --max-src-len 96 --max-tgt-len 96"
              " --max-steps 80 --warmup 20 --tokens-per-batch 1024 --dev-every 40 --checkpoint-every 40 --out " +
              p("model"));
  must(d, "predict --checkpoint " + p("model/best.ckpt") + " --input " + p("split/qh-xa.test.tsv") +
              " --beam 3 --out " + p("pred.tsv"));
  must(d, "eval --gold " + p("split/qh-xa.test.tsv") + " --predictions " + p("pred.tsv") + " --out " +
              p("report.jsonl"));

  const std::vector<std::string> artifacts = {"corpus/qh-xa.sentences.tsv", "split/qh-xa.test.tsv", "pred.tsv",
                                              "report.jsonl", "model/train_log.jsonl"};
  std::map<std::string, std::string> first;
  for (const auto& a : artifacts) first[a] = slurp(d / a);

  // second run: every step again from its own snapshot
  for (const auto& snap : {"corpus/synth.config.ini", "split/split.config.ini", "model/train.config.ini",
                           "pred.tsv.config.ini", "report.jsonl.config.ini"}) {
    const std::string copy = (d / (std::string(fs::path(snap).filename()) + ".rerun")).string();
    fs::copy_file(d / snap, copy, fs::copy_options::overwrite_existing);
    const std::string sub = fs::path(snap).filename().string().find("synth") == 0   ? "synth"
                            : fs::path(snap).filename().string().find("split") == 0 ? "split"
                            : fs::path(snap).filename().string().find("train") == 0 ? "train"
                            : fs::path(snap).filename().string().find("pred") == 0  ? "predict"
                                                                                   : "eval";
    if (sub == "train") fs::remove_all(d / "model");
    must(d, "--config " + quote(copy) + " " + sub);
  }
  std::vector<std::string> differ;
  for (const auto& a : artifacts)
    if (slurp(d / a) != first[a] || first[a].empty()) differ.push_back(a);
  return {differ.empty(), differ.empty() ? std::to_string(artifacts.size()) +
                                               " artifacts byte-identical across two runs (predictions, report, "
                                               "corpus, split, train log)"
                                         : "differing: " + join(differ, ", ")};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria (repeatable)");
  app.add_option("--work", env.work, "Scratch directory for pipeline runs")->capture_default_str();
  app.add_option("--cli", env.cli, "Path of the unifront executable")->capture_default_str();
  app.add_option("--threads", env.threads)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "metric oracle equivalence", c1},
      {2, "metric definitions", c2},
      {3, "split correctness", c3},
      {4, "codec round trip", c4},
      {5, "model numerics", c5},
      {6, "overfit", c6},
      {7, "synthetic G2P generalization", c7},
      {8, "homograph disambiguation", c8},
      {9, "post-lexical rules", c9},
      {10, "polyphones", c10},
      {11, "diacritization", c11},
      {12, "mono vs multi harness", c12},
      {13, "determinism", c13},
  };
  fs::create_directories(env.work);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "C" << c.id << " " << c.title << ": " << o.detail << " ("
              << fmt(secs, 4) << " s)" << std::endl;
  }
  return failed ? 1 : 0;
}
