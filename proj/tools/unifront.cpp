// unifront: synth / split / train / predict / eval / compare.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "unifront/cli/commands.hpp"
#include "unifront/core/corpus.hpp"
#include "unifront/error.hpp"
#include "unifront/model/kernels.hpp"

namespace fs = std::filesystem;
using namespace unifront;

namespace {

// Snapshot of every option (defaults included) in the same INI layout that
// --config reads, so `unifront --config <snapshot> <cmd>` reruns the command.
void write_snapshot(const CLI::App& app, const CLI::App& cmd, const std::string& path) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::string text = "threads=" + app.get_option("--threads")->as<std::string>() + "\n";
  text += "[" + cmd.get_name() + "]\n" + cmd.config_to_str(true, false);
  write_file_atomic(path, text);
}

// Empty list options come back from a snapshot as a single "" entry.
void drop_empty(std::vector<std::string>& v) {
  v.erase(std::remove(v.begin(), v.end(), std::string()), v.end());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual grapheme-to-phoneme toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config; [synth], [split], ... sections hold subcommand options");
  int threads = 1;
  app.add_option("--threads", threads, "OpenMP threads for training and decoding")->capture_default_str();

  // synth
  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate oracle corpora from language spec files");
  synth->add_option("--spec", so.specs, "Language spec file (repeatable)")->required();
  synth->add_option("--words", so.words, "Word entries per spec")->capture_default_str();
  synth->add_option("--sentences", so.sentences, "Sentences per spec")->capture_default_str();
  synth->add_option("--seed", so.seed)->capture_default_str();
  synth->add_option("--min-words", so.sentence.min_words)->capture_default_str();
  synth->add_option("--max-words", so.sentence.max_words)->capture_default_str();
  synth->add_option("--homograph-incidence", so.sentence.homograph_incidence)->capture_default_str();
  synth->add_option("--liaison-incidence", so.sentence.liaison_incidence)->capture_default_str();
  synth->add_option("--polyphone-incidence", so.sentence.polyphone_incidence)->capture_default_str();
  synth->add_option("--vocabulary", so.sentence.vocabulary, "Distinct words sentences draw from")
      ->capture_default_str();
  synth->add_option("--twins", so.sentence.diacritic_twins, "Emit undiacritized sentence twins")
      ->capture_default_str();
  synth->add_option("--out", so.out_dir, "Output directory")->required();

  // split
  SplitOptions sp;
  auto* split = app.add_subcommand("split", "Lemma-disjoint train/dev/test split per locale");
  split->add_option("--corpus", sp.corpora, "Corpus file (repeatable)")->required();
  split->add_option("--freq", sp.freq_file, "Word frequency file (word TAB count)");
  split->add_option("--train", sp.ratios.train)->capture_default_str();
  split->add_option("--dev", sp.ratios.dev)->capture_default_str();
  split->add_option("--test", sp.ratios.test)->capture_default_str();
  split->add_option("--percentile", sp.percentile, "Frequency cap percentile for drawn test words")
      ->capture_default_str();
  split->add_option("--sentence-test", sp.sentence_test, "Sentence test fraction")->capture_default_str();
  split->add_option("--sentence-dev", sp.sentence_dev, "Sentence dev fraction")->capture_default_str();
  split->add_option("--seed", sp.seed)->capture_default_str();
  split->add_option("--out", sp.out_dir, "Output directory")->required();

  // train
  TrainOptionsCli to;
  auto* train = app.add_subcommand("train", "Train a (multilingual) transformer");
  auto& m = to.model;
  auto& t = to.train;
  train->add_option("--train-file", to.train_files, "Training corpus (repeatable)")->required();
  train->add_option("--dev-file", to.dev_files, "Dev corpus (repeatable)");
  train->add_option("--locale", to.locale, "Keep only this locale (monolingual run)");
  train->add_option("--resume", to.resume, "Checkpoint to resume from");
  train->add_option("--out", to.out_dir, "Output directory")->required();
  train->add_option("--layers", m.layers)->capture_default_str();
  train->add_option("--d-model", m.d_model)->capture_default_str();
  train->add_option("--heads", m.heads)->capture_default_str();
  train->add_option("--ffn-dim", m.ffn_dim)->capture_default_str();
  train->add_option("--dropout", m.dropout)->capture_default_str();
  train->add_option("--max-src-len", m.max_src_len)->capture_default_str();
  train->add_option("--max-tgt-len", m.max_tgt_len)->capture_default_str();
  train->add_option("--label-smoothing", m.label_smoothing)->capture_default_str();
  train->add_option("--seed", m.seed)->capture_default_str();
  train->add_option("--max-steps", t.max_steps)->capture_default_str();
  train->add_option("--warmup", t.warmup_steps)->capture_default_str();
  train->add_option("--tokens-per-batch", t.tokens_per_batch)->capture_default_str();
  train->add_option("--checkpoint-every", t.checkpoint_every)->capture_default_str();
  train->add_option("--dev-every", t.dev_eval_every)->capture_default_str();
  train->add_option("--beta1", t.adam_beta1)->capture_default_str();
  train->add_option("--beta2", t.adam_beta2)->capture_default_str();
  train->add_option("--adam-eps", t.adam_eps)->capture_default_str();
  train->add_option("--lr-factor", t.lr_factor, "Multiplier on the noam schedule")->capture_default_str();
  train->add_option("--clip", t.max_grad_norm, "Gradient norm clip (0 = off)")->capture_default_str();
  train->add_option("--target-dev-per", t.target_dev_per, "Stop once dev PER reaches this (<0 = off)")
      ->capture_default_str();
  train->add_option("--dev-beam", t.dev_beam)->capture_default_str();

  // predict
  PredictOptions po;
  auto* predict = app.add_subcommand("predict", "Decode pronunciations for `locale TAB text` lines");
  predict->add_option("--checkpoint", po.checkpoint)->required();
  predict->add_option("--input", po.input)->required();
  predict->add_option("--out", po.output)->required();
  predict->add_option("--beam", po.beam)->capture_default_str();
  predict->add_option("--max-len", po.max_len, "0 = model max target length")->capture_default_str();
  predict->add_option("--locale", po.locale);

  // eval
  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Score predictions against a gold corpus");
  eval->add_option("--gold", eo.gold)->required();
  eval->add_option("--predictions", eo.predictions)->required();
  eval->add_option("--out", eo.output, "Report file (JSON lines)")->required();
  eval->add_option("--assert", eo.asserts, "Threshold such as per<=0.02 or wer@words<0.1 (repeatable)");
  eval->add_option("--locale", eo.locale);

  // compare
  CompareOptions co;
  auto* compare = app.add_subcommand("compare", "Side-by-side table of two reports");
  compare->add_option("--a", co.report_a)->required();
  compare->add_option("--b", co.report_b)->required();
  compare->add_option("--label-a", co.label_a)->capture_default_str();
  compare->add_option("--label-b", co.label_b)->capture_default_str();
  compare->add_option("--out", co.out_prefix, "Writes <out>.tsv and <out>.md")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads < 1) throw UsageError("--threads must be >= 1");
    for (auto* v : {&so.specs, &sp.corpora, &to.train_files, &to.dev_files, &eo.asserts}) drop_empty(*v);
    kernels::set_num_threads(threads);
    auto& log = std::cerr;
    if (synth->parsed()) {
      write_snapshot(app, *synth, (fs::path(so.out_dir) / "synth.config.ini").string());
      return cmd_synth(so, log);
    }
    if (split->parsed()) {
      write_snapshot(app, *split, (fs::path(sp.out_dir) / "split.config.ini").string());
      return cmd_split(sp, log);
    }
    if (train->parsed()) {
      write_snapshot(app, *train, (fs::path(to.out_dir) / "train.config.ini").string());
      return cmd_train(to, log);
    }
    if (predict->parsed()) {
      write_snapshot(app, *predict, po.output + ".config.ini");
      return cmd_predict(po, log);
    }
    if (eval->parsed()) {
      write_snapshot(app, *eval, eo.output + ".config.ini");
      return cmd_eval(eo, log);
    }
    if (compare->parsed()) {
      write_snapshot(app, *compare, co.out_prefix + ".config.ini");
      return cmd_compare(co, log);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SynthError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ModelError& e) {
    // config validation lands here too
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailures;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailures;
  }
  return kExitUsage;
}
