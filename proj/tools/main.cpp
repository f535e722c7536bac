#include <exception>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_config.hpp"

namespace {

using kite::cli::Invocation;

void common_flags(CLI::App* sub, Invocation& inv) {
  sub->add_option("--seed", inv.seed, "Master seed for every random stream");
  sub->add_option("--config", inv.config, "key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--set", inv.overrides, "Override one config key, section.key=value (repeatable)");
  sub->add_option("--out-dir", inv.out_dir, "Output directory");
  sub->add_option("--threads", inv.threads, "Worker threads (recorded; computation is single-threaded)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kite: drug-drug interaction event prediction"};
  app.require_subcommand(1);
  Invocation inv;
  std::map<CLI::App*, std::function<void(const Invocation&)>> handlers;

  auto add = [&](const char* name, const char* help, void (*fn)(const Invocation&)) {
    auto* sub = app.add_subcommand(name, help);
    common_flags(sub, inv);
    handlers[sub] = fn;
    return sub;
  };
  auto data_flags = [&](CLI::App* sub) {
    sub->add_option("--data-dir", inv.data_dir, "Directory with drugs.tsv, events.tsv, labels.txt")->required();
    sub->add_option("--split", inv.split, "split.json from the split command")->required();
    sub->add_option("--vocab", inv.vocab, "vocab.txt from the vocab command")->required();
    sub->add_option("--kg", inv.kg, "Entity embeddings from kg-train");
  };

  add("synth", "Write a synthetic dataset, KG and corpus", kite::cli::cmd_synth);

  auto* vocab = add("vocab", "Build the token vocabulary from a SMILES corpus", kite::cli::cmd_vocab);
  vocab->add_option("--corpus", inv.corpus, "One SMILES per line")->required();

  auto* kg = add("kg-train", "Train TransE entity embeddings", kite::cli::cmd_kg_train);
  kg->add_option("--triples", inv.triples, "head<TAB>relation<TAB>tail file")->required();

  auto* pre = add("pretrain", "Masked-token pretraining of the encoder", kite::cli::cmd_pretrain);
  pre->add_option("--corpus", inv.corpus, "One SMILES per line")->required();
  pre->add_option("--vocab", inv.vocab, "vocab.txt from the vocab command")->required();

  auto* split = add("split", "Cross-validation folds and inductive U1/U2 splits", kite::cli::cmd_split);
  split->add_option("--data-dir", inv.data_dir, "Directory with drugs.tsv, events.tsv, labels.txt")->required();

  auto* train = add("train", "Fine-tune the classifier", kite::cli::cmd_train);
  data_flags(train);
  train->add_option("--pretrained", inv.pretrained, "Checkpoint from pretrain");
  train->add_option("--holdout", inv.holdout, "Model selection set: none, fold<k>, u1, u2");

  auto* eval = add("eval", "Metrics, ROC and PR curves on one subset", kite::cli::cmd_eval);
  data_flags(eval);
  eval->add_option("--checkpoint", inv.checkpoint, "Checkpoint from train")->required();
  eval->add_option("--subset", inv.subset, "train, fold<k>, u1, u2 or all");

  auto* sts = add("sts", "Shrinking training set analysis", kite::cli::cmd_sts);
  data_flags(sts);
  sts->add_option("--pretrained", inv.pretrained, "Checkpoint from pretrain");

  auto* seqlen = add("seqlen", "Accuracy by token-length bin", kite::cli::cmd_seqlen);
  data_flags(seqlen);
  seqlen->add_option("--checkpoint", inv.checkpoint, "Checkpoint from train")->required();
  seqlen->add_option("--subset", inv.subset, "train, fold<k>, u1, u2 or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "kite: error[config]: " << e.what() << "\n";
    return 2;
  }

  for (auto& [sub, fn] : handlers) {
    if (!sub->parsed()) continue;
    inv.command = sub->get_name();
    try {
      fn(inv);
      return 0;
    } catch (const std::exception& e) {
      const auto c = kite::cli::classify(e);
      std::cerr << "kite: error[" << c.kind << "]: " << e.what() << "\n";
      return c.code;
    }
  }
  return 1;
}
