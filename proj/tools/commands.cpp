#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/datasets/dataset.hpp"
#include "kite/datasets/splits.hpp"
#include "kite/datasets/synthetic.hpp"
#include "kite/kg/kg.hpp"
#include "kite/metrics/metrics.hpp"
#include "kite/smiles/tokenizer.hpp"
#include "kite/smiles/vocab.hpp"
#include "kite/training/training.hpp"
#include "manifest.hpp"
#include "run_config.hpp"

namespace kite::cli {
namespace {

namespace fs = std::filesystem;

struct Run {
  RunConfig config;
  RunManifest manifest;
  fs::path out;
};

Run start(const Invocation& inv) {
  if (inv.threads == 0) throw ConfigError("--threads must be at least 1");
  auto config = load_run_config(inv.config, inv.overrides, inv.seed);
  Run run{std::move(config), RunManifest(inv.command, inv.seed, inv.threads), inv.out_dir};
  if (inv.config) run.manifest.add_input("config", *inv.config);
  fs::create_directories(run.out);
  return run;
}

// The effective config is fixed once inputs have filled in derived model
// fields, so config.txt and the fingerprint are written at the end.
void finish(Run& run) {
  emit(run.manifest, run.out, "config.txt", run.config.to_text());
  run.manifest.set_fingerprint(run.config.fingerprint());
  run.manifest.write(run.out);
}

void require(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string(flag) + " is required for this command");
}

std::vector<std::string> corpus_lines(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> out;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    out.emplace_back(line);
  }
  if (out.empty()) throw DataError("corpus " + path.string() + " is empty");
  return out;
}

std::vector<std::vector<std::string>> tokenize_corpus(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(smiles::tokenize(lines[i]));
    } catch (const ParseError& e) {
      throw DataError(std::string("corpus: ") + e.what(), i + 1);
    }
  }
  return out;
}

datasets::Dataset load_data(Run& run, const fs::path& dir) {
  const auto drugs = dir / "drugs.tsv", events = dir / "events.tsv", labels = dir / "labels.txt";
  run.manifest.add_input("drugs", drugs);
  run.manifest.add_input("events", events);
  run.manifest.add_input("labels", labels);
  return datasets::load_dataset(drugs, events, labels);
}

datasets::SplitBundle load_split(Run& run, const fs::path& path, const datasets::Dataset& data) {
  run.manifest.add_input("split", path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("split " + path.string() + ": " + e.what());
  }
  return datasets::split_from_json(j, data);
}

smiles::Vocabulary load_vocab(Run& run, const fs::path& path) {
  run.manifest.add_input("vocab", path);
  return smiles::Vocabulary::load(path);
}

std::optional<kg::EntityEmbeddings> load_kg(Run& run, const fs::path& path) {
  if (path.empty()) return std::nullopt;
  run.manifest.add_input("kg", path);
  run.manifest.add_input("kg_index", fs::path(path.string() + ".index"));
  return kg::import_embeddings(path);
}

// Fills a derived model field from the inputs, or checks an explicit value.
void derive(RunConfig& c, std::string_view key, std::size_t& field, std::size_t value) {
  if (c.was_given("model." + std::string(key))) {
    if (field != value) {
      throw ConfigError("model." + std::string(key) + " = " + std::to_string(field) + " but the inputs imply " +
                        std::to_string(value));
    }
    return;
  }
  field = value;
}

std::vector<std::size_t> subset_events(const datasets::SplitBundle& split, const datasets::Dataset& data,
                                       const std::string& name) {
  if (name == "train") return split.train;
  if (name == "u1") return split.u1;
  if (name == "u2") return split.u2;
  if (name == "all") {
    std::vector<std::size_t> all(data.events.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  if (name.rfind("fold", 0) == 0 && name.size() > 4) {
    const std::size_t k = config_size("fold", std::string_view(name).substr(4));
    if (k >= split.folds.size()) {
      throw ConfigError("subset " + name + " does not exist; the split has " + std::to_string(split.folds.size()) +
                        " folds");
    }
    return split.folds[k];
  }
  throw ConfigError("unknown subset '" + name + "' (train, fold<k>, u1, u2, all)");
}

std::vector<training::PairExample> examples(const datasets::Dataset& data, const std::vector<std::size_t>& events,
                                            const std::optional<kg::EntityEmbeddings>& emb,
                                            const std::string& entity_template) {
  std::vector<training::PairExample> out;
  out.reserve(events.size());
  std::size_t missing = 0;
  for (auto i : events) {
    const auto& e = data.events[i];
    training::PairExample x{data.drug(e.drug_a).smiles, data.drug(e.drug_b).smiles, e.label, {}};
    if (emb) {
      auto pair = kg::pair_embedding(e.drug_a, e.drug_b, *emb, entity_template);
      missing += !pair.found_a + !pair.found_b;
      x.kg = std::move(pair.values);
    }
    out.push_back(std::move(x));
  }
  if (missing > 0) {
    std::cerr << "kite: note: " << missing << " drug slots have no KG vector and use zeros\n";
  }
  return out;
}

void check_vocab(const model::ModelConfig& config, const smiles::Vocabulary& vocab) {
  if (config.vocab_size != vocab.size()) {
    throw DataError("vocabulary has " + std::to_string(vocab.size()) + " tokens but the model expects " +
                    std::to_string(config.vocab_size));
  }
}

void check_kg(const model::ModelConfig& config, const std::optional<kg::EntityEmbeddings>& emb) {
  if (emb && 2 * emb->dim != config.kg_dim) {
    throw DataError("KG vectors of dim " + std::to_string(emb->dim) + " do not fit model kg_dim " +
                    std::to_string(config.kg_dim));
  }
}

// Model config completed from vocab, labels and KG inputs.
void complete_model(RunConfig& c, const smiles::Vocabulary& vocab, std::size_t classes,
                    const std::optional<kg::EntityEmbeddings>& emb) {
  derive(c, "vocab_size", c.model.vocab_size, vocab.size());
  derive(c, "n_classes", c.model.n_classes, classes);
  if (emb) derive(c, "kg_dim", c.model.kg_dim, 2 * emb->dim);
  c.model.validate();
}

void load_pretrained(Run& run, const fs::path& path, model::KiteModel<float>& model) {
  run.manifest.add_input("pretrained", path);
  auto loaded = training::load_checkpoint(path);
  if (loaded.kind != "mlm") throw CheckpointError(path.string() + " is a '" + loaded.kind + "' checkpoint, not mlm");
  const auto& a = loaded.config;
  const auto& b = model.config();
  if (a.vocab_size != b.vocab_size || a.d_model != b.d_model || a.n_layers != b.n_layers ||
      a.n_heads != b.n_heads || a.d_ff != b.d_ff || a.max_len != b.max_len || a.n_segments != b.n_segments) {
    throw ConfigError("pretrained encoder in " + path.string() + " does not match the model config");
  }
  model::MlmModel<float> mlm(a, 0);
  ad::restore(loaded.record, mlm.parameters());
  model::transfer_encoder(mlm, model);
}

struct Classifier {
  training::LoadedCheckpoint loaded;
  std::unique_ptr<model::KiteModel<float>> model;
};

Classifier load_classifier(Run& run, const fs::path& path) {
  run.manifest.add_input("checkpoint", path);
  Classifier c{training::load_checkpoint(path), nullptr};
  if (c.loaded.kind != "classifier") {
    throw CheckpointError(path.string() + " is a '" + c.loaded.kind + "' checkpoint, not classifier");
  }
  c.model = std::make_unique<model::KiteModel<float>>(c.loaded.config, 0);
  ad::restore(c.loaded.record, c.model->parameters());
  return c;
}

std::string entity_template_of(const Classifier& c, const RunConfig& config) {
  auto it = c.loaded.record.metadata.find("entity_template");
  return it == c.loaded.record.metadata.end() ? config.entity_template : it->second;
}

std::string csv_real(double v) { return std::isnan(v) ? "nan" : format_real(v); }

double accuracy_on(model::KiteModel<float>& model, const std::vector<training::PairExample>& xs,
                   const smiles::Vocabulary& vocab, std::size_t batch) {
  if (xs.empty()) return std::nan("");
  return training::predict(model, xs, vocab, batch).accuracy;
}

}  // namespace

void cmd_synth(const Invocation& inv) {
  auto run = start(inv);
  auto data = datasets::make_synthetic(run.config.synth);
  datasets::write_synthetic(data, run.out);
  for (const char* name : {"drugs.tsv", "events.tsv", "labels.txt", "kg.tsv", "corpus.txt"}) {
    run.manifest.add_output(run.out / name);
  }
  std::cout << "synth: " << data.drugs.size() << " drugs, " << data.events.size() << " events, "
            << data.labels.size() << " classes, " << data.triples.size() << " triples\n";
  finish(run);
}

void cmd_vocab(const Invocation& inv) {
  require(inv.corpus, "--corpus");
  auto run = start(inv);
  run.manifest.add_input("corpus", inv.corpus);
  const auto tokenized = tokenize_corpus(corpus_lines(inv.corpus));
  std::vector<std::string> tokens;
  for (const auto& t : tokenized) tokens.insert(tokens.end(), t.begin(), t.end());
  const auto vocab = smiles::build_vocab(tokens, run.config.vocab_min_count);
  emit(run.manifest, run.out, "vocab.txt", vocab.serialize());
  std::cout << "vocab: " << vocab.size() << " tokens from " << tokenized.size() << " strings\n";
  finish(run);
}

void cmd_kg_train(const Invocation& inv) {
  require(inv.triples, "--triples");
  auto run = start(inv);
  run.manifest.add_input("triples", inv.triples);
  const auto graph = kg::load_triples(inv.triples);
  const auto result = kg::train_transe(graph, run.config.kg);
  const auto emb = kg::EntityEmbeddings::from_table(graph.index, result.table);
  kg::export_embeddings(run.out / "entities.bin", emb);
  run.manifest.add_output(run.out / "entities.bin");
  run.manifest.add_output(run.out / "entities.bin.index");
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    csv += std::to_string(e + 1) + "," + format_real(result.epoch_losses[e]) + "\n";
  }
  emit(run.manifest, run.out, "kg_loss.csv", csv);
  std::cout << "kg-train: " << graph.index.entity_count() << " entities, " << graph.index.relation_count()
            << " relations, final loss " << (result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back()) << "\n";
  finish(run);
}

void cmd_pretrain(const Invocation& inv) {
  require(inv.corpus, "--corpus");
  require(inv.vocab, "--vocab");
  auto run = start(inv);
  run.manifest.add_input("corpus", inv.corpus);
  const auto vocab = load_vocab(run, inv.vocab);
  const auto corpus = tokenize_corpus(corpus_lines(inv.corpus));
  derive(run.config, "vocab_size", run.config.model.vocab_size, vocab.size());
  run.config.model.validate();
  model::MlmModel<float> mlm(run.config.model, run.config.seed);
  auto result = training::mlm_pretrain(mlm, corpus, vocab, run.config.pretrain, [](std::size_t epoch, double loss) {
    std::cout << "pretrain epoch " << epoch + 1 << " loss " << loss << "\n";
  });
  std::string csv = "epoch,loss\n0," + format_real(result.initial_loss) + "\n";
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    csv += std::to_string(e + 1) + "," + format_real(result.epoch_losses[e]) + "\n";
  }
  emit(run.manifest, run.out, "pretrain_loss.csv", csv);
  training::save_model(run.out / "pretrained.ckpt", mlm.parameters(), run.config.model, "mlm", &result.optimizer,
                       {{"epochs", std::to_string(run.config.pretrain.epochs)}});
  run.manifest.add_output(run.out / "pretrained.ckpt");
  finish(run);
}

void cmd_split(const Invocation& inv) {
  require(inv.data_dir, "--data-dir");
  auto run = start(inv);
  const auto data = load_data(run, inv.data_dir);
  std::mt19937_64 rng(run.config.seed);
  const auto split = datasets::make_inductive_splits(data, run.config.split_test_fraction, rng, run.config.split_folds);
  emit(run.manifest, run.out, "split.json", split_to_json(split).dump() + "\n");
  nlohmann::ordered_json summary;
  summary["raw_drug_rows"] = data.raw_drug_rows;
  summary["raw_event_rows"] = data.raw_event_rows;
  summary["duplicate_events"] = data.duplicate_events;
  summary["drugs"] = data.drugs.size();
  summary["drugs_in_events"] = data.drugs_in_events();
  summary["events"] = data.events.size();
  summary["classes"] = data.class_count();
  summary["test_drugs"] = split.test_drugs.size();
  summary["train"] = split.train.size();
  summary["u1"] = split.u1.size();
  summary["u2"] = split.u2.size();
  auto& folds = summary["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : split.folds) folds.push_back(f.size());
  emit(run.manifest, run.out, "split_summary.json", summary.dump(2) + "\n");
  std::cout << "split: train " << split.train.size() << ", u1 " << split.u1.size() << ", u2 " << split.u2.size()
            << ", " << split.test_drugs.size() << " test drugs\n";
  finish(run);
}

void cmd_train(const Invocation& inv) {
  require(inv.data_dir, "--data-dir");
  require(inv.split, "--split");
  require(inv.vocab, "--vocab");
  auto run = start(inv);
  const auto data = load_data(run, inv.data_dir);
  const auto split = load_split(run, inv.split, data);
  const auto vocab = load_vocab(run, inv.vocab);
  const auto emb = load_kg(run, inv.kg);
  complete_model(run.config, vocab, data.class_count(), emb);

  std::vector<std::size_t> train_events = split.train, eval_events;
  if (inv.holdout == "u1" || inv.holdout == "u2") {
    eval_events = subset_events(split, data, inv.holdout);
  } else if (inv.holdout != "none") {
    if (inv.holdout.rfind("fold", 0) != 0) throw ConfigError("unknown holdout '" + inv.holdout + "'");
    eval_events = subset_events(split, data, inv.holdout);
    const std::set<std::size_t> held(eval_events.begin(), eval_events.end());
    std::erase_if(train_events, [&](std::size_t i) { return held.count(i) != 0; });
  }
  const auto train_x = examples(data, train_events, emb, run.config.entity_template);
  const auto eval_x = examples(data, eval_events, emb, run.config.entity_template);

  model::KiteModel<float> model(run.config.model, run.config.seed);
  if (!inv.pretrained.empty()) load_pretrained(run, inv.pretrained, model);
  auto result = training::finetune(model, train_x, eval_x, vocab, run.config.train, [](const training::EpochRecord& r) {
    std::cout << "train epoch " << r.epoch << " loss " << r.train_loss << " acc " << r.train_accuracy;
    if (!std::isnan(r.eval_accuracy)) std::cout << " eval " << r.eval_accuracy;
    std::cout << "\n";
  });
  ad::restore(result.best, model.parameters());
  emit(run.manifest, run.out, "history.csv", training::history_csv(result.history));
  training::save_model(run.out / "model.ckpt", model.parameters(), run.config.model, "classifier", nullptr,
                       {{"best_epoch", std::to_string(result.best_epoch)},
                        {"best_accuracy", format_real(result.best_accuracy)},
                        {"holdout", inv.holdout},
                        {"entity_template", run.config.entity_template},
                        {"pretrained", inv.pretrained.empty() ? "none" : inv.pretrained.string()}});
  run.manifest.add_output(run.out / "model.ckpt");
  std::cout << "train: best epoch " << result.best_epoch << " accuracy " << result.best_accuracy << "\n";
  finish(run);
}

void cmd_eval(const Invocation& inv) {
  require(inv.checkpoint, "--checkpoint");
  require(inv.data_dir, "--data-dir");
  require(inv.split, "--split");
  require(inv.vocab, "--vocab");
  auto run = start(inv);
  auto clf = load_classifier(run, inv.checkpoint);
  run.config.model = clf.loaded.config;
  const auto data = load_data(run, inv.data_dir);
  const auto split = load_split(run, inv.split, data);
  const auto vocab = load_vocab(run, inv.vocab);
  const auto emb = load_kg(run, inv.kg);
  check_vocab(clf.loaded.config, vocab);
  check_kg(clf.loaded.config, emb);
  if (data.class_count() != clf.loaded.config.n_classes) {
    throw DataError("labels file has " + std::to_string(data.class_count()) + " classes, the model " +
                    std::to_string(clf.loaded.config.n_classes));
  }
  const auto events = subset_events(split, data, inv.subset);
  if (events.empty()) throw DataError("subset '" + inv.subset + "' is empty");
  const auto xs = examples(data, events, emb, entity_template_of(clf, run.config));
  const auto preds = training::predict(*clf.model, xs, vocab, run.config.eval_batch);

  std::vector<double> scores;
  for (const auto& row : preds.probabilities) scores.insert(scores.end(), row.begin(), row.end());
  metrics::CurveSet curves;
  const auto report = metrics::evaluate(scores, preds.truth, data.class_count(), &curves);
  nlohmann::ordered_json j;
  j["subset"] = inv.subset;
  j["classes"] = data.class_count();
  j["metrics"] = metrics::to_json(report);
  emit(run.manifest, run.out, "metrics.json", j.dump(2) + "\n");
  emit(run.manifest, run.out, "roc.csv", metrics::roc_csv(curves));
  emit(run.manifest, run.out, "pr.csv", metrics::pr_csv(curves));
  std::cout << "eval " << inv.subset << ": " << report.samples << " samples, accuracy " << report.accuracy
            << ", f1_macro " << report.f1_macro << ", auc " << report.auc << "\n";
  finish(run);
}

void cmd_sts(const Invocation& inv) {
  require(inv.data_dir, "--data-dir");
  require(inv.split, "--split");
  require(inv.vocab, "--vocab");
  auto run = start(inv);
  const auto data = load_data(run, inv.data_dir);
  const auto split = load_split(run, inv.split, data);
  const auto vocab = load_vocab(run, inv.vocab);
  const auto emb = load_kg(run, inv.kg);
  complete_model(run.config, vocab, data.class_count(), emb);

  // Fold 0 is the fixed validation set; the other folds form the pool.
  std::vector<std::size_t> pool = split.train, val;
  if (split.folds.size() > 1) {
    val = split.folds[0];
    const std::set<std::size_t> held(val.begin(), val.end());
    std::erase_if(pool, [&](std::size_t i) { return held.count(i) != 0; });
  }
  std::mt19937_64 rng(run.config.seed);
  const auto series = datasets::sts_series(data, pool, run.config.sts_min_class_count, rng, run.config.sts_keep,
                                           run.config.sts_stop_fraction);
  const auto& tmpl = run.config.entity_template;
  const auto val_x = examples(data, val, emb, tmpl);
  const auto u1_x = examples(data, split.u1, emb, tmpl);
  const auto u2_x = examples(data, split.u2, emb, tmpl);

  std::string csv = "step,train_size,train_fraction,accuracy_val,accuracy_u1,accuracy_u2\n";
  const double initial = static_cast<double>(series.steps.front().size());
  for (std::size_t s = 0; s < series.steps.size(); ++s) {
    const auto& step = series.steps[s];
    const auto train_x = examples(data, step, emb, tmpl);
    model::KiteModel<float> model(run.config.model, run.config.seed);
    if (!inv.pretrained.empty()) load_pretrained(run, inv.pretrained, model);
    auto result = training::finetune(model, train_x, val_x, vocab, run.config.train);
    ad::restore(result.best, model.parameters());
    const double a_val = accuracy_on(model, val_x, vocab, run.config.eval_batch);
    const double a_u1 = accuracy_on(model, u1_x, vocab, run.config.eval_batch);
    const double a_u2 = accuracy_on(model, u2_x, vocab, run.config.eval_batch);
    csv += std::to_string(s) + "," + std::to_string(step.size()) + "," +
           format_real(static_cast<double>(step.size()) / initial) + "," + csv_real(a_val) + "," + csv_real(a_u1) +
           "," + csv_real(a_u2) + "\n";
    std::cout << "sts step " << s << " size " << step.size() << " val " << a_val << " u1 " << a_u1 << " u2 " << a_u2
              << "\n";
  }
  emit(run.manifest, run.out, "sts.csv", csv);
  nlohmann::ordered_json summary;
  summary["dropped_classes"] = series.dropped_classes;
  auto& sizes = summary["step_sizes"] = nlohmann::ordered_json::array();
  for (const auto& st : series.steps) sizes.push_back(st.size());
  summary["validation"] = val.size();
  summary["u1"] = split.u1.size();
  summary["u2"] = split.u2.size();
  emit(run.manifest, run.out, "sts_summary.json", summary.dump(2) + "\n");
  finish(run);
}

void cmd_seqlen(const Invocation& inv) {
  require(inv.checkpoint, "--checkpoint");
  require(inv.data_dir, "--data-dir");
  require(inv.split, "--split");
  require(inv.vocab, "--vocab");
  auto run = start(inv);
  auto clf = load_classifier(run, inv.checkpoint);
  run.config.model = clf.loaded.config;
  const auto data = load_data(run, inv.data_dir);
  const auto split = load_split(run, inv.split, data);
  const auto vocab = load_vocab(run, inv.vocab);
  const auto emb = load_kg(run, inv.kg);
  check_vocab(clf.loaded.config, vocab);
  check_kg(clf.loaded.config, emb);
  const auto events = subset_events(split, data, inv.subset);
  if (events.empty()) throw DataError("subset '" + inv.subset + "' is empty");
  const auto bins = datasets::seqlen_bins(data, events, vocab, run.config.seqlen_bin_width,
                                          clf.loaded.config.max_len);
  const auto tmpl = entity_template_of(clf, run.config);
  std::string csv = "bin_start,bin_end,mean_accuracy,count\n";
  for (const auto& [start_len, members] : bins.bins) {
    const auto xs = examples(data, members, emb, tmpl);
    const auto preds = training::predict(*clf.model, xs, vocab, run.config.eval_batch);
    csv += std::to_string(start_len) + "," + std::to_string(start_len + bins.width) + "," +
           format_real(preds.accuracy) + "," + std::to_string(members.size()) + "\n";
  }
  emit(run.manifest, run.out, "seqlen.csv", csv);
  std::cout << "seqlen: " << bins.bins.size() << " bins over " << events.size() << " events\n";
  finish(run);
}

}  // namespace kite::cli
