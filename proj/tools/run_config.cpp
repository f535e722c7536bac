#include "run_config.hpp"

#include <sstream>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"

namespace kite::cli {
namespace {

std::string prefixed(std::string_view section, const std::string& text) {
  std::string out;
  for (auto line : split(text, '\n')) {
    if (line.empty()) continue;
    out.append(section).append(".").append(line).append("\n");
  }
  return out;
}

bool set_kg(RunConfig& c, std::string_view key, std::string_view value) {
  auto& k = c.kg;
  if (key == "margin") k.margin = config_real(key, value);
  else if (key == "dim") k.dim = config_size(key, value);
  else if (key == "epochs") k.epochs = config_size(key, value);
  else if (key == "batch_size") k.batch_size = config_size(key, value);
  else if (key == "learning_rate") k.learning_rate = config_real(key, value);
  else if (key == "negatives") k.negatives = config_size(key, value);
  else if (key == "norm") k.norm = static_cast<int>(config_size(key, value));
  else if (key == "seed") k.seed = config_u64(key, value);
  else if (key == "entity_template") c.entity_template = std::string(value);
  else return false;
  return true;
}

bool set_synth(datasets::SyntheticConfig& s, std::string_view key, std::string_view value) {
  if (key == "drugs") s.drugs = config_size(key, value);
  else if (key == "events") s.events = config_size(key, value);
  else if (key == "classes") s.classes = config_size(key, value);
  else if (key == "min_atoms") s.min_atoms = config_size(key, value);
  else if (key == "max_atoms") s.max_atoms = config_size(key, value);
  else if (key == "seed") s.seed = config_u64(key, value);
  else return false;
  return true;
}

bool set_misc(RunConfig& c, std::string_view section, std::string_view key, std::string_view value) {
  if (section == "vocab" && key == "min_count") c.vocab_min_count = config_size(key, value);
  else if (section == "split" && key == "test_fraction") c.split_test_fraction = config_real(key, value);
  else if (section == "split" && key == "folds") c.split_folds = config_size(key, value);
  else if (section == "sts" && key == "min_class_count") c.sts_min_class_count = config_size(key, value);
  else if (section == "sts" && key == "keep") c.sts_keep = config_real(key, value);
  else if (section == "sts" && key == "stop_fraction") c.sts_stop_fraction = config_real(key, value);
  else if (section == "seqlen" && key == "bin_width") c.seqlen_bin_width = config_size(key, value);
  else if (section == "eval" && key == "batch") c.eval_batch = config_size(key, value);
  else return false;
  return true;
}

}  // namespace

void RunConfig::set(const ConfigEntry& entry) {
  const std::string where = entry.line ? " (line " + std::to_string(entry.line) + ")" : " (--set)";
  const auto dot = entry.key.find('.');
  if (dot == std::string::npos) throw ConfigError("config key '" + entry.key + "' has no section" + where);
  const std::string_view section = std::string_view(entry.key).substr(0, dot);
  const std::string_view key = std::string_view(entry.key).substr(dot + 1);
  bool known = false;
  try {
    if (section == "model") known = model.set(key, entry.value);
    else if (section == "pretrain") known = pretrain.set(key, entry.value);
    else if (section == "train") known = train.set(key, entry.value);
    else if (section == "kg") known = set_kg(*this, key, entry.value);
    else if (section == "synth") known = set_synth(synth, key, entry.value);
    else known = set_misc(*this, section, key, entry.value);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what() + where);
  }
  if (!known) throw ConfigError("unknown config key '" + entry.key + "'" + where);
  given.insert(entry.key);
}

void RunConfig::apply_master_seed(std::uint64_t master) {
  seed = master;
  if (!was_given("pretrain.seed")) pretrain.seed = master;
  if (!was_given("train.seed")) train.seed = master;
  if (!was_given("kg.seed")) kg.seed = master;
  if (!was_given("synth.seed")) synth.seed = master;
}

void RunConfig::validate() const {
  pretrain.validate();
  train.validate();
  kg::validate(kg);
  if (entity_template.find("{id}") == std::string::npos) {
    throw ConfigError("kg.entity_template must contain {id}");
  }
  if (!(split_test_fraction >= 0.0 && split_test_fraction < 1.0)) {
    throw ConfigError("split.test_fraction must lie in [0, 1)");
  }
  if (split_folds == 0) throw ConfigError("split.folds must be positive");
  if (!(sts_keep > 0.0 && sts_keep < 1.0)) throw ConfigError("sts.keep must lie in (0, 1)");
  if (!(sts_stop_fraction > 0.0 && sts_stop_fraction < 1.0)) throw ConfigError("sts.stop_fraction must lie in (0, 1)");
  if (seqlen_bin_width == 0) throw ConfigError("seqlen.bin_width must be positive");
  if (eval_batch == 0) throw ConfigError("eval.batch must be positive");
  if (vocab_min_count == 0) throw ConfigError("vocab.min_count must be positive");
  if (synth.drugs < 2 || synth.classes < 2 || synth.min_atoms == 0 || synth.min_atoms > synth.max_atoms) {
    throw ConfigError("synth: need at least 2 drugs, 2 classes and 0 < min_atoms <= max_atoms");
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "seed = " << seed << '\n';
  os << prefixed("model", model.to_text());
  os << prefixed("pretrain", pretrain.to_text());
  os << prefixed("train", train.to_text());
  os << "kg.margin = " << format_real(kg.margin) << "\nkg.dim = " << kg.dim << "\nkg.epochs = " << kg.epochs
     << "\nkg.batch_size = " << kg.batch_size << "\nkg.learning_rate = " << format_real(kg.learning_rate)
     << "\nkg.negatives = " << kg.negatives << "\nkg.norm = " << kg.norm << "\nkg.seed = " << kg.seed
     << "\nkg.entity_template = " << entity_template << '\n';
  os << "vocab.min_count = " << vocab_min_count << '\n';
  os << "split.test_fraction = " << format_real(split_test_fraction) << "\nsplit.folds = " << split_folds << '\n';
  os << "sts.min_class_count = " << sts_min_class_count << "\nsts.keep = " << format_real(sts_keep)
     << "\nsts.stop_fraction = " << format_real(sts_stop_fraction) << '\n';
  os << "seqlen.bin_width = " << seqlen_bin_width << '\n';
  os << "eval.batch = " << eval_batch << '\n';
  os << "synth.drugs = " << synth.drugs << "\nsynth.events = " << synth.events << "\nsynth.classes = " << synth.classes
     << "\nsynth.min_atoms = " << synth.min_atoms << "\nsynth.max_atoms = " << synth.max_atoms
     << "\nsynth.seed = " << synth.seed << '\n';
  return os.str();
}

std::uint64_t RunConfig::fingerprint() const { return fnv1a64(to_text()); }

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                          std::uint64_t master_seed) {
  RunConfig c;
  if (file) {
    std::string text;
    try {
      text = read_file(*file);
    } catch (const DataError&) {
      throw ConfigError("cannot read config file " + file->string());
    }
    for (const auto& e : parse_config_text(text)) c.set(e);
  }
  for (const auto& o : overrides) c.set(parse_override(o));
  c.apply_master_seed(master_seed);
  c.validate();
  return c;
}

ErrorClass classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return {2, "config"};
  if (dynamic_cast<const NumericError*>(&e)) return {4, "numeric"};
  if (dynamic_cast<const DataError*>(&e)) return {3, "data"};
  if (dynamic_cast<const ParseError*>(&e)) return {3, "parse"};
  if (dynamic_cast<const CheckpointError*>(&e)) return {3, "checkpoint"};
  if (dynamic_cast<const IndexError*>(&e)) return {3, "index"};
  if (dynamic_cast<const ShapeError*>(&e)) return {3, "shape"};
  return {1, "internal"};
}

}  // namespace kite::cli
