#include "kite/model/config.hpp"

#include <sstream>

#include "kite/common/config.hpp"
#include "kite/common/error.hpp"
#include "kite/common/text.hpp"

namespace kite::model {
namespace {

template <class F>
void each_size_field(ModelConfig& c, F&& f) {
  f("vocab_size", c.vocab_size);
  f("d_model", c.d_model);
  f("n_layers", c.n_layers);
  f("n_heads", c.n_heads);
  f("d_ff", c.d_ff);
  f("max_len", c.max_len);
  f("n_segments", c.n_segments);
  f("kg_dim", c.kg_dim);
  f("kg_heads", c.kg_heads);
  f("conv_blocks", c.conv_blocks);
  f("conv_kernel", c.conv_kernel);
  f("pool_stride", c.pool_stride);
  f("mlp1_hidden", c.mlp1_hidden);
  f("mlp1_out", c.mlp1_out);
  f("mlp2_hidden", c.mlp2_hidden);
  f("n_classes", c.n_classes);
}

}  // namespace

bool ModelConfig::set(std::string_view key, std::string_view value) {
  if (key == "dropout") {
    dropout = config_real(key, value);
    return true;
  }
  bool found = false;
  each_size_field(*this, [&](std::string_view name, std::size_t& field) {
    if (name == key) {
      field = config_size(key, value);
      found = true;
    }
  });
  return found;
}

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("model: " + msg);
  };
  need(vocab_size > 4, "vocab_size must exceed the 4 reserved tokens");
  need(d_model > 0 && n_heads > 0 && d_model % n_heads == 0, "d_model must be a positive multiple of n_heads");
  need(d_ff > 0 && max_len > 1 && n_segments >= 2, "d_ff, max_len and n_segments must be usable");
  need(kg_dim > 0 && kg_dim % 2 == 0, "kg_dim must be even (two entity vectors)");
  need(kg_heads > 0 && (kg_dim / 2) % kg_heads == 0, "kg_dim / 2 must be a multiple of kg_heads");
  need(conv_kernel % 2 == 1, "conv_kernel must be odd");
  need(pool_stride >= 1, "pool_stride must be positive");
  need(mlp1_hidden > 0 && mlp1_out > 0 && mlp2_hidden > 0, "mlp widths must be positive");
  need(n_classes >= 2, "n_classes must be at least 2");
  need(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
}

std::vector<std::size_t> ModelConfig::conv_lengths() const {
  std::vector<std::size_t> out{max_len};
  for (std::size_t b = 0; b < conv_blocks; ++b) {
    const std::size_t len = out.back();
    const std::size_t span = len > 2 ? len - 2 : 0;
    out.push_back((span + pool_stride - 1) / pool_stride + 1);
  }
  return out;
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  auto copy = *this;
  each_size_field(copy, [&](std::string_view name, std::size_t& field) { os << name << " = " << field << '\n'; });
  os << "dropout = " << format_real(dropout) << '\n';
  return os.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig c;
  for (const auto& e : parse_config_text(text)) {
    if (!c.set(e.key, e.value)) throw ConfigError("unknown model key '" + e.key + "' (line " + std::to_string(e.line) + ")");
  }
  c.validate();
  return c;
}

std::uint64_t ModelConfig::fingerprint() const { return fnv1a64(to_text()); }

}  // namespace kite::model
