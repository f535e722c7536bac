#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kite::model {

// Architecture hyperparameters. Text form is `key = value` lines with the
// keys below; parsing is strict.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 256;
  std::size_t n_layers = 6;
  std::size_t n_heads = 8;
  std::size_t d_ff = 256;
  std::size_t max_len = 500;
  std::size_t n_segments = 2;
  std::size_t kg_dim = 800;  // two entity vectors side by side
  std::size_t kg_heads = 4;
  std::size_t conv_blocks = 8;
  std::size_t conv_kernel = 3;
  std::size_t pool_stride = 2;
  std::size_t mlp1_hidden = 256;
  std::size_t mlp1_out = 256;
  std::size_t mlp2_hidden = 512;
  std::size_t n_classes = 65;
  double dropout = 0.1;

  // Sets one field by key; false when the key is unknown.
  bool set(std::string_view key, std::string_view value);
  // ConfigError on inconsistent values.
  void validate() const;

  std::size_t d_head() const { return d_model / n_heads; }
  // Sequence length after every conv block, starting with max_len.
  std::vector<std::size_t> conv_lengths() const;
  std::size_t conv_features() const { return conv_lengths().back() * d_model; }
  std::size_t fused_width() const { return mlp1_out + kg_dim; }

  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);
  std::uint64_t fingerprint() const;

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace kite::model
