#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kite/tensor/adam.hpp"
#include "kite/tensor/parameter.hpp"

// Versioned binary checkpoint container. Byte layout: docs/checkpoint_format.md.
namespace kite::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  bool is_buffer = false;
  Shape shape;
  std::vector<double> values;  // widened; narrowing back to float is exact
};

struct OptimizerRecord {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;
};

struct CheckpointRecord {
  std::uint8_t scalar_bytes = 4;  // 4 = float32 payloads, 8 = float64
  std::map<std::string, std::string> metadata;
  std::string rng_state;
  std::vector<TensorRecord> tensors;
  std::optional<OptimizerRecord> optimizer;
};

std::string encode_checkpoint(const CheckpointRecord& record);
// Validates magic, version, bounds and trailing checksum; throws
// CheckpointError without returning partial state.
CheckpointRecord decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const CheckpointRecord& record);
CheckpointRecord read_checkpoint(const std::filesystem::path& path);

template <class Real>
CheckpointRecord capture(const ParameterSet<Real>& params, const AdamState<Real>* optimizer);

// Copies every parameter and buffer of `params` from `record`, checking
// shapes first so a mismatch leaves `params` untouched. Names in `record`
// that `params` lacks are ignored only when `allow_extra` is set.
template <class Real>
void restore(const CheckpointRecord& record, ParameterSet<Real>& params, bool allow_extra = false);

template <class Real>
AdamState<Real> restore_optimizer(const OptimizerRecord& record);

}  // namespace kite::ad
