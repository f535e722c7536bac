#include "kite/tensor/checkpoint_io.hpp"

#include <algorithm>
#include <cstring>

#include "kite/common/binary_io.hpp"
#include "kite/common/text.hpp"

namespace kite::ad {
namespace {

constexpr char kMagic[8] = {'K', 'I', 'T', 'E', 'C', 'K', 'P', 'T'};

void put_payload(ByteWriter& w, const std::vector<double>& values, std::uint8_t scalar_bytes) {
  for (double v : values) {
    if (scalar_bytes == 4) {
      w.put<float>(static_cast<float>(v));
    } else {
      w.put<double>(v);
    }
  }
}

std::vector<double> get_payload(ByteReader& r, std::uint64_t n, std::uint8_t scalar_bytes) {
  if (n > r.remaining() / scalar_bytes) throw CheckpointError("truncated tensor payload");
  std::vector<double> out(n);
  for (auto& v : out) v = scalar_bytes == 4 ? static_cast<double>(r.get<float>()) : r.get<double>();
  return out;
}

}  // namespace

std::string encode_checkpoint(const CheckpointRecord& record) {
  if (record.scalar_bytes != 4 && record.scalar_bytes != 8) {
    throw CheckpointError("scalar width must be 4 or 8 bytes");
  }
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint8_t>(record.scalar_bytes);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(record.metadata.size()));
  for (const auto& [k, v] : record.metadata) {
    w.put_string(k);
    w.put_string(v);
  }
  w.put_string(record.rng_state);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(record.tensors.size()));
  for (const auto& t : record.tensors) {
    if (numel(t.shape) != t.values.size()) throw CheckpointError("tensor '" + t.name + "' shape/value mismatch");
    w.put_string(t.name);
    w.put<std::uint8_t>(t.is_buffer ? 1 : 0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.put<std::uint64_t>(d);
    put_payload(w, t.values, record.scalar_bytes);
  }
  w.put<std::uint8_t>(record.optimizer ? 1 : 0);
  if (record.optimizer) {
    const auto& o = *record.optimizer;
    w.put<std::uint64_t>(o.step);
    w.put<double>(o.config.learning_rate);
    w.put<double>(o.config.weight_decay);
    w.put<double>(o.config.beta1);
    w.put<double>(o.config.beta2);
    w.put<double>(o.config.epsilon);
    w.put<std::uint8_t>(o.config.decoupled_weight_decay ? 1 : 0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(o.moments.size()));
    for (const auto& [name, mv] : o.moments) {
      w.put_string(name);
      w.put<std::uint64_t>(mv.first.size());
      put_payload(w, mv.first, record.scalar_bytes);
      put_payload(w, mv.second, record.scalar_bytes);
    }
  }
  const auto checksum = fnv1a64(w.bytes());
  w.put<std::uint64_t>(checksum);
  return w.take();
}

CheckpointRecord decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) + 8) throw CheckpointError("file too short to be a checkpoint");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw CheckpointError("bad checkpoint magic");
  const auto body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof(stored));

  ByteReader r(body);
  r.get_bytes(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  if (stored != fnv1a64(body)) throw CheckpointError("checkpoint checksum mismatch (corrupt or truncated file)");

  CheckpointRecord rec;
  rec.scalar_bytes = r.get<std::uint8_t>();
  if (rec.scalar_bytes != 4 && rec.scalar_bytes != 8) throw CheckpointError("bad scalar width");
  const auto n_meta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.get_string();
    rec.metadata[k] = r.get_string();
  }
  rec.rng_state = r.get_string();
  const auto n_tensors = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    TensorRecord t;
    t.name = r.get_string();
    t.is_buffer = r.get<std::uint8_t>() != 0;
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw CheckpointError("implausible tensor rank in '" + t.name + "'");
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(r.get<std::uint64_t>());
    t.values = get_payload(r, numel(t.shape), rec.scalar_bytes);
    rec.tensors.push_back(std::move(t));
  }
  if (r.get<std::uint8_t>() != 0) {
    OptimizerRecord o;
    o.step = r.get<std::uint64_t>();
    o.config.learning_rate = r.get<double>();
    o.config.weight_decay = r.get<double>();
    o.config.beta1 = r.get<double>();
    o.config.beta2 = r.get<double>();
    o.config.epsilon = r.get<double>();
    o.config.decoupled_weight_decay = r.get<std::uint8_t>() != 0;
    const auto n_mom = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_mom; ++i) {
      auto name = r.get_string();
      const auto n = r.get<std::uint64_t>();
      auto first = get_payload(r, n, rec.scalar_bytes);
      auto second = get_payload(r, n, rec.scalar_bytes);
      o.moments[name] = {std::move(first), std::move(second)};
    }
    rec.optimizer = std::move(o);
  }
  if (r.remaining() != 0) throw CheckpointError("trailing bytes after checkpoint body");
  return rec;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointRecord& record) {
  write_file_atomic(path, encode_checkpoint(record));
}

CheckpointRecord read_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const DataError& e) {
    throw CheckpointError(e.what());
  }
  return decode_checkpoint(bytes);
}

template <class Real>
CheckpointRecord capture(const ParameterSet<Real>& params, const AdamState<Real>* optimizer) {
  CheckpointRecord rec;
  rec.scalar_bytes = sizeof(Real);
  auto add = [&](const Parameter<Real>& p, bool buffer) {
    TensorRecord t;
    t.name = p.name;
    t.is_buffer = buffer;
    t.shape = p.tensor.shape();
    t.values.assign(p.tensor.values().begin(), p.tensor.values().end());
    rec.tensors.push_back(std::move(t));
  };
  for (const auto& p : params.params()) add(p, false);
  for (const auto& b : params.buffers()) add(b, true);
  if (optimizer) {
    OptimizerRecord o;
    o.config = optimizer->config;
    o.step = optimizer->step;
    for (const auto& [name, m] : optimizer->moments) {
      o.moments[name] = {std::vector<double>(m.first.begin(), m.first.end()),
                         std::vector<double>(m.second.begin(), m.second.end())};
    }
    rec.optimizer = std::move(o);
  }
  return rec;
}

template <class Real>
void restore(const CheckpointRecord& record, ParameterSet<Real>& params, bool allow_extra) {
  std::map<std::string, const TensorRecord*> by_name;
  for (const auto& t : record.tensors) by_name[t.name] = &t;
  std::vector<std::pair<Tensor<Real>, const TensorRecord*>> plan;
  auto stage = [&](const Parameter<Real>& p) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw CheckpointError("checkpoint lacks tensor '" + p.name + "'");
    if (it->second->shape != p.tensor.shape()) {
      throw CheckpointError("tensor '" + p.name + "' has shape " + to_string(it->second->shape) +
                            " in checkpoint but " + to_string(p.tensor.shape()) + " in model");
    }
    plan.emplace_back(p.tensor, it->second);
    by_name.erase(it);
  };
  for (const auto& p : params.params()) stage(p);
  for (const auto& b : params.buffers()) stage(b);
  if (!allow_extra && !by_name.empty()) {
    throw CheckpointError("checkpoint has tensor '" + by_name.begin()->first + "' unknown to the model");
  }
  for (auto& [tensor, rec] : plan) {
    auto dst = tensor.mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Real>(rec->values[i]);
  }
}

template <class Real>
AdamState<Real> restore_optimizer(const OptimizerRecord& record) {
  AdamState<Real> s;
  s.config = record.config;
  s.step = record.step;
  for (const auto& [name, mv] : record.moments) {
    auto& m = s.moments[name];
    m.first.assign(mv.first.begin(), mv.first.end());
    m.second.assign(mv.second.begin(), mv.second.end());
  }
  return s;
}

template CheckpointRecord capture(const ParameterSet<float>&, const AdamState<float>*);
template CheckpointRecord capture(const ParameterSet<double>&, const AdamState<double>*);
template void restore(const CheckpointRecord&, ParameterSet<float>&, bool);
template void restore(const CheckpointRecord&, ParameterSet<double>&, bool);
template AdamState<float> restore_optimizer(const OptimizerRecord&);
template AdamState<double> restore_optimizer(const OptimizerRecord&);

}  // namespace kite::ad
