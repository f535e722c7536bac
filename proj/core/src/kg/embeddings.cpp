#include <cstring>

#include "kite/common/binary_io.hpp"
#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/kg/kg.hpp"

namespace kite::kg {

EntityEmbeddings EntityEmbeddings::from_table(const EntityIndex& index, const EmbeddingTable& table) {
  EntityEmbeddings e;
  e.dim = table.dim;
  e.names = index.entities();
  e.values = table.entities;
  for (std::size_t i = 0; i < e.names.size(); ++i) e.lookup.emplace(e.names[i], i);
  return e;
}

std::optional<std::span<const float>> EntityEmbeddings::find(std::string_view name) const {
  auto it = lookup.find(std::string(name));
  if (it == lookup.end()) return std::nullopt;
  return std::span<const float>(values.data() + it->second * dim, dim);
}

void export_embeddings(const std::filesystem::path& path, const EntityEmbeddings& emb) {
  ByteWriter w;
  w.put<std::uint64_t>(emb.names.size());
  w.put<std::uint64_t>(emb.dim);
  for (float v : emb.values) w.put<float>(v);
  write_file_atomic(path, w.bytes());
  std::string index;
  for (const auto& n : emb.names) index += n + "\n";
  write_file_atomic(path.string() + ".index", index);
}

EntityEmbeddings import_embeddings(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes);
  EntityEmbeddings e;
  std::uint64_t count = 0, dim = 0;
  try {
    count = r.get<std::uint64_t>();
    dim = r.get<std::uint64_t>();
    if (dim == 0 || count * dim * sizeof(float) != r.remaining()) {
      throw DataError("embedding table " + path.string() + " has inconsistent size");
    }
    e.dim = dim;
    e.values.resize(count * dim);
    for (auto& v : e.values) v = r.get<float>();
  } catch (const CheckpointError&) {
    throw DataError("embedding table " + path.string() + " is truncated");
  }
  const auto index_text = read_file(path.string() + ".index");
  std::size_t line_no = 0;
  for (auto line : split(index_text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    if (!e.lookup.emplace(std::string(line), e.names.size()).second) {
      throw DataError("duplicate entity in embedding index", line_no);
    }
    e.names.emplace_back(line);
  }
  if (e.names.size() != count) {
    throw DataError("embedding index lists " + std::to_string(e.names.size()) + " names for " +
                    std::to_string(count) + " rows");
  }
  return e;
}

std::string entity_name(std::string_view id_template, std::string_view drug_id) {
  std::string out(id_template);
  const auto pos = out.find("{id}");
  if (pos == std::string::npos) return out + std::string(drug_id);
  out.replace(pos, 4, drug_id);
  return out;
}

PairEmbedding pair_embedding(std::string_view drug_a, std::string_view drug_b, const EntityEmbeddings& emb,
                             std::string_view id_template) {
  PairEmbedding p;
  p.values.assign(2 * emb.dim, 0.0f);
  if (auto a = emb.find(entity_name(id_template, drug_a))) {
    std::memcpy(p.values.data(), a->data(), emb.dim * sizeof(float));
    p.found_a = true;
  }
  if (auto b = emb.find(entity_name(id_template, drug_b))) {
    std::memcpy(p.values.data() + emb.dim, b->data(), emb.dim * sizeof(float));
    p.found_b = true;
  }
  return p;
}

}  // namespace kite::kg
