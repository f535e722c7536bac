#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kite::kg {

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  auto operator<=>(const Triple&) const = default;
};

// Dense indices assigned in sorted string order.
class EntityIndex {
 public:
  EntityIndex() = default;
  EntityIndex(std::vector<std::string> entities, std::vector<std::string> relations);

  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  const std::vector<std::string>& entities() const { return entities_; }
  const std::vector<std::string>& relations() const { return relations_; }
  std::optional<std::int32_t> entity(std::string_view name) const;
  std::optional<std::int32_t> relation(std::string_view name) const;

 private:
  std::vector<std::string> entities_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, std::int32_t> entity_ids_;
  std::unordered_map<std::string, std::int32_t> relation_ids_;
};

struct KnowledgeGraph {
  std::vector<Triple> triples;  // sorted, unique
  EntityIndex index;
  std::vector<std::array<std::int32_t, 3>> encoded;  // (head, relation, tail) ids per triple
  std::size_t duplicates_dropped = 0;
};

// `head<TAB>relation<TAB>tail` lines. Throws DataError with the line number on
// a malformed line and on an empty input.
KnowledgeGraph parse_triples(std::string_view text);
KnowledgeGraph load_triples(const std::filesystem::path& path);

struct TransEConfig {
  double margin = 1.0;
  std::size_t dim = 400;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  std::size_t negatives = 1;
  int norm = 1;  // 1 or 2
  std::uint64_t seed = 0;
};

void validate(const TransEConfig& config);

struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<float> entities;   // entity_count x dim
  std::vector<float> relations;  // relation_count x dim

  std::span<float> entity(std::size_t i) { return {entities.data() + i * dim, dim}; }
  std::span<const float> entity(std::size_t i) const { return {entities.data() + i * dim, dim}; }
  std::span<float> relation(std::size_t i) { return {relations.data() + i * dim, dim}; }
  std::span<const float> relation(std::size_t i) const { return {relations.data() + i * dim, dim}; }
};

// ||h + r - t||_p. Throws ShapeError on a dimension mismatch or p outside {1, 2}.
double transe_score(std::span<const float> h, std::span<const float> r, std::span<const float> t, int p);

// Uniform(-6/sqrt(d), 6/sqrt(d)) rows; relations then entities scaled to unit L2 norm.
EmbeddingTable init_embeddings(const EntityIndex& index, std::size_t dim, std::mt19937_64& rng);

// One SGD step of the margin ranking loss over `batch` (encoded triples).
// Each positive is paired with `negatives` corruptions that replace the head
// or the tail (50/50) by a different uniformly drawn entity. Touched entity
// rows are projected back into the unit ball. Returns the summed loss.
double transe_train_step(std::span<const std::array<std::int32_t, 3>> batch, EmbeddingTable& table,
                         const TransEConfig& config, std::size_t entity_count, std::mt19937_64& rng);

struct TransEResult {
  EmbeddingTable table;
  std::vector<double> epoch_losses;
};

TransEResult train_transe(const KnowledgeGraph& graph, const TransEConfig& config);

// Entity vectors as consumed by the classifier: names plus a dense matrix.
struct EntityEmbeddings {
  std::size_t dim = 0;
  std::vector<std::string> names;
  std::vector<float> values;  // names.size() x dim
  std::unordered_map<std::string, std::size_t> lookup;

  static EntityEmbeddings from_table(const EntityIndex& index, const EmbeddingTable& table);
  std::optional<std::span<const float>> find(std::string_view name) const;
};

// Binary table: u64 entity count, u64 dim, then count*dim float32 little
// endian. Sidecar `<path>.index` lists entity names, one per line, in row
// order.
void export_embeddings(const std::filesystem::path& path, const EntityEmbeddings& emb);
EntityEmbeddings import_embeddings(const std::filesystem::path& path);

// Maps a dataset drug id to a KG entity name; "{id}" in the template is
// replaced by the drug id.
std::string entity_name(std::string_view id_template, std::string_view drug_id);

struct PairEmbedding {
  std::vector<float> values;  // 2 * dim
  bool found_a = false;
  bool found_b = false;
};

// [e(a) | e(b)]; a drug absent from the table contributes a zero half.
PairEmbedding pair_embedding(std::string_view drug_a, std::string_view drug_b, const EntityEmbeddings& emb,
                             std::string_view id_template = "Compound::{id}");

}  // namespace kite::kg
