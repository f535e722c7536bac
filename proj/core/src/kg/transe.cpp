#include <cmath>
#include <numeric>

#include "kite/common/error.hpp"
#include "kite/kg/kg.hpp"

namespace kite::kg {
namespace {

void normalize_row(std::span<float> row, bool only_if_longer) {
  double n2 = 0;
  for (float v : row) n2 += static_cast<double>(v) * v;
  const double n = std::sqrt(n2);
  if (n == 0.0 || (only_if_longer && n <= 1.0)) return;
  for (auto& v : row) v = static_cast<float>(v / n);
}

// d score / d (h + r - t) for one coordinate.
double score_grad(double diff, double norm, int p) {
  if (p == 1) return diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
  return norm > 0 ? diff / norm : 0.0;
}

}  // namespace

void validate(const TransEConfig& c) {
  if (!(c.margin > 0)) throw ConfigError("transe margin must be positive");
  if (c.dim == 0) throw ConfigError("transe dim must be positive");
  if (c.batch_size == 0) throw ConfigError("transe batch_size must be positive");
  if (!(c.learning_rate > 0)) throw ConfigError("transe learning_rate must be positive");
  if (c.negatives == 0) throw ConfigError("transe negatives must be positive");
  if (c.norm != 1 && c.norm != 2) throw ConfigError("transe norm must be 1 or 2");
}

double transe_score(std::span<const float> h, std::span<const float> r, std::span<const float> t, int p) {
  if (h.size() != r.size() || h.size() != t.size()) {
    throw ShapeError("transe_score: dimensions " + std::to_string(h.size()) + ", " + std::to_string(r.size()) +
                     ", " + std::to_string(t.size()) + " differ");
  }
  if (p != 1 && p != 2) throw ShapeError("transe_score: norm order must be 1 or 2");
  double acc = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = static_cast<double>(h[i]) + r[i] - t[i];
    acc += p == 1 ? std::abs(d) : d * d;
  }
  return p == 1 ? acc : std::sqrt(acc);
}

EmbeddingTable init_embeddings(const EntityIndex& index, std::size_t dim, std::mt19937_64& rng) {
  EmbeddingTable t;
  t.dim = dim;
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> u(-bound, bound);
  t.relations.resize(index.relation_count() * dim);
  for (auto& v : t.relations) v = static_cast<float>(u(rng));
  for (std::size_t i = 0; i < index.relation_count(); ++i) normalize_row(t.relation(i), false);
  t.entities.resize(index.entity_count() * dim);
  for (auto& v : t.entities) v = static_cast<float>(u(rng));
  for (std::size_t i = 0; i < index.entity_count(); ++i) normalize_row(t.entity(i), false);
  return t;
}

double transe_train_step(std::span<const std::array<std::int32_t, 3>> batch, EmbeddingTable& table,
                         const TransEConfig& config, std::size_t entity_count, std::mt19937_64& rng) {
  const std::size_t d = table.dim;
  std::vector<double> g_ent(table.entities.size(), 0.0), g_rel(table.relations.size(), 0.0);
  std::vector<bool> touched(entity_count, false);
  std::uniform_int_distribution<std::size_t> pick(0, entity_count > 1 ? entity_count - 2 : 0);
  std::bernoulli_distribution head_side(0.5);
  std::vector<double> dpos(d), dneg(d);
  double total = 0;

  auto diff = [&](std::int32_t h, std::int32_t r, std::int32_t t, std::vector<double>& out) {
    const auto hv = table.entity(static_cast<std::size_t>(h));
    const auto rv = table.relation(static_cast<std::size_t>(r));
    const auto tv = table.entity(static_cast<std::size_t>(t));
    double acc = 0;
    for (std::size_t i = 0; i < d; ++i) {
      out[i] = static_cast<double>(hv[i]) + rv[i] - tv[i];
      acc += config.norm == 1 ? std::abs(out[i]) : out[i] * out[i];
    }
    return config.norm == 1 ? acc : std::sqrt(acc);
  };
  auto accumulate = [&](std::int32_t h, std::int32_t r, std::int32_t t, const std::vector<double>& dv, double norm,
                        double sign) {
    for (std::size_t i = 0; i < d; ++i) {
      const double g = sign * score_grad(dv[i], norm, config.norm);
      g_ent[static_cast<std::size_t>(h) * d + i] += g;
      g_rel[static_cast<std::size_t>(r) * d + i] += g;
      g_ent[static_cast<std::size_t>(t) * d + i] -= g;
    }
    touched[static_cast<std::size_t>(h)] = touched[static_cast<std::size_t>(t)] = true;
  };

  for (const auto& [h, r, t] : batch) {
    const double spos = diff(h, r, t, dpos);
    for (std::size_t k = 0; k < config.negatives; ++k) {
      std::int32_t nh = h, nt = t;
      const bool corrupt_head = head_side(rng);
      if (entity_count > 1) {
        const std::int32_t original = corrupt_head ? h : t;
        auto e = static_cast<std::int32_t>(pick(rng));
        if (e >= original) ++e;  // uniform over entities other than the original
        (corrupt_head ? nh : nt) = e;
      }
      const double sneg = diff(nh, r, nt, dneg);
      const double loss = config.margin + spos - sneg;
      if (loss <= 0) continue;
      total += loss;
      accumulate(h, r, t, dpos, spos, 1.0);
      accumulate(nh, r, nt, dneg, sneg, -1.0);
    }
  }
  const double lr = config.learning_rate;
  for (std::size_t i = 0; i < g_ent.size(); ++i) table.entities[i] -= static_cast<float>(lr * g_ent[i]);
  for (std::size_t i = 0; i < g_rel.size(); ++i) table.relations[i] -= static_cast<float>(lr * g_rel[i]);
  for (std::size_t e = 0; e < entity_count; ++e)
    if (touched[e]) normalize_row(table.entity(e), true);
  return total;
}

TransEResult train_transe(const KnowledgeGraph& graph, const TransEConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  TransEResult res;
  res.table = init_embeddings(graph.index, config.dim, rng);
  std::vector<std::size_t> order(graph.encoded.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::array<std::int32_t, 3>> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(graph.encoded[order[i]]);
      }
      epoch_loss += transe_train_step(batch, res.table, config, graph.index.entity_count(), rng);
    }
    res.epoch_losses.push_back(epoch_loss);
  }
  return res;
}

}  // namespace kite::kg
