#include <algorithm>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/kg/kg.hpp"

namespace kite::kg {

EntityIndex::EntityIndex(std::vector<std::string> entities, std::vector<std::string> relations)
    : entities_(std::move(entities)), relations_(std::move(relations)) {
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    if (!entity_ids_.emplace(entities_[i], static_cast<std::int32_t>(i)).second) {
      throw DataError("duplicate entity '" + entities_[i] + "'");
    }
  }
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    if (!relation_ids_.emplace(relations_[i], static_cast<std::int32_t>(i)).second) {
      throw DataError("duplicate relation '" + relations_[i] + "'");
    }
  }
}

std::optional<std::int32_t> EntityIndex::entity(std::string_view name) const {
  auto it = entity_ids_.find(std::string(name));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::int32_t> EntityIndex::relation(std::string_view name) const {
  auto it = relation_ids_.find(std::string(name));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

KnowledgeGraph parse_triples(std::string_view text) {
  std::vector<Triple> triples;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3) {
      throw DataError("expected head<TAB>relation<TAB>tail, got " + std::to_string(f.size()) + " fields", line_no);
    }
    for (auto& x : f) {
      x = trim(x);
      if (x.empty()) throw DataError("empty triple field", line_no);
    }
    triples.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2])});
  }
  if (triples.empty()) throw DataError("no triples in input");
  KnowledgeGraph g;
  std::sort(triples.begin(), triples.end());
  const auto before = triples.size();
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
  g.duplicates_dropped = before - triples.size();

  std::vector<std::string> ents, rels;
  for (const auto& t : triples) {
    ents.push_back(t.head);
    ents.push_back(t.tail);
    rels.push_back(t.relation);
  }
  for (auto* v : {&ents, &rels}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  g.index = EntityIndex(std::move(ents), std::move(rels));
  for (const auto& t : triples) {
    g.encoded.push_back({*g.index.entity(t.head), *g.index.relation(t.relation), *g.index.entity(t.tail)});
  }
  g.triples = std::move(triples);
  return g;
}

KnowledgeGraph load_triples(const std::filesystem::path& path) { return parse_triples(read_file(path)); }

}  // namespace kite::kg
