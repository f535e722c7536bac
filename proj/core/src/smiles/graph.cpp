#include "kite/smiles/graph.hpp"

#include <numeric>
#include <stdexcept>

namespace kite::smiles {

std::size_t MolecularGraph::add_atom(Atom atom) {
  atoms_.push_back(std::move(atom));
  adjacency_.emplace_back();
  return atoms_.size() - 1;
}

std::size_t MolecularGraph::add_bond(std::size_t a, std::size_t b, BondOrder order, BondStereo stereo) {
  if (a >= atoms_.size() || b >= atoms_.size()) throw std::invalid_argument("bond endpoint out of range");
  if (a == b) throw std::invalid_argument("bond from an atom to itself");
  if (has_bond(a, b)) throw std::invalid_argument("duplicate bond");
  bonds_.push_back({a, b, order, stereo});
  const auto idx = bonds_.size() - 1;
  adjacency_[a].push_back({b, idx});
  adjacency_[b].push_back({a, idx});
  return idx;
}

bool MolecularGraph::has_bond(std::size_t a, std::size_t b) const {
  for (const auto& n : adjacency_[a])
    if (n.atom == b) return true;
  return false;
}

std::vector<std::vector<std::size_t>> MolecularGraph::components() const {
  std::vector<std::size_t> parent(atoms_.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& b : bonds_) {
    auto ra = find(b.a), rb = find(b.b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> slot(atoms_.size(), SIZE_MAX);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const auto r = find(i);
    if (slot[r] == SIZE_MAX) {
      slot[r] = out.size();
      out.emplace_back();
    }
    out[slot[r]].push_back(i);
  }
  return out;
}

}  // namespace kite::smiles
