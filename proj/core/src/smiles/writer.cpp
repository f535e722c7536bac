#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "kite/smiles/smiles.hpp"

namespace kite::smiles {
namespace {

std::string atom_text(const Atom& a) {
  std::string sym = a.element;
  if (a.aromatic) {
    for (auto& ch : sym) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (!a.bracket) return sym;
  std::string s = "[";
  if (a.isotope > 0) s += std::to_string(a.isotope);
  s += sym;
  s += a.chirality;
  if (a.hydrogens == 1) s += "H";
  if (a.hydrogens > 1) s += "H" + std::to_string(a.hydrogens);
  if (a.charge != 0) {
    s += a.charge > 0 ? '+' : '-';
    const int mag = std::abs(a.charge);
    if (mag > 1) s += std::to_string(mag);
  }
  if (a.atom_class > 0) s += ":" + std::to_string(a.atom_class);
  return s + "]";
}

// `keep_stereo` is false for ring-closure bonds: their '/' '\' marks are
// dropped rather than re-derived.
std::string bond_text(const MolecularGraph& g, std::size_t bond_idx, std::size_t from, bool keep_stereo) {
  const Bond& b = g.bonds()[bond_idx];
  const bool both_aromatic = g.atoms()[b.a].aromatic && g.atoms()[b.b].aromatic;
  switch (b.order) {
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Quadruple: return "$";
    case BondOrder::Aromatic: return both_aromatic ? "" : ":";
    case BondOrder::Single:
      if (keep_stereo && b.stereo != BondStereo::None) {
        const bool forward = from == b.a;
        const bool up = (b.stereo == BondStereo::Up) == forward;
        return up ? "/" : "\\";
      }
      return both_aromatic ? "-" : "";
  }
  return "";
}

using NeighborOrder = std::function<void(std::size_t atom, std::vector<Neighbor>& nbrs)>;

class ComponentWriter {
 public:
  ComponentWriter(const MolecularGraph& g, NeighborOrder order)
      : g_(g),
        order_(std::move(order)),
        visited_(g.atom_count(), false),
        classified_(g.bond_count(), false),
        children_(g.atom_count()),
        rings_(g.atom_count()),
        digit_of_(g.bond_count(), -1) {}

  void write(std::size_t start, std::string& out) {
    discover(start, SIZE_MAX);
    emit(start, SIZE_MAX, SIZE_MAX, out);
  }

 private:
  void discover(std::size_t u, std::size_t parent_bond) {
    visited_[u] = true;
    std::vector<Neighbor> nbrs;
    for (const auto& n : g_.neighbors(u))
      if (n.bond != parent_bond) nbrs.push_back(n);
    order_(u, nbrs);
    for (const auto& n : nbrs) {
      if (classified_[n.bond]) continue;
      classified_[n.bond] = true;
      if (visited_[n.atom]) {
        rings_[n.atom].push_back(n.bond);
        rings_[u].push_back(n.bond);
      } else {
        children_[u].push_back(n);
        discover(n.atom, n.bond);
      }
    }
  }

  void emit(std::size_t u, std::size_t in_bond, std::size_t from, std::string& out) {
    if (in_bond != SIZE_MAX) out += bond_text(g_, in_bond, from, true);
    out += atom_text(g_.atoms()[u]);
    std::vector<int> released;
    for (auto b : rings_[u]) {
      if (digit_of_[b] >= 0) {
        out += ring_label(digit_of_[b]);
        released.push_back(digit_of_[b]);
      } else {
        const int d = take_digit();
        digit_of_[b] = d;
        out += bond_text(g_, b, u, false);
        out += ring_label(d);
      }
    }
    for (int d : released) in_use_[d] = false;
    const auto& kids = children_[u];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const bool branch = i + 1 < kids.size();
      if (branch) out += '(';
      emit(kids[i].atom, kids[i].bond, u, out);
      if (branch) out += ')';
    }
  }

  int take_digit() {
    for (int d = 1; d < 100; ++d) {
      if (!in_use_[d]) {
        in_use_[d] = true;
        return d;
      }
    }
    throw std::runtime_error("more than 99 simultaneously open rings");
  }

  static std::string ring_label(int d) {
    if (d < 10) return std::string(1, static_cast<char>('0' + d));
    return "%" + std::to_string(d);
  }

  const MolecularGraph& g_;
  NeighborOrder order_;
  std::vector<bool> visited_;
  std::vector<bool> classified_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<std::size_t>> rings_;
  std::vector<int> digit_of_;
  bool in_use_[100] = {};
};

// ---- canonical ranking -------------------------------------------------

using Ranks = std::vector<std::size_t>;

template <class Key>
Ranks dense_ranks(const std::vector<std::size_t>& atoms, const std::vector<Key>& keys) {
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return keys[x] < keys[y]; });
  Ranks r(atoms.size());
  std::size_t rank = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && keys[order[i - 1]] < keys[order[i]]) ++rank;
    r[order[i]] = rank;
  }
  return r;
}

std::size_t distinct(const Ranks& r) {
  std::vector<std::size_t> s(r);
  std::sort(s.begin(), s.end());
  return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
}

class Canonicalizer {
 public:
  Canonicalizer(const MolecularGraph& g, std::vector<std::size_t> atoms) : g_(g), atoms_(std::move(atoms)) {
    local_.assign(g.atom_count(), SIZE_MAX);
    for (std::size_t i = 0; i < atoms_.size(); ++i) local_[atoms_[i]] = i;
  }

  std::string run() {
    using Inv = std::tuple<std::string, bool, int, int, int, std::string, bool, std::size_t,
                           std::vector<int>>;
    std::vector<Inv> inv;
    for (auto a : atoms_) {
      const Atom& at = g_.atoms()[a];
      std::vector<int> orders;
      for (const auto& n : g_.neighbors(a)) orders.push_back(static_cast<int>(g_.bonds()[n.bond].order));
      std::sort(orders.begin(), orders.end());
      inv.emplace_back(at.element, at.aromatic, at.charge, at.hydrogens, at.isotope, at.chirality,
                       at.bracket, g_.degree(a), std::move(orders));
    }
    search(refine(dense_ranks(atoms_, inv)));
    return best_;
  }

 private:
  Ranks refine(Ranks r) const {
    std::size_t classes = distinct(r);
    while (true) {
      using Key = std::pair<std::size_t, std::vector<std::pair<std::size_t, int>>>;
      std::vector<Key> keys;
      keys.reserve(atoms_.size());
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        std::vector<std::pair<std::size_t, int>> nb;
        for (const auto& n : g_.neighbors(atoms_[i])) {
          nb.emplace_back(r[local_[n.atom]], static_cast<int>(g_.bonds()[n.bond].order));
        }
        std::sort(nb.begin(), nb.end());
        keys.emplace_back(r[i], std::move(nb));
      }
      Ranks next = dense_ranks(atoms_, keys);
      const std::size_t c = distinct(next);
      r = std::move(next);
      if (c == classes) return r;
      classes = c;
    }
  }

  void search(const Ranks& r) {
    if (distinct(r) == atoms_.size()) {
      consider(serialize(r));
      return;
    }
    // First (lowest-rank) non-singleton cell.
    std::map<std::size_t, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < atoms_.size(); ++i) cells[r[i]].push_back(i);
    std::vector<std::size_t> cell;
    for (auto& [rank, members] : cells) {
      if (members.size() > 1) {
        cell = members;
        break;
      }
    }
    // Terminal atoms sharing their only neighbor are interchangeable.
    std::vector<std::size_t> candidates;
    std::vector<std::size_t> seen_anchor;
    for (auto i : cell) {
      const auto a = atoms_[i];
      if (g_.degree(a) == 1) {
        const auto anchor = g_.neighbors(a)[0].atom;
        if (std::find(seen_anchor.begin(), seen_anchor.end(), anchor) != seen_anchor.end()) continue;
        seen_anchor.push_back(anchor);
      }
      candidates.push_back(i);
    }
    for (auto chosen : candidates) {
      std::vector<std::pair<std::size_t, int>> keys(atoms_.size());
      for (std::size_t i = 0; i < atoms_.size(); ++i) keys[i] = {r[i], i == chosen ? 0 : 1};
      search(refine(dense_ranks(atoms_, keys)));
    }
  }

  std::string serialize(const Ranks& r) const {
    std::size_t start = 0;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (r[i] < r[start]) start = i;
    std::string out;
    ComponentWriter w(g_, [&](std::size_t, std::vector<Neighbor>& nbrs) {
      std::sort(nbrs.begin(), nbrs.end(),
                [&](const Neighbor& x, const Neighbor& y) { return r[local_[x.atom]] < r[local_[y.atom]]; });
    });
    w.write(atoms_[start], out);
    return out;
  }

  void consider(std::string s) {
    if (best_.empty() || s.size() < best_.size() || (s.size() == best_.size() && s < best_)) best_ = std::move(s);
  }

  const MolecularGraph& g_;
  std::vector<std::size_t> atoms_;
  std::vector<std::size_t> local_;
  std::string best_;
};

}  // namespace

std::string write_smiles(const MolecularGraph& graph, std::size_t start_atom, std::mt19937_64* rng) {
  if (start_atom >= graph.atom_count()) {
    throw std::out_of_range("start atom " + std::to_string(start_atom) + " outside graph of " +
                            std::to_string(graph.atom_count()) + " atoms");
  }
  NeighborOrder order = [rng](std::size_t, std::vector<Neighbor>& nbrs) {
    if (rng) {
      std::shuffle(nbrs.begin(), nbrs.end(), *rng);
    } else {
      std::sort(nbrs.begin(), nbrs.end(), [](const Neighbor& x, const Neighbor& y) { return x.atom < y.atom; });
    }
  };
  auto comps = graph.components();
  std::vector<std::size_t> starts;
  std::size_t first = 0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (std::binary_search(comps[c].begin(), comps[c].end(), start_atom)) first = c;
  }
  std::vector<std::size_t> rest;
  for (std::size_t c = 0; c < comps.size(); ++c)
    if (c != first) rest.push_back(c);
  if (rng) std::shuffle(rest.begin(), rest.end(), *rng);

  ComponentWriter w(graph, order);
  std::string out;
  w.write(start_atom, out);
  for (auto c : rest) {
    std::size_t s = comps[c].front();
    if (rng) s = comps[c][std::uniform_int_distribution<std::size_t>(0, comps[c].size() - 1)(*rng)];
    out += '.';
    w.write(s, out);
  }
  return out;
}

std::string randomize_smiles(const MolecularGraph& graph, std::mt19937_64& rng) {
  const auto start = std::uniform_int_distribution<std::size_t>(0, graph.atom_count() - 1)(rng);
  return write_smiles(graph, start, &rng);
}

std::string randomize_smiles(std::string_view smiles, std::mt19937_64& rng) {
  return randomize_smiles(parse_smiles(smiles), rng);
}

std::string canonical_smiles(const MolecularGraph& graph) {
  std::vector<std::string> parts;
  for (auto& comp : graph.components()) parts.push_back(Canonicalizer(graph, comp).run());
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '.';
    out += parts[i];
  }
  return out;
}

}  // namespace kite::smiles
