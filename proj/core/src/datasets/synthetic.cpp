#include "kite/datasets/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <sstream>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/smiles/smiles.hpp"

namespace kite::datasets {
namespace {

using smiles::Atom;
using smiles::BondOrder;
using smiles::MolecularGraph;

constexpr std::array<const char*, 8> kSignatures = {
    "S(=O)(=O)N", "[N+](=O)[O-]", "P(=O)(O)O", "C(=O)OCC", "Br", "I", "N=C=S", "C(=N)N",
};

int max_valence(const Atom& a) {
  if (a.element == "C") return 4;
  if (a.element == "N") return 3;
  if (a.element == "O" || a.element == "S") return 2;
  return 1;
}

int used_valence(const MolecularGraph& g, std::size_t atom) {
  int v = 0;
  for (const auto& nb : g.neighbors(atom)) {
    switch (g.bonds()[nb.bond].order) {
      case BondOrder::Double: v += 2; break;
      case BondOrder::Triple: v += 3; break;
      case BondOrder::Quadruple: v += 4; break;
      default: v += 1; break;
    }
  }
  if (g.atoms()[atom].aromatic) v = static_cast<int>(g.degree(atom)) + 1;
  return v;
}

bool has_room(const MolecularGraph& g, std::size_t atom, int order = 1) {
  return used_valence(g, atom) + order <= max_valence(g.atoms()[atom]);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Copies `frag` into `g` and bonds its atom `site` to `anchor`.
void graft(MolecularGraph& g, const MolecularGraph& frag, std::size_t anchor, std::size_t site = 0) {
  const std::size_t base = g.atom_count();
  for (const auto& a : frag.atoms()) g.add_atom(a);
  for (const auto& b : frag.bonds()) g.add_bond(base + b.a, base + b.b, b.order, b.stereo);
  g.add_bond(anchor, base + site, BondOrder::Single);
}

std::size_t free_atom(const MolecularGraph& g, std::mt19937_64& rng, bool allow_aromatic = false) {
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < g.atom_count(); ++i)
    if ((allow_aromatic || !g.atoms()[i].aromatic) && has_room(g, i)) open.push_back(i);
  if (open.empty()) throw Error("random molecule has no free valence");
  return open[pick(rng, open.size())];
}

std::string drug_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "DB%05zu", i + 1);
  return buf;
}

}  // namespace

MolecularGraph random_molecule(std::mt19937_64& rng, std::size_t min_atoms, std::size_t max_atoms) {
  if (min_atoms == 0 || max_atoms < min_atoms) throw ConfigError("bad atom count range for random molecules");
  static const std::vector<MolecularGraph> library = [] {
    std::vector<MolecularGraph> out;
    for (const char* s : {"c1ccccc1", "c1ccccc1", "c1ccncc1", "C1CCNCC1", "C1CCOC1", "C1CC1", "C(=O)O", "C(=O)N",
                          "OC", "N(C)C", "F", "Cl", "C#N", "CC", "CCC", "C(F)(F)F", "c1ccc2ccccc2c1", "C=O"}) {
      out.push_back(smiles::parse_smiles(s));
    }
    return out;
  }();
  const std::size_t target = min_atoms + pick(rng, max_atoms - min_atoms + 1);
  MolecularGraph g = library[pick(rng, 6)];
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 64 && g.atom_count() < target; ++attempt) {
    const auto& frag = library[pick(rng, library.size())];
    if (g.atom_count() + frag.atom_count() > max_atoms + 2) continue;
    std::size_t anchor = 0;
    try {
      anchor = free_atom(g, rng, true);
    } catch (const Error&) {
      break;
    }
    // Optional short linker chain.
    const std::size_t linker = u(rng) < 0.4 ? 1 + pick(rng, 2) : 0;
    for (std::size_t i = 0; i < linker; ++i) {
      Atom c;
      c.element = "C";
      const auto id = g.add_atom(c);
      g.add_bond(anchor, id, BondOrder::Single);
      anchor = id;
    }
    std::vector<std::size_t> sites;
    for (std::size_t i = 0; i < frag.atom_count(); ++i)
      if (has_room(frag, i)) sites.push_back(i);
    if (sites.empty()) continue;
    graft(g, frag, anchor, sites[pick(rng, sites.size())]);
  }
  return g;
}

SyntheticData make_synthetic(const SyntheticConfig& c) {
  if (c.drugs < 2) throw ConfigError("synthetic data needs at least two drugs");
  if (c.classes == 0) throw ConfigError("synthetic data needs at least one class");
  std::size_t types = 1;
  while (types * (types + 1) / 2 < c.classes) ++types;
  if (types > kSignatures.size()) throw ConfigError("too many synthetic classes");
  if (c.events > c.drugs * (c.drugs - 1) / 2) throw ConfigError("more synthetic events than distinct drug pairs");

  std::mt19937_64 rng(c.seed);
  SyntheticData d;
  std::vector<MolecularGraph> signatures;
  for (std::size_t t = 0; t < types; ++t) signatures.push_back(smiles::parse_smiles(kSignatures[t]));

  std::set<std::string> seen;
  while (d.drugs.size() < c.drugs) {
    const std::size_t type = d.drugs.size() % types;
    auto g = random_molecule(rng, c.min_atoms, c.max_atoms);
    graft(g, signatures[type], free_atom(g, rng, true));
    auto text = smiles::write_smiles(g, 0);
    if (!seen.insert(smiles::canonical_smiles(g)).second) continue;
    const auto id = drug_id(d.drugs.size());
    d.drugs.push_back({id, std::move(text)});
    d.drug_types.push_back(type);
  }

  std::vector<std::vector<std::int32_t>> table(types, std::vector<std::int32_t>(types));
  std::size_t k = 0;
  for (std::size_t i = 0; i < types; ++i)
    for (std::size_t j = i; j < types; ++j) table[i][j] = table[j][i] = static_cast<std::int32_t>(k++ % c.classes);
  for (std::size_t i = 0; i < c.classes; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "event_%02zu", i);
    d.labels.emplace_back(buf);
  }

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  while (d.events.size() < c.events) {
    auto a = pick(rng, c.drugs);
    auto b = pick(rng, c.drugs);
    if (a == b || !pairs.insert({std::min(a, b), std::max(a, b)}).second) continue;
    d.events.push_back({d.drugs[a].id, d.drugs[b].id, table[d.drug_types[a]][d.drug_types[b]]});
  }

  for (std::size_t i = 0; i < c.drugs; ++i) {
    const auto t = std::to_string(d.drug_types[i]);
    d.triples.push_back({"Compound::" + d.drugs[i].id, "binds", "Gene::T" + t});
    d.triples.push_back({"Compound::" + d.drugs[i].id, "treats", "Disease::D" + std::to_string(pick(rng, 5))});
  }
  for (std::size_t t = 0; t < types; ++t) {
    d.triples.push_back({"Gene::T" + std::to_string(t), "regulates", "Gene::T" + std::to_string((t + 1) % types)});
    d.triples.push_back({"Gene::T" + std::to_string(t), "associated", "Disease::D" + std::to_string(t % 5)});
  }
  return d;
}

void write_synthetic(const SyntheticData& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream drugs, events, labels, kg, corpus;
  for (const auto& r : d.drugs) {
    drugs << r.id << '\t' << r.smiles << '\n';
    corpus << r.smiles << '\n';
  }
  for (const auto& e : d.events) events << e.drug_a << '\t' << e.drug_b << '\t' << d.labels[e.label] << '\n';
  for (const auto& l : d.labels) labels << l << '\n';
  for (const auto& t : d.triples) kg << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  write_file_atomic(dir / "drugs.tsv", drugs.str());
  write_file_atomic(dir / "events.tsv", events.str());
  write_file_atomic(dir / "labels.txt", labels.str());
  write_file_atomic(dir / "kg.tsv", kg.str());
  write_file_atomic(dir / "corpus.txt", corpus.str());
}

}  // namespace kite::datasets
