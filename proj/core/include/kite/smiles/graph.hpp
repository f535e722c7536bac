#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace kite::smiles {

enum class BondOrder : std::uint8_t { Single, Double, Triple, Quadruple, Aromatic };

// '/' and '\' marks, stored relative to the bond's (a -> b) direction. They
// are kept as annotations only; no geometric meaning is derived from them.
enum class BondStereo : std::uint8_t { None, Up, Down };

struct Atom {
  std::string element;     // "C", "Cl", "*", ...
  bool aromatic = false;   // written lowercase
  int charge = 0;
  int hydrogens = 0;       // explicit count, bracket atoms only
  int isotope = 0;         // 0 = unspecified
  std::string chirality;   // "", "@", "@@", "@TH1", ...
  bool bracket = false;
  int atom_class = 0;      // ":n" suffix, 0 = none

  bool operator==(const Atom&) const = default;
};

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::Single;
  BondStereo stereo = BondStereo::None;
};

struct Neighbor {
  std::size_t atom;
  std::size_t bond;
};

class MolecularGraph {
 public:
  std::size_t add_atom(Atom atom);
  // Throws std::invalid_argument on bad endpoints, self loops or duplicates.
  std::size_t add_bond(std::size_t a, std::size_t b, BondOrder order,
                       BondStereo stereo = BondStereo::None);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<Neighbor>& neighbors(std::size_t atom) const { return adjacency_[atom]; }
  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  std::size_t degree(std::size_t atom) const { return adjacency_[atom].size(); }
  bool has_bond(std::size_t a, std::size_t b) const;

  // Connected components, each a sorted atom list; ordered by first atom.
  std::vector<std::vector<std::size_t>> components() const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

}  // namespace kite::smiles
