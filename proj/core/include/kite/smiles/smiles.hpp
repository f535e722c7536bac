#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>

#include "kite/smiles/graph.hpp"

namespace kite::smiles {

// Parses SMILES: organic-subset and bracket atoms, bond symbols - = # $ : / \,
// ring closures (digits and %nn), branches and dot-separated components.
// Throws kite::ParseError carrying the byte offset of the problem.
MolecularGraph parse_smiles(std::string_view smiles);

// Depth-first serialization starting at `start_atom`. With an rng the
// neighbor order at every atom is shuffled and the remaining components are
// written in shuffled order from random start atoms; without one, neighbors
// are visited in index order. The result re-parses to an isomorphic graph.
std::string write_smiles(const MolecularGraph& graph, std::size_t start_atom,
                         std::mt19937_64* rng = nullptr);

// write_smiles from a uniformly drawn start atom with shuffled branches.
std::string randomize_smiles(const MolecularGraph& graph, std::mt19937_64& rng);
std::string randomize_smiles(std::string_view smiles, std::mt19937_64& rng);

// Deterministic canonical serialization used as the isomorphism oracle:
// equal strings iff the labeled graphs are isomorphic (element, aromaticity,
// charge, hydrogens, isotope, chirality tag, bond order; '/' and '\' marks
// are ignored). Not a chemistry-grade canonicalizer.
std::string canonical_smiles(const MolecularGraph& graph);

bool is_known_element(std::string_view symbol);

}  // namespace kite::smiles
