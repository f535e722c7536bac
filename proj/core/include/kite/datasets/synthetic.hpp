#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kite/datasets/dataset.hpp"
#include "kite/kg/kg.hpp"
#include "kite/smiles/graph.hpp"

namespace kite::datasets {

// Random connected drug-like graph: a ring or chain core with fragments from
// a small medicinal-chemistry library grafted on, some through short linkers.
smiles::MolecularGraph random_molecule(std::mt19937_64& rng, std::size_t min_atoms = 6, std::size_t max_atoms = 18);

struct SyntheticConfig {
  std::size_t drugs = 40;
  std::size_t events = 200;
  std::size_t classes = 8;
  std::size_t min_atoms = 6;
  std::size_t max_atoms = 18;
  std::uint64_t seed = 0;
};

// Each drug gets a type that is stamped into its structure (a signature
// fragment) and into the graph (a binds edge to the type's gene). The event
// label is a symmetric function of the two types.
struct SyntheticData {
  std::vector<DrugRecord> drugs;
  std::vector<std::size_t> drug_types;
  std::vector<DdiEvent> events;
  std::vector<std::string> labels;
  std::vector<kg::Triple> triples;
};

SyntheticData make_synthetic(const SyntheticConfig& config);

// Writes drugs.tsv, events.tsv, labels.txt, kg.tsv and corpus.txt (one
// SMILES per line) into `dir`.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace kite::datasets
