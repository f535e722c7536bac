#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kite::datasets {

struct DrugRecord {
  std::string id;
  std::string smiles;
};

struct DdiEvent {
  std::string drug_a;
  std::string drug_b;
  std::int32_t label = 0;
};

struct Dataset {
  std::vector<DrugRecord> drugs;
  std::vector<DdiEvent> events;
  std::vector<std::string> labels;  // index = class id
  std::unordered_map<std::string, std::size_t> drug_index;

  // Counts before filtering: raw drug rows and raw event rows.
  std::size_t raw_drug_rows = 0;
  std::size_t raw_event_rows = 0;
  std::size_t duplicate_events = 0;

  const DrugRecord& drug(std::string_view id) const;
  std::size_t class_count() const { return labels.size(); }
  // Drugs that occur in at least one event.
  std::size_t drugs_in_events() const;
};

// `drug_id<TAB>smiles`; ids unique and every SMILES must parse.
std::vector<DrugRecord> parse_drugs(std::string_view text);
// One label per line; line order defines class ids.
std::vector<std::string> parse_labels(std::string_view text);

// Events are `drug_a<TAB>drug_b<TAB>label`. (a, b) and (b, a) denote the same
// pair: repeats with the same label are dropped, repeats with a different
// label are an error. Every failure is a DataError with the line number.
Dataset make_dataset(std::vector<DrugRecord> drugs, std::string_view events_text, std::vector<std::string> labels);
Dataset load_dataset(const std::filesystem::path& drugs, const std::filesystem::path& events,
                     const std::filesystem::path& labels);

// Unordered pair key used for dedup and membership tests.
std::string pair_key(std::string_view a, std::string_view b);

}  // namespace kite::datasets
