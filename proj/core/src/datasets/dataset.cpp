#include "kite/datasets/dataset.hpp"

#include <algorithm>
#include <set>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/smiles/smiles.hpp"

namespace kite::datasets {
namespace {

std::vector<std::string_view> fields(std::string_view line) {
  auto f = split(line, '\t');
  for (auto& x : f) x = trim(x);
  return f;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

const DrugRecord& Dataset::drug(std::string_view id) const {
  auto it = drug_index.find(std::string(id));
  if (it == drug_index.end()) throw DataError("unknown drug '" + std::string(id) + "'");
  return drugs[it->second];
}

std::size_t Dataset::drugs_in_events() const {
  std::set<std::string_view> seen;
  for (const auto& e : events) {
    seen.insert(e.drug_a);
    seen.insert(e.drug_b);
  }
  return seen.size();
}

std::string pair_key(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  std::string k(a);
  k += '\t';
  k += b;
  return k;
}

std::vector<DrugRecord> parse_drugs(std::string_view text) {
  std::vector<DrugRecord> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = strip_cr(raw);
    if (trim(line).empty()) continue;
    auto f = fields(line);
    if (f.size() != 2 || f[0].empty() || f[1].empty()) throw DataError("expected drug_id<TAB>smiles", line_no);
    try {
      smiles::parse_smiles(f[1]);
    } catch (const ParseError& e) {
      throw DataError("drug '" + std::string(f[0]) + "' has unparsable SMILES: " + e.what(), line_no);
    }
    if (!seen.emplace(std::string(f[0]), line_no).second) {
      throw DataError("duplicate drug id '" + std::string(f[0]) + "'", line_no);
    }
    out.push_back({std::string(f[0]), std::string(f[1])});
  }
  if (out.empty()) throw DataError("drug table is empty");
  return out;
}

std::vector<std::string> parse_labels(std::string_view text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(strip_cr(raw));
    if (line.empty()) continue;
    if (!seen.insert(std::string(line)).second) throw DataError("duplicate label '" + std::string(line) + "'", line_no);
    out.emplace_back(line);
  }
  if (out.empty()) throw DataError("label file is empty");
  return out;
}

Dataset make_dataset(std::vector<DrugRecord> drugs, std::string_view events_text, std::vector<std::string> labels) {
  Dataset d;
  d.raw_drug_rows = drugs.size();
  d.drugs = std::move(drugs);
  d.labels = std::move(labels);
  for (std::size_t i = 0; i < d.drugs.size(); ++i) {
    if (!d.drug_index.emplace(d.drugs[i].id, i).second) throw DataError("duplicate drug id '" + d.drugs[i].id + "'");
  }
  std::unordered_map<std::string, std::int32_t> label_ids;
  for (std::size_t i = 0; i < d.labels.size(); ++i) label_ids.emplace(d.labels[i], static_cast<std::int32_t>(i));

  std::unordered_map<std::string, std::pair<std::int32_t, std::size_t>> pairs;  // key -> (label, line)
  std::size_t line_no = 0;
  for (auto raw : split(events_text, '\n')) {
    ++line_no;
    auto line = strip_cr(raw);
    if (trim(line).empty()) continue;
    ++d.raw_event_rows;
    auto f = fields(line);
    if (f.size() != 3) throw DataError("expected drug_a<TAB>drug_b<TAB>label", line_no);
    for (int k = 0; k < 2; ++k) {
      if (!d.drug_index.count(std::string(f[k]))) {
        throw DataError("event references unknown drug '" + std::string(f[k]) + "'", line_no);
      }
    }
    if (f[0] == f[1]) throw DataError("event pairs drug '" + std::string(f[0]) + "' with itself", line_no);
    auto lit = label_ids.find(std::string(f[2]));
    if (lit == label_ids.end()) throw DataError("label '" + std::string(f[2]) + "' not in label file", line_no);
    const auto key = pair_key(f[0], f[1]);
    auto [it, inserted] = pairs.emplace(key, std::make_pair(lit->second, line_no));
    if (!inserted) {
      if (it->second.first != lit->second) {
        throw DataError("pair " + std::string(f[0]) + "/" + std::string(f[1]) + " has conflicting labels (first on line " +
                            std::to_string(it->second.second) + ")",
                        line_no);
      }
      ++d.duplicate_events;
      continue;
    }
    d.events.push_back({std::string(f[0]), std::string(f[1]), lit->second});
  }
  if (d.events.empty()) throw DataError("event table is empty");
  return d;
}

Dataset load_dataset(const std::filesystem::path& drugs, const std::filesystem::path& events,
                     const std::filesystem::path& labels) {
  auto drug_rows = parse_drugs(read_file(drugs));
  auto label_rows = parse_labels(read_file(labels));
  return make_dataset(std::move(drug_rows), read_file(events), std::move(label_rows));
}

}  // namespace kite::datasets
