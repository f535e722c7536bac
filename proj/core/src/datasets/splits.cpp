#include "kite/datasets/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kite/common/error.hpp"
#include "kite/smiles/tokenizer.hpp"

namespace kite::datasets {
namespace {

std::vector<std::vector<std::size_t>> make_folds(std::vector<std::size_t> pool, std::size_t k, std::mt19937_64& rng) {
  if (k == 0) throw ConfigError("fold count must be positive");
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < pool.size(); ++i) folds[i % k].push_back(pool[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace

SplitBundle split_by_test_drugs(const Dataset& data, std::set<std::string> test_drugs, std::mt19937_64& rng,
                                std::size_t folds) {
  for (const auto& d : test_drugs) data.drug(d);
  SplitBundle s;
  s.test_drugs = std::move(test_drugs);
  for (std::size_t i = 0; i < data.events.size(); ++i) {
    const auto& e = data.events[i];
    const int in_test = static_cast<int>(s.test_drugs.count(e.drug_a)) + static_cast<int>(s.test_drugs.count(e.drug_b));
    (in_test == 0 ? s.train : in_test == 1 ? s.u1 : s.u2).push_back(i);
  }
  if (s.train.empty()) throw DataError("split leaves no training events; lower the test drug fraction");
  s.folds = make_folds(s.train, folds, rng);
  return s;
}

SplitBundle make_inductive_splits(const Dataset& data, double fraction, std::mt19937_64& rng, std::size_t folds) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("test drug fraction must lie in [0, 1)");
  std::vector<std::string> ids;
  for (const auto& d : data.drugs) ids.push_back(d.id);
  std::sort(ids.begin(), ids.end());
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size())));
  std::set<std::string> test(ids.begin(), ids.begin() + static_cast<long>(n_test));
  auto s = split_by_test_drugs(data, std::move(test), rng, folds);
  if (fraction > 0 && s.u1.empty() && s.u2.empty()) {
    throw DataError("test drugs take part in no events; raise the test drug fraction");
  }
  return s;
}

std::vector<std::string> verify_split(const Dataset& data, const SplitBundle& split) {
  std::vector<std::string> bad;
  auto in_test = [&](const std::string& d) { return split.test_drugs.count(d) > 0; };
  std::set<std::string> train_drugs;
  for (auto i : split.train) {
    train_drugs.insert(data.events.at(i).drug_a);
    train_drugs.insert(data.events.at(i).drug_b);
  }
  for (auto i : split.train) {
    const auto& e = data.events.at(i);
    if (in_test(e.drug_a) || in_test(e.drug_b)) bad.push_back("train event " + std::to_string(i) + " uses a test drug");
  }
  for (auto i : split.u1) {
    const auto& e = data.events.at(i);
    const int seen = static_cast<int>(train_drugs.count(e.drug_a)) + static_cast<int>(train_drugs.count(e.drug_b));
    if (in_test(e.drug_a) == in_test(e.drug_b)) bad.push_back("u1 event " + std::to_string(i) + " lacks exactly one test drug");
    if (seen > 1) bad.push_back("u1 event " + std::to_string(i) + " has both drugs in training events");
  }
  for (auto i : split.u2) {
    const auto& e = data.events.at(i);
    if (!in_test(e.drug_a) || !in_test(e.drug_b)) bad.push_back("u2 event " + std::to_string(i) + " has a training drug");
    if (train_drugs.count(e.drug_a) || train_drugs.count(e.drug_b)) {
      bad.push_back("u2 event " + std::to_string(i) + " shares a drug with training events");
    }
  }
  std::vector<std::size_t> all;
  for (const auto* v : {&split.train, &split.u1, &split.u2}) all.insert(all.end(), v->begin(), v->end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) bad.push_back("an event appears in two splits");
  if (all.size() != data.events.size()) bad.push_back("splits do not cover every event");

  std::vector<std::size_t> pooled;
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& f : split.folds) {
    pooled.insert(pooled.end(), f.begin(), f.end());
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
  }
  std::sort(pooled.begin(), pooled.end());
  auto train_sorted = split.train;
  std::sort(train_sorted.begin(), train_sorted.end());
  if (pooled != train_sorted) bad.push_back("folds do not partition the training pool");
  if (!split.folds.empty() && hi - lo > 1) bad.push_back("fold sizes differ by more than one");
  return bad;
}

nlohmann::ordered_json split_to_json(const SplitBundle& s) {
  nlohmann::ordered_json j;
  j["test_drugs"] = s.test_drugs;
  j["train"] = s.train;
  j["folds"] = s.folds;
  j["u1"] = s.u1;
  j["u2"] = s.u2;
  return j;
}

SplitBundle split_from_json(const nlohmann::json& j, const Dataset& data) {
  SplitBundle s;
  try {
    s.test_drugs = j.at("test_drugs").get<std::set<std::string>>();
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.folds = j.at("folds").get<std::vector<std::vector<std::size_t>>>();
    s.u1 = j.at("u1").get<std::vector<std::size_t>>();
    s.u2 = j.at("u2").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
  for (const auto* v : {&s.train, &s.u1, &s.u2}) {
    for (auto i : *v) {
      if (i >= data.events.size()) throw DataError("split refers to event " + std::to_string(i) + " beyond the dataset");
    }
  }
  auto bad = verify_split(data, s);
  if (!bad.empty()) throw DataError("split file does not match the dataset: " + bad.front());
  return s;
}

std::vector<std::size_t> stratified_quota(const std::vector<std::size_t>& counts, double keep) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  const auto target = static_cast<std::size_t>(std::llround(keep * total));
  std::vector<std::size_t> quota(counts.size());
  std::vector<double> remainder(counts.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double q = keep * static_cast<double>(counts[c]);
    quota[c] = static_cast<std::size_t>(std::floor(q));
    remainder[c] = q - std::floor(q);
    assigned += quota[c];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; i < order.size() && assigned < target; ++i) {
    if (quota[order[i]] < counts[order[i]]) {
      ++quota[order[i]];
      ++assigned;
    }
  }
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0 && quota[c] == 0) quota[c] = 1;
  return quota;
}

StsSeries sts_series(const Dataset& data, const std::vector<std::size_t>& pool, std::size_t min_class_count,
                     std::mt19937_64& rng, double keep, double stop_fraction) {
  if (!(keep > 0 && keep < 1)) throw ConfigError("sts keep share must lie in (0, 1)");
  if (!(stop_fraction > 0 && stop_fraction < 1)) throw ConfigError("sts stop fraction must lie in (0, 1)");
  const std::size_t m = data.class_count();
  std::vector<std::size_t> counts(m, 0);
  for (auto i : pool) ++counts[static_cast<std::size_t>(data.events.at(i).label)];
  StsSeries s;
  for (std::size_t c = 0; c < m; ++c)
    if (counts[c] > 0 && counts[c] < min_class_count) s.dropped_classes.push_back(static_cast<std::int32_t>(c));
  std::vector<std::size_t> cur;
  for (auto i : pool) {
    const auto label = data.events[i].label;
    if (!std::binary_search(s.dropped_classes.begin(), s.dropped_classes.end(), label)) cur.push_back(i);
  }
  std::sort(cur.begin(), cur.end());
  if (cur.empty()) throw DataError("no training events left after dropping rare classes");
  const double initial = static_cast<double>(cur.size());
  s.steps.push_back(cur);
  while (static_cast<double>(cur.size()) > stop_fraction * initial) {
    std::vector<std::vector<std::size_t>> by_class(m);
    for (auto i : cur) by_class[static_cast<std::size_t>(data.events[i].label)].push_back(i);
    std::vector<std::size_t> sizes(m);
    for (std::size_t c = 0; c < m; ++c) sizes[c] = by_class[c].size();
    const auto quota = stratified_quota(sizes, keep);
    if (std::accumulate(quota.begin(), quota.end(), std::size_t{0}) >= cur.size()) break;
    std::vector<std::size_t> next;
    for (std::size_t c = 0; c < m; ++c) {
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
      next.insert(next.end(), by_class[c].begin(), by_class[c].begin() + static_cast<long>(quota[c]));
    }
    std::sort(next.begin(), next.end());
    cur = std::move(next);
    s.steps.push_back(cur);
  }
  return s;
}

SeqlenBins seqlen_bins(const Dataset& data, const std::vector<std::size_t>& events, const smiles::Vocabulary& vocab,
                       std::size_t bin_width, std::size_t max_len) {
  if (bin_width == 0) throw ConfigError("bin width must be positive");
  std::unordered_map<std::string, std::vector<std::string>> tokens;
  auto toks = [&](const std::string& id) -> const std::vector<std::string>& {
    auto it = tokens.find(id);
    if (it == tokens.end()) it = tokens.emplace(id, smiles::tokenize(data.drug(id).smiles)).first;
    return it->second;
  };
  SeqlenBins b;
  b.width = bin_width;
  for (auto i : events) {
    const auto& e = data.events.at(i);
    const auto seq = smiles::encode_pair(toks(e.drug_a), toks(e.drug_b), vocab, max_len);
    const auto len = seq.real_length();
    b.lengths.push_back(len);
    b.bins[len / bin_width * bin_width].push_back(i);
  }
  return b;
}

}  // namespace kite::datasets
