#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/datasets/dataset.hpp"
#include "kite/datasets/splits.hpp"
#include "kite/datasets/synthetic.hpp"
#include "kite/smiles/smiles.hpp"
#include "kite/smiles/tokenizer.hpp"

namespace kd = kite::datasets;

namespace {

std::vector<kd::DrugRecord> plain_drugs(std::size_t n) {
  std::vector<kd::DrugRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"D" + std::to_string(i), "CC"});
  return out;
}

// Random events over n drugs with labels 0..classes-1, class sizes kept >= 5.
kd::Dataset random_dataset(std::mt19937_64& rng, std::size_t drugs, std::size_t events, std::size_t classes) {
  std::set<std::pair<std::size_t, std::size_t>> used;
  std::ostringstream text;
  std::uniform_int_distribution<std::size_t> pick(0, drugs - 1);
  std::size_t made = 0;
  while (made < events) {
    auto a = pick(rng), b = pick(rng);
    if (a == b || !used.insert({std::min(a, b), std::max(a, b)}).second) continue;
    const auto label = made < 5 * classes ? made % classes : std::uniform_int_distribution<std::size_t>(0, classes - 1)(rng);
    text << 'D' << a << "\tD" << b << "\tL" << label << '\n';
    ++made;
  }
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) labels.push_back("L" + std::to_string(c));
  return kd::make_dataset(plain_drugs(drugs), text.str(), labels);
}

std::set<std::string> event_names(const kd::Dataset& d, const std::vector<std::size_t>& idx) {
  std::set<std::string> out;
  for (auto i : idx) out.insert(d.events[i].drug_a + d.events[i].drug_b);
  return out;
}

}  // namespace

TEST(Dataset, CountsMatch) {
  auto d = kd::make_dataset(kd::parse_drugs("A\tCCO\nB\tc1ccccc1\nC\tCN\n"), "A\tB\tx\nB\tC\ty\n", {"x", "y"});
  EXPECT_EQ(d.drugs.size(), 3u);
  EXPECT_EQ(d.events.size(), 2u);
  EXPECT_EQ(d.class_count(), 2u);
  EXPECT_EQ(d.events[1].label, 1);
  EXPECT_EQ(d.drugs_in_events(), 3u);
}

TEST(Dataset, MissingDrugNamed) {
  try {
    kd::make_dataset(plain_drugs(2), "D0\tD1\tx\nD0\tDB999\tx\n", {"x"});
    FAIL();
  } catch (const kite::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("DB999"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(Dataset, BadSmilesAndLabels) {
  EXPECT_THROW(kd::parse_drugs("A\tCC\nB\tC1CC\n"), kite::DataError);
  EXPECT_THROW(kd::parse_drugs("A\tCC\nA\tCN\n"), kite::DataError);
  EXPECT_THROW(kd::make_dataset(plain_drugs(2), "D0\tD1\tmissing\n", {"x"}), kite::DataError);
}

TEST(Dataset, UnorderedDedup) {
  auto d = kd::make_dataset(plain_drugs(3), "D0\tD1\tx\nD1\tD0\tx\nD1\tD2\tx\n", {"x"});
  EXPECT_EQ(d.events.size(), 2u);
  EXPECT_EQ(d.duplicate_events, 1u);
  EXPECT_EQ(d.raw_event_rows, 3u);
  EXPECT_THROW(kd::make_dataset(plain_drugs(2), "D0\tD1\tx\nD1\tD0\ty\n", {"x", "y"}), kite::DataError);
  EXPECT_EQ(kd::pair_key("a", "b"), kd::pair_key("b", "a"));
}

TEST(Splits, FourDrugEnumeration) {
  std::vector<kd::DrugRecord> drugs = {{"A", "C"}, {"B", "C"}, {"C", "C"}, {"D", "C"}};
  auto d = kd::make_dataset(drugs, "A\tB\tx\nA\tD\tx\nC\tD\tx\nA\tC\tx\n", {"x"});
  std::mt19937_64 rng(1);
  auto s = kd::split_by_test_drugs(d, {"D"}, rng, 2);
  EXPECT_EQ(event_names(d, s.train), (std::set<std::string>{"AB", "AC"}));
  EXPECT_EQ(event_names(d, s.u1), (std::set<std::string>{"AD", "CD"}));
  EXPECT_TRUE(s.u2.empty());
  EXPECT_TRUE(kd::verify_split(d, s).empty());
}

TEST(Splits, ZeroFractionKeepsEverything) {
  std::mt19937_64 rng(3);
  auto d = random_dataset(rng, 12, 40, 3);
  auto s = kd::make_inductive_splits(d, 0.0, rng);
  EXPECT_TRUE(s.u1.empty());
  EXPECT_TRUE(s.u2.empty());
  EXPECT_EQ(s.train.size(), d.events.size());
}

TEST(Splits, EmptyTrainIsAnError) {
  auto d = kd::make_dataset(plain_drugs(3), "D0\tD1\tx\nD1\tD2\tx\n", {"x"});
  std::mt19937_64 rng(0);
  EXPECT_THROW(kd::split_by_test_drugs(d, {"D1"}, rng), kite::DataError);
  EXPECT_THROW(kd::make_inductive_splits(d, 1.0, rng), kite::ConfigError);
}

TEST(Splits, RandomFixturesHoldInvariants) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t drugs = 10 + seed % 20;
    const std::size_t events = std::min<std::size_t>(drugs * (drugs - 1) / 2, 30 + 7 * seed);
    auto d = random_dataset(rng, drugs, events, 1 + seed % 5);
    auto s = kd::make_inductive_splits(d, 0.2, rng);
    EXPECT_TRUE(kd::verify_split(d, s).empty()) << "seed " << seed;
    // Independent membership oracle.
    for (std::size_t i = 0; i < d.events.size(); ++i) {
      const int t = static_cast<int>(s.test_drugs.count(d.events[i].drug_a) + s.test_drugs.count(d.events[i].drug_b));
      const auto& bucket = t == 0 ? s.train : t == 1 ? s.u1 : s.u2;
      EXPECT_TRUE(std::find(bucket.begin(), bucket.end(), i) != bucket.end());
    }
    std::size_t lo = SIZE_MAX, hi = 0, total = 0;
    for (const auto& f : s.folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      total += f.size();
    }
    EXPECT_EQ(s.folds.size(), 5u);
    EXPECT_LE(hi - lo, 1u);
    EXPECT_EQ(total, s.train.size());
  }
}

TEST(Splits, VerifyCatchesTampering) {
  std::mt19937_64 rng(5);
  auto d = random_dataset(rng, 20, 80, 2);
  auto s = kd::make_inductive_splits(d, 0.25, rng);
  ASSERT_FALSE(s.u1.empty());
  auto bad = s;
  bad.train.push_back(bad.u1.back());
  bad.u1.pop_back();
  EXPECT_FALSE(kd::verify_split(d, bad).empty());
  bad = s;
  bad.folds[0].push_back(bad.folds[1].back());
  bad.folds[1].pop_back();
  bad.folds[0].push_back(bad.folds[2].back());
  bad.folds[2].pop_back();
  EXPECT_FALSE(kd::verify_split(d, bad).empty());
}

TEST(Splits, SameSeedSameFoldsAndJsonRoundTrip) {
  std::mt19937_64 r0(11), r1(11), r2(11);
  auto d = random_dataset(r0, 25, 120, 4);
  auto a = kd::make_inductive_splits(d, 0.15, r1);
  auto b = kd::make_inductive_splits(d, 0.15, r2);
  EXPECT_EQ(a.folds, b.folds);
  EXPECT_EQ(a.test_drugs, b.test_drugs);
  auto back = kd::split_from_json(nlohmann::json::parse(kd::split_to_json(a).dump()), d);
  EXPECT_EQ(back.train, a.train);
  EXPECT_EQ(back.folds, a.folds);
  EXPECT_EQ(back.u1, a.u1);
  EXPECT_EQ(back.u2, a.u2);
}

TEST(Sts, QuotaLargestRemainder) {
  // 0.9 * {15, 7, 3} = {13.5, 6.3, 2.7}; target round(22.5) = 23 (half away from zero).
  EXPECT_EQ(kd::stratified_quota({15, 7, 3}, 0.9), (std::vector<std::size_t>{14, 6, 3}));
  EXPECT_EQ(kd::stratified_quota({1, 10}, 0.9), (std::vector<std::size_t>{1, 9}));
  EXPECT_EQ(kd::stratified_quota({0, 10}, 0.9), (std::vector<std::size_t>{0, 9}));
}

TEST(Sts, ThousandEventsShrinkArithmetic) {
  std::mt19937_64 rng(0);
  auto d = random_dataset(rng, 60, 1000, 8);
  std::vector<std::size_t> pool(d.events.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  auto s = kd::sts_series(d, pool, 5, rng);
  ASSERT_TRUE(s.dropped_classes.empty());
  ASSERT_EQ(s.steps.size(), 26u);  // 1000 * 0.9^25 = 71.8 is the first size at or below 75
  EXPECT_EQ(s.steps[0].size(), 1000u);
  EXPECT_LE(s.steps.back().size(), 75u);
  EXPECT_GT(s.steps[s.steps.size() - 2].size(), 75u);
  for (std::size_t k = 1; k < s.steps.size(); ++k) {
    const auto& prev = s.steps[k - 1];
    const auto& cur = s.steps[k];
    EXPECT_LT(cur.size(), prev.size());
    EXPECT_LE(std::abs(static_cast<double>(cur.size()) - 0.9 * static_cast<double>(prev.size())), 1.0) << k;
    EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
    std::map<int, double> pc, cc;
    for (auto i : prev) pc[d.events[i].label] += 1;
    for (auto i : cur) cc[d.events[i].label] += 1;
    EXPECT_EQ(pc.size(), cc.size());
    for (auto [c, n] : pc) EXPECT_LE(std::abs(cc[c] - 0.9 * n), 2.0);
  }
}

TEST(Sts, RareClassesDropped) {
  std::ostringstream text;
  std::size_t made = 0;
  for (std::size_t a = 0; a < 20 && made < 60; ++a)
    for (std::size_t b = a + 1; b < 20 && made < 60; ++b, ++made)
      text << 'D' << a << "\tD" << b << "\tL" << (made < 4 ? 2 : made < 8 ? 3 : made % 2) << '\n';
  auto d = kd::make_dataset(plain_drugs(20), text.str(), {"L0", "L1", "L2", "L3"});
  std::vector<std::size_t> pool(d.events.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::mt19937_64 rng(2);
  auto s = kd::sts_series(d, pool, 5, rng);
  EXPECT_EQ(s.dropped_classes, (std::vector<std::int32_t>{2, 3}));
  EXPECT_EQ(s.steps[0].size(), 52u);
  for (auto i : s.steps[0]) EXPECT_LT(d.events[i].label, 2);
}

TEST(Seqlen, BinsAndHandCount) {
  // "CCO" = 3 tokens, "c1ccccc1" = 8, "[NH4+]" = 1, "CCl" = 2.
  std::vector<kd::DrugRecord> drugs = {{"a", "CCO"}, {"b", "c1ccccc1"}, {"c", "[NH4+]"}, {"e", "CCl"}};
  auto d = kd::make_dataset(drugs, "a\tb\tx\na\tc\tx\nb\tc\tx\nc\te\tx\nb\te\tx\n", {"x"});
  std::vector<std::string> corpus = {"CCO", "c1ccccc1", "[NH4+]", "CCl"};
  std::vector<std::string> toks;
  for (const auto& s : corpus)
    for (auto& t : kite::smiles::tokenize(s)) toks.push_back(t);
  auto vocab = kite::smiles::build_vocab(toks);
  auto bins = kd::seqlen_bins(d, {0, 1, 2, 3, 4}, vocab, 5);
  EXPECT_EQ(bins.lengths, (std::vector<std::size_t>{12, 5, 10, 4, 11}));
  std::map<std::size_t, std::vector<std::size_t>> expect = {{0, {3}}, {5, {1}}, {10, {0, 2, 4}}};
  EXPECT_EQ(bins.bins, expect);
  EXPECT_THROW(kd::seqlen_bins(d, {0}, vocab, 0), kite::ConfigError);
}

TEST(Seqlen, LengthThirtySevenLandsInSecondBin) {
  std::string a(20, 'C'), b(16, 'C');
  auto d = kd::make_dataset({{"a", a}, {"b", b}}, "a\tb\tx\n", {"x"});
  std::vector<std::string> toks = {"C"};
  auto bins = kd::seqlen_bins(d, {0}, kite::smiles::build_vocab(toks), 25);
  EXPECT_EQ(bins.lengths[0], 37u);
  ASSERT_EQ(bins.bins.size(), 1u);
  EXPECT_EQ(bins.bins.begin()->first, 25u);
}

TEST(Synthetic, FilesLoadAndLabelsFollowTypes) {
  kd::SyntheticConfig cfg;
  cfg.drugs = 30;
  cfg.events = 200;
  cfg.seed = 4;
  auto syn = kd::make_synthetic(cfg);
  auto dir = std::filesystem::temp_directory_path() / "kite_synth_test";
  kd::write_synthetic(syn, dir);
  auto d = kd::load_dataset(dir / "drugs.tsv", dir / "events.tsv", dir / "labels.txt");
  EXPECT_EQ(d.drugs.size(), 30u);
  EXPECT_EQ(d.events.size(), 200u);
  EXPECT_EQ(d.class_count(), 8u);
  std::set<int> labels;
  for (const auto& e : d.events) labels.insert(e.label);
  EXPECT_EQ(labels.size(), 8u);
  for (const auto& r : syn.drugs) {
    auto g = kite::smiles::parse_smiles(r.smiles);
    EXPECT_EQ(g.components().size(), 1u) << r.smiles;
  }
  auto again = kd::make_synthetic(cfg);
  EXPECT_EQ(again.drugs.front().smiles, syn.drugs.front().smiles);
  std::filesystem::remove_all(dir);
}
