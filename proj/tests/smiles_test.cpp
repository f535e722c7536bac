#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include "kite/common/error.hpp"
#include "kite/smiles/smiles.hpp"
#include "kite/smiles/tokenizer.hpp"
#include "kite/smiles/vocab.hpp"
#include "test_corpus.hpp"

using namespace kite::smiles;

namespace {

bool bonded(const MolecularGraph& g, std::size_t a, std::size_t b) { return g.has_bond(a, b); }

std::string canon(std::string_view s) { return canonical_smiles(parse_smiles(s)); }

std::multiset<std::string> atom_multiset(const MolecularGraph& g) {
  std::multiset<std::string> out;
  for (const auto& a : g.atoms())
    out.insert(a.element + (a.aromatic ? "a" : "") + "/" + std::to_string(a.charge) + "/" + std::to_string(a.hydrogens));
  return out;
}

std::multiset<int> bond_multiset(const MolecularGraph& g) {
  std::multiset<int> out;
  for (const auto& b : g.bonds()) out.insert(static_cast<int>(b.order));
  return out;
}

}  // namespace

TEST(ParseSmiles, LinearChain) {
  auto g = parse_smiles("CCO");
  ASSERT_EQ(g.atom_count(), 3u);
  EXPECT_EQ(g.atoms()[0].element, "C");
  EXPECT_EQ(g.atoms()[2].element, "O");
  ASSERT_EQ(g.bond_count(), 2u);
  for (const auto& b : g.bonds()) EXPECT_EQ(b.order, BondOrder::Single);
}

TEST(ParseSmiles, BenzeneRingClosure) {
  auto g = parse_smiles("c1ccccc1");
  ASSERT_EQ(g.atom_count(), 6u);
  ASSERT_EQ(g.bond_count(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_TRUE(g.atoms()[i].aromatic);
    EXPECT_EQ(g.degree(i), 2u);
    EXPECT_TRUE(bonded(g, i, (i + 1) % 6));
  }
}

TEST(ParseSmiles, Branches) {
  auto g = parse_smiles("C(Cl)(Cl)Cl");
  ASSERT_EQ(g.atom_count(), 4u);
  EXPECT_EQ(g.degree(0), 3u);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_EQ(g.atoms()[i].element, "Cl");
    EXPECT_TRUE(bonded(g, 0, i));
  }
}

TEST(ParseSmiles, BracketAtom) {
  auto g = parse_smiles("[13CH3+:7]");
  ASSERT_EQ(g.atom_count(), 1u);
  const auto& a = g.atoms()[0];
  EXPECT_EQ(a.isotope, 13);
  EXPECT_EQ(a.hydrogens, 3);
  EXPECT_EQ(a.charge, 1);
  EXPECT_EQ(a.atom_class, 7);
  EXPECT_TRUE(a.bracket);
  auto h = parse_smiles("[C@@H](F)(Cl)Br");
  EXPECT_EQ(h.atoms()[0].chirality, "@@");
  EXPECT_EQ(parse_smiles("[O--]").atoms()[0].charge, -2);
  EXPECT_EQ(parse_smiles("[Fe+3]").atoms()[0].charge, 3);
}

TEST(ParseSmiles, BondsAndComponents) {
  auto g = parse_smiles("C=C#N.[Na+].C%12CC%12");
  EXPECT_EQ(g.bonds()[0].order, BondOrder::Double);
  EXPECT_EQ(g.bonds()[1].order, BondOrder::Triple);
  EXPECT_EQ(g.components().size(), 3u);
  auto s = parse_smiles("F/C=C/F");
  EXPECT_EQ(s.bond_count(), 3u);
  EXPECT_NE(s.bonds()[0].stereo, BondStereo::None);
}

TEST(ParseSmiles, ErrorsCarryOffsets) {
  struct Case {
    const char* s;
    std::size_t offset;
  };
  for (auto [s, off] : {Case{"C(C", 1}, Case{"CC)", 2}, Case{"C1CC", 1}, Case{"CXC", 1}, Case{"C[]", 1}}) {
    try {
      parse_smiles(s);
      ADD_FAILURE() << s << " parsed";
    } catch (const kite::ParseError& e) {
      EXPECT_EQ(e.offset(), off) << s << ": " << e.what();
    }
  }
  EXPECT_THROW(parse_smiles(""), kite::ParseError);
  EXPECT_THROW(parse_smiles("C[C"), kite::ParseError);
  EXPECT_THROW(parse_smiles("C=1CC#1"), kite::ParseError);
  EXPECT_NO_THROW(parse_smiles("C1CC=1"));
}

TEST(WriteSmiles, SingleAtom) { EXPECT_EQ(write_smiles(parse_smiles("C"), 0), "C"); }

TEST(WriteSmiles, FromLastAtom) { EXPECT_EQ(write_smiles(parse_smiles("CCO"), 2), "OCC"); }

TEST(WriteSmiles, RejectsBadStart) { EXPECT_THROW(write_smiles(parse_smiles("CC"), 2), std::out_of_range); }

TEST(WriteSmiles, CorpusRoundTripIsIsomorphic) {
  for (const auto& s : kite::test::curated_smiles()) {
    auto g = parse_smiles(s);
    const auto c = canonical_smiles(g);
    for (std::size_t start = 0; start < g.atom_count(); ++start) {
      EXPECT_EQ(canon(write_smiles(g, start)), c) << s << " from " << start;
    }
  }
}

TEST(CanonicalSmiles, InvariantUnderAtomOrder) {
  EXPECT_EQ(canon("OCC"), canon("CCO"));
  EXPECT_EQ(canon("c1ccccc1O"), canon("Oc1ccccc1"));
  EXPECT_EQ(canon("C(=O)O.N"), canon("N.OC=O"));
  EXPECT_NE(canon("CCO"), canon("COC"));
  EXPECT_NE(canon("C1CCCCC1"), canon("C1CCC1CC"));
  EXPECT_NE(canon("CC=O"), canon("CCO"));
  EXPECT_NE(canon("[NH4+]"), canon("[NH4]"));
}

TEST(CanonicalSmiles, DistinguishesRegularGraphs) {
  // Two disjoint triangles vs a hexagon: both 2-regular on 6 atoms.
  EXPECT_NE(canon("C1CC1.C1CC1"), canon("C1CCCCC1"));
  // Triangular prism vs K3,3: both 3-regular on 6 atoms.
  EXPECT_NE(canon("C12C3C1C4C2C34"), canon("C12C3C4C2C3C14"));
  // Two SMILES of the prism.
  EXPECT_EQ(canon("C12C3C1C4C2C34"), canon("C12C3C4C1C2C34"));
}

TEST(RandomizeSmiles, SingleAtomIsFixed) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(randomize_smiles(std::string_view("C"), rng), "C");
}

TEST(RandomizeSmiles, RingsProduceVariants) {
  std::mt19937_64 rng(7);
  for (const char* s : {"C1CC1O", "c1ccccc1C", "C1CCNCC1", "c1ccc2ccccc2c1", "C1CC2CCC1CC2"}) {
    std::set<std::string> seen;
    for (int i = 0; i < 200; ++i) seen.insert(randomize_smiles(std::string_view(s), rng));
    EXPECT_GE(seen.size(), 2u) << s;
  }
}

// Every depth-first tree of a cycle is a path, so a ring of identical atoms
// has exactly one serialization up to ring labels.
TEST(RandomizeSmiles, UniformRingHasOneForm) {
  std::mt19937_64 rng(3);
  std::set<std::string> seen;
  for (int i = 0; i < 200; ++i) seen.insert(randomize_smiles(std::string_view("c1ccccc1"), rng));
  EXPECT_EQ(seen, (std::set<std::string>{"c1ccccc1"}));
}

TEST(RandomizeSmiles, DrawsAreIsomorphicAndPreserveMultisets) {
  std::mt19937_64 rng(11);
  for (const auto& s : kite::test::curated_smiles()) {
    auto g = parse_smiles(s);
    const auto c = canonical_smiles(g);
    for (int i = 0; i < 10; ++i) {
      const auto r = randomize_smiles(g, rng);
      auto h = parse_smiles(r);
      EXPECT_EQ(canonical_smiles(h), c) << s << " -> " << r;
      EXPECT_EQ(atom_multiset(h), atom_multiset(g));
      EXPECT_EQ(bond_multiset(h), bond_multiset(g));
    }
  }
}

TEST(Tokenize, Examples) {
  using V = std::vector<std::string>;
  EXPECT_EQ(tokenize("CCO"), (V{"C", "C", "O"}));
  EXPECT_EQ(tokenize("Clc1ccccc1"), (V{"Cl", "c", "1", "c", "c", "c", "c", "c", "1"}));
  EXPECT_EQ(tokenize("C[nH]1"), (V{"C", "[nH]", "1"}));
  EXPECT_EQ(tokenize("BrC%12CC%12"), (V{"Br", "C", "%12", "C", "C", "%12"}));
  EXPECT_THROW(tokenize("C[nH"), kite::ParseError);
}

TEST(Tokenize, JoinRoundTrip) {
  for (const auto& s : kite::test::curated_smiles()) {
    std::string joined;
    for (const auto& t : tokenize(s)) joined += t;
    EXPECT_EQ(joined, s);
  }
}

TEST(Vocab, ReservedPlusSingleToken) {
  std::vector<std::string> corpus{"CC"};
  auto v = build_vocab(corpus);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(4), "C");
  EXPECT_EQ(v.id("C"), 4);
}

TEST(Vocab, FrequencyOrder) {
  std::vector<std::string> corpus{"CCO", "CO"};
  auto v = build_vocab(corpus, 1);
  EXPECT_LT(v.id("C"), v.id("O"));
  EXPECT_EQ(v.frequencies().at("C"), 3u);
  EXPECT_EQ(v.frequencies().at("O"), 2u);
}

TEST(Vocab, TiesBrokenByTokenAndMinCount) {
  std::vector<std::string> corpus{"NO", "ON", "S"};
  auto v = build_vocab(corpus, 2);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(4), "N");
  EXPECT_EQ(v.token(5), "O");
  EXPECT_EQ(v.id("S"), kUnkId);
}

TEST(Vocab, UnseenTokenIsUnk) {
  std::vector<std::string> corpus{"CC"};
  auto v = build_vocab(corpus);
  EXPECT_EQ(v.id("Br"), kUnkId);
  EXPECT_THROW(build_vocab(std::span<const std::string>{}), kite::DataError);
}

TEST(Vocab, FileRoundTripAndDeterminism) {
  auto corpus = kite::test::curated_smiles();
  auto a = build_vocab(corpus);
  auto b = build_vocab(corpus);
  EXPECT_EQ(a.tokens(), b.tokens());
  auto text = a.serialize();
  EXPECT_EQ(text.substr(0, 25), "<PAD>\n<UNK>\n<MASK>\n<SEP>\n");
  auto c = Vocabulary::deserialize(text);
  EXPECT_EQ(c.tokens(), a.tokens());
  EXPECT_THROW(Vocabulary::deserialize("C\n"), kite::DataError);
}

TEST(EncodePair, ShortPair) {
  std::vector<std::string> corpus{"CO"};
  auto v = build_vocab(corpus);
  auto seq = encode_pair("C", "O", v);
  ASSERT_EQ(seq.ids.size(), 500u);
  EXPECT_EQ(seq.ids[0], v.id("C"));
  EXPECT_EQ(seq.ids[1], kSepId);
  EXPECT_EQ(seq.ids[2], v.id("O"));
  for (std::size_t i = 3; i < 500; ++i) EXPECT_EQ(seq.ids[i], kPadId);
  EXPECT_EQ(seq.real_length(), 3u);
  EXPECT_EQ(seq.segments[0], 0);
  EXPECT_EQ(seq.segments[1], 0);
  EXPECT_EQ(seq.segments[2], 1);
  EXPECT_EQ(seq.segments[499], 1);
}

TEST(EncodePair, TruncatesRight) {
  std::vector<std::string> corpus{"CO"};
  auto v = build_vocab(corpus);
  const std::string a(250, 'C');
  const std::string b(349, 'O');
  auto seq = encode_pair(a, b, v);
  ASSERT_EQ(seq.ids.size(), 500u);
  EXPECT_EQ(seq.untruncated_length, 600u);
  EXPECT_TRUE(seq.truncated());
  EXPECT_EQ(seq.real_length(), 500u);
  EXPECT_EQ(seq.ids[250], kSepId);
  EXPECT_EQ(std::count(seq.ids.begin(), seq.ids.end(), v.id("O")), 249);
}

TEST(EncodePair, SegmentLayoutAndMaskCount) {
  auto corpus = kite::test::curated_smiles();
  auto v = build_vocab(corpus);
  for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
    auto seq = encode_pair(corpus[i], corpus[i + 1], v, 64);
    ASSERT_EQ(seq.ids.size(), 64u);
    const auto expected = std::min<std::size_t>(tokenize(corpus[i]).size() + tokenize(corpus[i + 1]).size() + 1, 64);
    EXPECT_EQ(seq.real_length(), expected);
    const auto sep = std::find(seq.ids.begin(), seq.ids.end(), kSepId);
    if (sep == seq.ids.end()) continue;
    const auto sep_pos = static_cast<std::size_t>(sep - seq.ids.begin());
    for (std::size_t p = 0; p < seq.ids.size(); ++p) EXPECT_EQ(seq.segments[p], p <= sep_pos ? 0 : 1);
  }
}
