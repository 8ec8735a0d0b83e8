#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "janus/canon.hpp"
#include "janus/rings.hpp"
#include "janus/smiles.hpp"
#include "test_util.hpp"

namespace janus {
namespace {

int double_bonds_at(const MolGraph& g, int a) {
  int n = 0;
  for (const Neighbor& nb : g.neighbors(a)) n += g.bond(nb.bond).order == 2;
  return n;
}

// Independent minimum-cycle-basis oracle: enumerate every simple cycle, then
// greedily keep the shortest ones that are GF(2)-independent.
std::vector<std::size_t> brute_force_ring_sizes(const MolGraph& g) {
  const int n = static_cast<int>(g.atom_count());
  std::vector<std::pair<std::size_t, std::vector<std::uint8_t>>> cycles;
  std::set<std::vector<std::uint8_t>> seen;
  std::vector<int> path;
  std::vector<char> on(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> extend = [&](int start, int cur) {
    for (const Neighbor& nb : g.neighbors(cur)) {
      if (nb.atom == start && path.size() >= 3) {
        std::vector<std::uint8_t> edges(g.bond_count(), 0);
        for (std::size_t k = 0; k < path.size(); ++k) {
          int x = path[k], y = path[(k + 1) % path.size()];
          edges[static_cast<std::size_t>(*g.bond_between(x, y))] = 1;
        }
        if (seen.insert(edges).second) cycles.emplace_back(path.size(), edges);
        continue;
      }
      if (nb.atom < start || on[static_cast<std::size_t>(nb.atom)]) continue;
      on[static_cast<std::size_t>(nb.atom)] = 1;
      path.push_back(nb.atom);
      extend(start, nb.atom);
      path.pop_back();
      on[static_cast<std::size_t>(nb.atom)] = 0;
    }
  };
  for (int s = 0; s < n; ++s) {
    path = {s};
    on.assign(static_cast<std::size_t>(n), 0);
    on[static_cast<std::size_t>(s)] = 1;
    extend(s, s);
  }
  std::stable_sort(cycles.begin(), cycles.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<std::uint8_t>> basis;
  std::vector<std::size_t> sizes;
  for (auto& [len, vec] : cycles) {
    auto v = vec;
    for (const auto& row : basis) {
      std::size_t piv = static_cast<std::size_t>(std::find(row.begin(), row.end(), 1) - row.begin());
      if (v[piv]) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] ^= row[k];
      }
    }
    if (std::find(v.begin(), v.end(), 1) == v.end()) continue;
    // keep rows in echelon form keyed by their first set bit
    std::size_t piv = static_cast<std::size_t>(std::find(v.begin(), v.end(), 1) - v.begin());
    for (auto& row : basis) {
      if (row[piv]) {
        for (std::size_t k = 0; k < v.size(); ++k) row[k] ^= v[k];
      }
    }
    basis.push_back(v);
    sizes.push_back(len);
  }
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

TEST(ParseSmiles, EthanolHydrogensFromValence) {
  MolGraph g = parse_smiles("CCO");
  ASSERT_EQ(g.atom_count(), 3u);
  EXPECT_EQ(g.atom(0).implicit_h, 3);
  EXPECT_EQ(g.atom(1).implicit_h, 2);
  EXPECT_EQ(g.atom(2).implicit_h, 1);
  EXPECT_EQ(g.atom(2).element, Element::O);
}

TEST(ParseSmiles, BenzeneIsKekulized) {
  MolGraph g = parse_smiles("c1ccccc1");
  ASSERT_EQ(g.atom_count(), 6u);
  int doubles = 0;
  for (const Bond& b : g.bonds()) doubles += b.order == 2;
  EXPECT_EQ(doubles, 3);
  for (int a = 0; a < 6; ++a) {
    EXPECT_EQ(double_bonds_at(g, a), 1);
    EXPECT_EQ(g.atom(a).implicit_h, 1);
  }
}

TEST(ParseSmiles, AromaticHeterocycles) {
  MolGraph pyrrole = parse_smiles("c1cc[nH]c1");
  EXPECT_EQ(pyrrole.atom(3).implicit_h, 1);
  EXPECT_EQ(double_bonds_at(pyrrole, 3), 0);
  MolGraph pyridine = parse_smiles("c1ccncc1");
  EXPECT_EQ(double_bonds_at(pyridine, 3), 1);
  EXPECT_EQ(pyridine.atom(3).implicit_h, 0);
  MolGraph thiophene = parse_smiles("c1ccsc1");
  EXPECT_EQ(thiophene.atom(3).implicit_h, 0);
  EXPECT_EQ(canonical_key(parse_smiles("c1ccccc1")), canonical_key(parse_smiles("C1=CC=CC=C1")));
}

TEST(ParseSmiles, BracketAtoms) {
  MolGraph g = parse_smiles("[NH4+]");
  EXPECT_EQ(g.atom(0).charge, 1);
  EXPECT_EQ(g.atom(0).implicit_h, 4);
  MolGraph nitro = parse_smiles("C[N+](=O)[O-]");
  EXPECT_EQ(nitro.atom(1).charge, 1);
  EXPECT_EQ(nitro.atom(3).charge, -1);
  EXPECT_EQ(nitro.atom(3).implicit_h, 0);
}

TEST(ParseSmiles, SyntaxErrors) {
  for (const char* bad : {"C(", "C)", "C1CC", "(C)", "C==C", "C()C", "[C", "CX", "", "C/C=C/C", "[13C]", "[C@H](F)(Cl)Br", "C%1"}) {
    EXPECT_THROW(parse_smiles(bad), ParseError) << bad;
  }
}

TEST(ParseSmiles, RejectsDisconnectedAndBadCharges) {
  EXPECT_THROW(parse_smiles("CC.O"), ParseError);
  EXPECT_THROW(parse_smiles("[C+3]"), ParseError);
  EXPECT_THROW(parse_smiles("[N---]"), ParseError);
}

TEST(ParseSmiles, ValenceErrors) {
  EXPECT_THROW(parse_smiles("C(C)(C)(C)(C)C"), ValenceError);
  EXPECT_THROW(parse_smiles("O=O=O"), ValenceError);
  EXPECT_THROW(parse_smiles("[CH5]"), ValenceError);
  EXPECT_THROW(parse_smiles("FF(F)"), ValenceError);
}

TEST(ParseSmiles, RingBondOrders) {
  MolGraph g = parse_smiles("C=1CC1");
  EXPECT_EQ(g.bond(*g.bond_between(0, 2)).order, 2);
  MolGraph h = parse_smiles("C1CC=1");
  EXPECT_EQ(h.bond(*h.bond_between(0, 2)).order, 2);
  EXPECT_THROW(parse_smiles("C=1CC#1"), ParseError);
  MolGraph big = parse_smiles("C%10CC%10");
  EXPECT_EQ(big.bond_count(), 3u);
}

TEST(WriteSmiles, SingleCarbon) { EXPECT_EQ(write_smiles(parse_smiles("C")), "C"); }

TEST(WriteSmiles, CanonicalIsStable) {
  std::string a = write_smiles(parse_smiles("c1ccccc1"));
  std::string b = write_smiles(parse_smiles("C1=CC=CC=C1"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, write_smiles(parse_smiles(a)));
}

TEST(WriteSmiles, RandomizedEthanolVariesAndPreservesKey) {
  MolGraph g = parse_smiles("CCO");
  CanonicalKey key = canonical_key(g);
  std::set<std::string> distinct;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::string s = write_smiles(g, WriteOrder::random(seed));
    distinct.insert(s);
    EXPECT_EQ(canonical_key(parse_smiles(s)), key) << s;
  }
  EXPECT_GE(distinct.size(), 2u);
}

TEST(WriteSmiles, BracketAtomsRoundTrip) {
  for (const char* s : {"[NH4+]", "C[N+](C)(C)C", "CC(=O)[O-]", "[O-][n+]1ccccc1", "C[SH3]", "[CH2-]C"}) {
    MolGraph g = parse_smiles(s);
    std::string w = write_smiles(g);
    EXPECT_EQ(canonical_key(parse_smiles(w)), canonical_key(g)) << s << " -> " << w;
  }
}

TEST(CanonicalKey, PermutationInvariant) {
  std::mt19937_64 rng(11);
  for (const std::string& s : testing::load_corpus()) {
    MolGraph g = parse_smiles(s);
    auto perm = testing::random_permutation(g.atom_count(), rng);
    EXPECT_EQ(canonical_key(g), canonical_key(g.permuted(perm))) << s;
  }
}

TEST(CanonicalKey, DistinguishesIsomers) {
  EXPECT_NE(canonical_key(parse_smiles("CCO")), canonical_key(parse_smiles("COC")));
  EXPECT_NE(canonical_key(parse_smiles("C=CC")), canonical_key(parse_smiles("C1CC1")));
  EXPECT_NE(canonical_key(parse_smiles("CC(=O)[O-]")), canonical_key(parse_smiles("CC(=O)O")));
  EXPECT_NE(canonical_key(parse_smiles("C1CCCCC1")), canonical_key(parse_smiles("C1CC1C1CC1")));
}

TEST(CanonicalKey, ThousandRandomRewritesOneKey) {
  MolGraph g = parse_smiles("CNCCC(Oc1ccc(cc1)C(F)(F)F)c1ccccc1");
  ASSERT_GE(g.atom_count(), 20u);
  std::set<CanonicalKey> keys;
  std::set<std::string> strings;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::string s = write_smiles(g, WriteOrder::random(seed));
    strings.insert(s);
    keys.insert(canonical_key(parse_smiles(s)));
  }
  EXPECT_EQ(keys.size(), 1u);
  EXPECT_GT(strings.size(), 100u);
}

TEST(CanonicalKey, RegularGraphsNeedIndividualization) {
  // cubane is vertex-transitive, so refinement alone cannot split it
  MolGraph cubane = parse_smiles("C12C3C4C1C5C2C3C45");
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto perm = testing::random_permutation(cubane.atom_count(), rng);
    EXPECT_EQ(canonical_key(cubane), canonical_key(cubane.permuted(perm)));
  }
  EXPECT_NE(canonical_key(parse_smiles("C1CCC2CCCCC2C1")), canonical_key(parse_smiles("C1CCCC2CCCC2C1")));
}

TEST(RoundTrip, CorpusCanonicalAndRandomized) {
  for (const std::string& s : testing::load_corpus()) {
    MolGraph g = parse_smiles(s);
    CanonicalKey key = canonical_key(g);
    EXPECT_EQ(canonical_key(parse_smiles(write_smiles(g))), key) << s;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::string w = write_smiles(g, WriteOrder::random(seed));
      EXPECT_EQ(canonical_key(parse_smiles(w)), key) << s << " -> " << w;
    }
  }
}

TEST(PerceiveRings, Basics) {
  auto benzene = perceive_rings(parse_smiles("c1ccccc1"));
  ASSERT_EQ(benzene.size(), 1u);
  EXPECT_EQ(benzene[0].size(), 6u);
  EXPECT_TRUE(perceive_rings(parse_smiles("CCCCCC")).empty());
  auto naph = perceive_rings(parse_smiles("c1ccc2ccccc2c1"));
  ASSERT_EQ(naph.size(), 2u);
  EXPECT_EQ(naph[0].size(), 6u);
  EXPECT_EQ(naph[1].size(), 6u);
  auto cubane = perceive_rings(parse_smiles("C12C3C4C1C5C2C3C45"));
  EXPECT_EQ(cubane.size(), 5u);
  for (const auto& r : cubane) EXPECT_EQ(r.size(), 4u);
}

TEST(PerceiveRings, RingsAreCycles) {
  for (const std::string& s : testing::load_corpus()) {
    MolGraph g = parse_smiles(s);
    for (const Ring& r : perceive_rings(g)) {
      for (std::size_t k = 0; k < r.size(); ++k) {
        EXPECT_TRUE(g.bond_between(r[k], r[(k + 1) % r.size()]).has_value()) << s;
      }
    }
  }
}

TEST(PerceiveRings, MatchesBruteForceOracleOnSmallGraphs) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 300; ++t) {
    int n = std::uniform_int_distribution<int>(3, 12)(rng);
    int extra = std::uniform_int_distribution<int>(0, 4)(rng);
    MolGraph g = testing::random_carbon_graph(n, extra, rng);
    auto rings = perceive_rings(g);
    std::vector<std::size_t> sizes;
    for (const auto& r : rings) sizes.push_back(r.size());
    std::sort(sizes.begin(), sizes.end());
    EXPECT_EQ(sizes, brute_force_ring_sizes(g)) << write_smiles(g);
    EXPECT_EQ(rings, perceive_rings(g));
  }
}

TEST(Valence, EveryCorpusAtomIsValid) {
  for (const std::string& s : testing::load_corpus()) {
    MolGraph g = parse_smiles(s);
    EXPECT_TRUE(g.is_connected());
    for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
      const Atom& at = g.atom(a);
      EXPECT_TRUE(is_valence_valid(at.element, at.charge, g.bond_order_sum(a), at.implicit_h)) << s;
    }
  }
}

}  // namespace
}  // namespace janus
