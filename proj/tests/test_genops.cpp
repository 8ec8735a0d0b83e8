#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "janus/genops.hpp"
#include "test_util.hpp"

namespace janus {
namespace {

bool valid(const MolGraph& g) {
  for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
    const Atom& at = g.atom(a);
    if (!is_valence_valid(at.element, at.charge, g.bond_order_sum(a), at.implicit_h)) return false;
  }
  return g.is_connected();
}

TEST(Edit, DeleteShortensChain) {
  Alphabet alphabet = default_alphabet();
  SelfiesString s = parse_selfies("[C][C][C]");
  SelfiesString t = apply_edit(s, Edit{EditKind::Delete, 2, {}});
  EXPECT_EQ(canonical_smiles(decode(t, alphabet)), "CC");
}

TEST(Edit, AddAndReplace) {
  SelfiesString s = parse_selfies("[C][C]");
  EXPECT_EQ(apply_edit(s, Edit{EditKind::Add, 1, {Token::atom(Element::O)}}).text(), "[C][O][C]");
  EXPECT_EQ(apply_edit(s, Edit{EditKind::Add, 9, {Token::atom(Element::O)}}).text(), "[C][C][O]");
  EXPECT_EQ(apply_edit(s, Edit{EditKind::Replace, 0, {Token::atom(Element::N)}}).text(), "[N][C]");
  EXPECT_EQ(apply_edit(s, Edit{EditKind::Delete, 5, {}}).text(), "[C][C]");
}

TEST(Mutate, ReorderingsGiveDistinctValidChildren) {
  Alphabet alphabet = default_alphabet();
  MolGraph parent = parse_smiles("CC(C)Cc1ccc(cc1)C(C)C(=O)O");
  ASSERT_EQ(parent.atom_count(), 15u);
  MutationConfig cfg;
  cfg.num_reorderings = 10;
  Rng rng(2024);
  auto children = mutate(parent, cfg, alphabet, rng);
  EXPECT_GE(children.size(), 5u);
  CanonicalKey pk = canonical_key(parent);
  std::set<CanonicalKey> keys;
  for (const Child& c : children) {
    EXPECT_TRUE(valid(c.mol));
    EXPECT_NE(c.key, pk);
    EXPECT_EQ(c.key, canonical_key(c.mol));
    EXPECT_LE(c.key.bytes.size(), kDefaultSmilesCharLimit);
    keys.insert(c.key);
  }
  EXPECT_EQ(keys.size(), children.size());
}

TEST(Mutate, DeterministicForSeed) {
  Alphabet alphabet = default_alphabet();
  MolGraph parent = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  MutationConfig cfg;
  cfg.edits_per_string = 2;
  Rng a(9), b(9);
  auto x = mutate(parent, cfg, alphabet, a);
  auto y = mutate(parent, cfg, alphabet, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].key, y[i].key);
}

TEST(Mutate, CharacterLimitFiltersChildren) {
  Alphabet alphabet = default_alphabet();
  MolGraph parent = parse_smiles("CCCCCCCCCC");
  MutationConfig cfg;
  cfg.num_reorderings = 30;
  cfg.max_smiles_chars = 10;
  Rng rng(4);
  for (const Child& c : mutate(parent, cfg, alphabet, rng)) EXPECT_LE(c.key.bytes.size(), 10u);
}

TEST(Mutate, FullBiasAlwaysInsertsFragment) {
  Alphabet alphabet = default_alphabet();
  FragmentSet fs;
  fs.add(parse_selfies("[C][=O]"));
  MutationConfig cfg;
  cfg.edit_kind_weights = {0.0, 1.0, 0.0};
  cfg.fragments = &fs;
  cfg.fragment_bias = 1.0;
  Rng rng(1);
  SelfiesString s = parse_selfies("[C][C][C]");
  for (int t = 0; t < 100; ++t) {
    Edit e = random_edit(s, cfg, alphabet, rng);
    EXPECT_EQ(e.kind, EditKind::Add);
    EXPECT_EQ(SelfiesString{e.tokens}.text(), "[C][=O]");
  }
}

TEST(Mutate, ZeroBiasIgnoresFragments) {
  Alphabet alphabet = default_alphabet();
  FragmentSet fs;
  fs.add(parse_selfies("[C][=O]"), 3);
  fs.add(parse_selfies("[N]"));
  MolGraph parent = parse_smiles("c1ccc2ccccc2c1");
  MutationConfig plain;
  plain.num_reorderings = 20;
  plain.edits_per_string = 3;
  MutationConfig with = plain;
  with.fragments = &fs;
  Rng a(77), b(77);
  auto x = mutate(parent, plain, alphabet, a);
  auto y = mutate(parent, with, alphabet, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].key, y[i].key);
}

TEST(Mutate, RejectsBadConfig) {
  Alphabet alphabet = default_alphabet();
  Rng rng(1);
  MolGraph parent = parse_smiles("CC");
  MutationConfig cfg;
  cfg.edit_kind_weights = {0, 0, 0};
  EXPECT_THROW(mutate(parent, cfg, alphabet, rng), PreconditionError);
  cfg = MutationConfig{};
  cfg.num_reorderings = 0;
  EXPECT_THROW(mutate(parent, cfg, alphabet, rng), PreconditionError);
  cfg = MutationConfig{};
  cfg.fragment_bias = 1.5;
  EXPECT_THROW(mutate(parent, cfg, alphabet, rng), PreconditionError);
}

TEST(JointSimilarity, Examples) {
  EXPECT_DOUBLE_EQ(joint_similarity_of(std::vector<double>{0.5, 0.5}), 0.5);
  EXPECT_NEAR(joint_similarity_of(std::vector<double>{1.0, 0.2}), -0.2, 1e-12);
  EXPECT_NEAR(joint_similarity_of(std::vector<double>{0.4, 0.6, 0.5}), 0.3, 1e-12);
  EXPECT_THROW(joint_similarity_of(std::vector<double>{}), PreconditionError);
}

TEST(JointSimilarity, BoundedForTwoParents) {
  Rng rng(8);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> s = {uniform_real(rng), uniform_real(rng)};
    double j = joint_similarity_of(s);
    EXPECT_GE(j, -1.0);
    EXPECT_LE(j, 1.0);
  }
  Fingerprint f = fingerprint(parse_smiles("CCO"));
  std::vector<Fingerprint> parents = {f, f};
  EXPECT_DOUBLE_EQ(joint_similarity(f, parents), 1.0);
}

TEST(Crossover, IdenticalParentsGiveNothing) {
  Alphabet alphabet = default_alphabet();
  Rng rng(1);
  MolGraph m = parse_smiles("CC(=O)O");
  EXPECT_TRUE(crossover(m, parse_smiles("OC(C)=O"), PathConfig{}, alphabet, rng).empty());
}

TEST(Crossover, TruncatesToKept) {
  Alphabet alphabet = default_alphabet();
  Rng rng(3);
  PathConfig cfg;
  cfg.num_paths = 1;
  cfg.max_intermediates_kept = 3;
  auto out = crossover(parse_smiles("CC(=O)Nc1ccc(O)cc1"), parse_smiles("CCCCCCCCN"), cfg, alphabet, rng);
  EXPECT_LE(out.size(), 3u);
}

// Every subset of applied substitutions is a prefix of some ordering, so with
// all orderings walked the candidate set is exactly the power set.
std::vector<Child> brute_force_ranking(const MolGraph& a, const MolGraph& b, const Alphabet& alphabet) {
  auto [sa, sb] = aligned_encodings(a, b, alphabet);
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa.tokens[i] != sb.tokens[i]) diff.push_back(i);
  }
  std::vector<Fingerprint> fps = {fingerprint(a), fingerprint(b)};
  CanonicalKey ka = canonical_key(a), kb = canonical_key(b);
  std::map<CanonicalKey, Child> best;
  for (std::size_t mask = 1; mask < (std::size_t{1} << diff.size()); ++mask) {
    SelfiesString s = sa;
    for (std::size_t k = 0; k < diff.size(); ++k) {
      if (mask >> k & 1) s.tokens[diff[k]] = sb.tokens[diff[k]];
    }
    MolGraph g = decode(s, alphabet);
    CanonicalKey key = canonical_key(g);
    if (key == ka || key == kb || key.bytes.size() > kDefaultSmilesCharLimit) continue;
    double score = joint_similarity(fingerprint(g), fps);
    best.emplace(key, Child{g, key, score});
  }
  std::vector<Child> out;
  for (auto& [k, c] : best) out.push_back(c);
  std::sort(out.begin(), out.end(), [](const Child& x, const Child& y) {
    return x.score != y.score ? x.score > y.score : x.key < y.key;
  });
  return out;
}

void expect_matches_oracle(const MolGraph& a, const MolGraph& b, const Alphabet& alphabet) {
  PathConfig cfg;
  cfg.num_paths = 40320;  // 8!
  cfg.max_intermediates_kept = 1000;
  Rng rng(0);
  auto got = crossover(a, b, cfg, alphabet, rng);
  auto want = brute_force_ranking(a, b, alphabet);
  ASSERT_EQ(got.size(), want.size()) << canonical_smiles(a) << " x " << canonical_smiles(b);
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].key, want[i].key);
    EXPECT_DOUBLE_EQ(got[i].score, want[i].score);
  }
}

TEST(Crossover, MatchesBruteForceOnSmallPairs) {
  Alphabet alphabet = default_alphabet();
  const std::vector<std::pair<const char*, const char*>> pairs = {
      {"CCCC", "CC=CC"}, {"CCCC", "OCCN"},   {"CCO", "NC=O"},     {"C1CCC1", "CCCCO"},
      {"CC(C)O", "C#CC"}, {"FCCCl", "C1CC1"}, {"CCCCCC", "OCC(N)C"}, {"CC=O", "CCNCC"},
  };
  for (auto [x, y] : pairs) {
    MolGraph a = parse_smiles(x), b = parse_smiles(y);
    auto [sa, sb] = aligned_encodings(a, b, alphabet);
    ASSERT_LE(sa.size(), 8u) << x;
    expect_matches_oracle(a, b, alphabet);
  }
}

TEST(Crossover, MatchesBruteForceOnRandomPairs) {
  Alphabet alphabet = default_alphabet();
  Rng rng(31);
  int checked = 0;
  while (checked < 40) {
    MolGraph a = decode(random_tokens(1 + uniform_index(rng, 6), alphabet, rng), alphabet);
    MolGraph b = decode(random_tokens(1 + uniform_index(rng, 6), alphabet, rng), alphabet);
    auto [sa, sb] = aligned_encodings(a, b, alphabet);
    if (sa.size() > 8) continue;
    expect_matches_oracle(a, b, alphabet);
    ++checked;
  }
}

TEST(Crossover, SampledPathsGiveValidChildren) {
  Alphabet alphabet = default_alphabet();
  Rng rng(5);
  MolGraph a = parse_smiles("CC(=O)Oc1ccccc1C(=O)O");
  MolGraph b = parse_smiles("CN1C=NC2=C1C(=O)N(C(=O)N2C)C");
  PathConfig cfg;
  cfg.num_paths = 4;
  cfg.max_intermediates_kept = 50;
  auto out = crossover(a, b, cfg, alphabet, rng);
  EXPECT_FALSE(out.empty());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_TRUE(valid(out[i].mol));
    EXPECT_NE(out[i].key, canonical_key(a));
    EXPECT_NE(out[i].key, canonical_key(b));
    if (i > 0) {
      EXPECT_GE(out[i - 1].score, out[i].score);
    }
  }
}

TEST(Fragments, SingleCarbon) {
  std::vector<MolGraph> data = {parse_smiles("C")};
  FragmentSet fs = extract_fragments(data, default_alphabet());
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs.counts().begin()->first.text(), "[C]");
  EXPECT_EQ(fs.counts().begin()->second, 1u);
}

TEST(Fragments, BenzeneIsOneFragmentSixTimes) {
  std::vector<MolGraph> data = {parse_smiles("c1ccccc1")};
  FragmentSet fs = extract_fragments(data, default_alphabet());
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs.counts().begin()->second, 6u);
}

TEST(Fragments, EmptyDatasetThrows) {
  EXPECT_THROW(extract_fragments(std::vector<MolGraph>{}, default_alphabet()), PreconditionError);
}

TEST(Fragments, MatchesBfsBallOracle) {
  Alphabet alphabet = default_alphabet();
  std::vector<MolGraph> data;
  for (const std::string& s : testing::load_corpus()) {
    MolGraph g = parse_smiles(s);
    try {
      encode(g, alphabet);
    } catch (const UnsupportedError&) {
      continue;
    }
    data.push_back(g);
    if (data.size() == 10) break;
  }
  ASSERT_EQ(data.size(), 10u);
  for (int radius : {0, 1, 3}) {
    std::map<CanonicalKey, std::size_t> want;
    for (const MolGraph& g : data) {
      const int n = static_cast<int>(g.atom_count());
      for (int c = 0; c < n; ++c) {
        // plain layered BFS
        std::vector<int> layer = {c}, seen(static_cast<std::size_t>(n), 0), ball = {c};
        seen[static_cast<std::size_t>(c)] = 1;
        for (int d = 0; d < radius; ++d) {
          std::vector<int> next;
          for (int u : layer) {
            for (const Bond& b : g.bonds()) {
              int v = b.a == u ? b.b : b.b == u ? b.a : -1;
              if (v >= 0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                next.push_back(v);
                ball.push_back(v);
              }
            }
          }
          layer = next;
        }
        ++want[canonical_key(g.induced_subgraph(ball))];
      }
    }
    FragmentSet fs = extract_fragments(data, alphabet, radius);
    std::map<CanonicalKey, std::size_t> got;
    for (const auto& [s, c] : fs.counts()) got[canonical_key(decode(s, alphabet))] += c;
    EXPECT_EQ(got, want) << "radius " << radius;
  }
}

TEST(Fragments, TextRoundTrip) {
  std::vector<MolGraph> data = {parse_smiles("CC(=O)Nc1ccc(O)cc1"), parse_smiles("CCO")};
  FragmentSet fs = extract_fragments(data, default_alphabet());
  std::stringstream ss;
  fs.write(ss);
  FragmentSet back = FragmentSet::read(ss);
  EXPECT_EQ(back.counts(), fs.counts());
  EXPECT_EQ(back.total(), 14u);
  std::stringstream bad1("[C][C]\n");
  EXPECT_THROW(FragmentSet::read(bad1), ParseError);
  std::stringstream bad2("[C]\t0\n");
  EXPECT_THROW(FragmentSet::read(bad2), ParseError);
  std::stringstream bad3("[Q]\t2\n");
  EXPECT_THROW(FragmentSet::read(bad3), ParseError);
}

}  // namespace
}  // namespace janus
