#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>

#include "janus/canon.hpp"
#include "janus/selfies.hpp"
#include "janus/smiles.hpp"
#include "test_util.hpp"

namespace janus {
namespace {

bool all_atoms_valid(const MolGraph& g) {
  for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
    const Atom& at = g.atom(a);
    if (!is_valence_valid(at.element, at.charge, g.bond_order_sum(a), at.implicit_h)) return false;
  }
  return g.is_connected() && g.atom_count() >= 1;
}

std::string decoded(const std::string& text) {
  return canonical_smiles(decode(parse_selfies(text), default_alphabet()));
}

TEST(Alphabet, DefaultComposition) {
  Alphabet a = default_alphabet();
  EXPECT_EQ(a.token_at(0), Token::pad());
  EXPECT_EQ(a.index_of(Token::pad()), 0u);
  for (Element e : kAllElements) EXPECT_TRUE(a.contains(Token::atom(e))) << symbol(e);
  EXPECT_FALSE(a.contains(Token::atom(Element::O, 3)));
  EXPECT_FALSE(a.contains(Token::atom(Element::F, 2)));
  EXPECT_TRUE(a.contains(Token::atom(Element::S, 3)));
  EXPECT_TRUE(a.contains(Token::branch(2)));
  EXPECT_TRUE(a.contains(Token::ring(2)));
  EXPECT_FALSE(a.contains(Token::branch(3)));
  EXPECT_EQ(a.size(), 26u);
}

TEST(TokenText, ParsesAndPrints) {
  SelfiesString s = parse_selfies("[C][=C][Branch1][nop][#N][O-1][=Ring2][nop][nop][Cl][N+1]");
  ASSERT_EQ(s.size(), 11u);
  EXPECT_EQ(s.tokens[1], Token::atom(Element::C, 2));
  EXPECT_EQ(s.tokens[4], Token::atom(Element::N, 3));
  EXPECT_EQ(s.tokens[5], Token::atom(Element::O, 1, -1));
  EXPECT_EQ(s.tokens[6], Token::ring(2, 2));
  EXPECT_EQ(parse_selfies(s.text()), s);
  EXPECT_THROW(parse_selfies("[C"), ParseError);
  EXPECT_THROW(parse_selfies("[Xx]"), ParseError);
  EXPECT_THROW(parse_selfies("C"), ParseError);
  EXPECT_THROW(parse_selfies("[Branch4]"), ParseError);
  EXPECT_THROW(parse_selfies("[F-2]"), ParseError);
}

TEST(Decode, SimpleChains) {
  EXPECT_EQ(decoded("[C][C]"), canonical_smiles(parse_smiles("CC")));
  EXPECT_EQ(decoded("[C][#C]"), canonical_smiles(parse_smiles("C#C")));
  // oxygen starts with two free valences, so the triple bond clips to double
  EXPECT_EQ(decoded("[O][#C]"), canonical_smiles(parse_smiles("O=C")));
  EXPECT_EQ(decoded("[C][=O][C]"), canonical_smiles(parse_smiles("C=O")));
  EXPECT_EQ(decoded("[C][F][C]"), canonical_smiles(parse_smiles("CF")));
}

TEST(Decode, EmptyAndIgnoredInputGiveCarbon) {
  EXPECT_EQ(decoded(""), "C");
  EXPECT_EQ(decoded("[nop][nop]"), "C");
  EXPECT_EQ(decoded("[Branch1][C][C]"), "C");
  EXPECT_EQ(decoded("[Ring1][Ring2]"), "C");
}

TEST(Decode, BranchesAndRings) {
  EXPECT_EQ(decoded("[C][Branch1][nop][F][O]"), canonical_smiles(parse_smiles("C(F)O")));
  // payload [C] has alphabet index 1 -> branch spans two tokens
  EXPECT_EQ(decoded("[C][Branch1][C][C][O][N]"), canonical_smiles(parse_smiles("C(CO)N")));
  EXPECT_EQ(decoded("[C][C][C][Ring1][C]"), canonical_smiles(parse_smiles("C1CC1")));
  EXPECT_EQ(decoded("[C][C][C][Ring1][nop]"), canonical_smiles(parse_smiles("CCC")));
  // ring reaching past the first atom clamps to it
  EXPECT_EQ(decoded("[C][C][C][C][Ring1][Cl]"), canonical_smiles(parse_smiles("C1CCC1")));
  // branch overrunning the end is truncated
  EXPECT_EQ(decoded("[C][Branch2][O][O][N]"), canonical_smiles(parse_smiles("CN")));
}

TEST(Decode, SaturatedAtomClosesBranch) {
  // F is saturated after attaching, so [O] ends the branch and [N] continues the main chain
  EXPECT_EQ(decoded("[C][Branch1][C][F][O][N]"), canonical_smiles(parse_smiles("C(F)N")));
}

TEST(Decode, RandomStringsAreValid) {
  Alphabet alphabet = default_alphabet();
  Rng rng(99);
  for (int t = 0; t < 10000; ++t) {
    std::size_t len = 1 + uniform_index(rng, 50);
    SelfiesString s = random_tokens(len, alphabet, rng);
    MolGraph g = decode(s, alphabet);
    ASSERT_TRUE(all_atoms_valid(g)) << s.text();
  }
}

TEST(Encode, SingleCarbon) {
  EXPECT_EQ(encode(parse_smiles("C"), default_alphabet()).text(), "[C]");
}

TEST(Encode, EthanolAndBenzeneRoundTrip) {
  Alphabet alphabet = default_alphabet();
  for (const char* smi : {"CCO", "c1ccccc1", "C1=CC=CC=C1", "CC(C)(C)C", "C1CC1C1CC1"}) {
    MolGraph g = parse_smiles(smi);
    EXPECT_EQ(canonical_key(decode(encode(g, alphabet), alphabet)), canonical_key(g)) << smi;
  }
}

TEST(Encode, CorpusRoundTripWithExtendedAlphabet) {
  Alphabet alphabet = default_alphabet();
  std::vector<MolGraph> mols;
  for (const std::string& s : testing::load_corpus()) mols.push_back(parse_smiles(s));
  // charged atoms need their own tokens
  for (const MolGraph& g : mols) alphabet.extend(encode(g, alphabet).tokens);
  Rng rng(5);
  for (const MolGraph& g : mols) {
    CanonicalKey key = canonical_key(g);
    EXPECT_EQ(canonical_key(decode(encode(g, alphabet), alphabet)), key) << key.bytes;
    // any atom order must round-trip too
    auto perm = testing::random_permutation(g.atom_count(), rng);
    EXPECT_EQ(canonical_key(decode(encode(g.permuted(perm), alphabet), alphabet)), key) << key.bytes;
  }
}

TEST(Encode, RingClosureWithMultipleBond) {
  // DFS from atom 0 leaves the double bond as the ring closure
  MolGraph g = parse_smiles("C1CC=1");
  SelfiesString s = encode(g, default_alphabet());
  EXPECT_NE(s.text().find("[=Ring1]"), std::string::npos) << s.text();
  EXPECT_EQ(canonical_key(decode(s, default_alphabet())), canonical_key(g));
}

TEST(Encode, RejectsInexpressibleValence) {
  EXPECT_THROW(encode(parse_smiles("C[N](C)(C)(C)C"), default_alphabet()), UnsupportedError);
  EXPECT_THROW(encode(parse_smiles("C[SH2]C"), default_alphabet()), UnsupportedError);
}

TEST(RandomTokens, PreconditionAndDeterminism) {
  Alphabet alphabet = default_alphabet();
  Rng rng(1);
  EXPECT_THROW(random_tokens(0, alphabet, rng), PreconditionError);
  Rng a(42), b(42);
  EXPECT_EQ(random_tokens(30, alphabet, a), random_tokens(30, alphabet, b));
  Rng c(7);
  for (int t = 0; t < 1000; ++t) EXPECT_TRUE(all_atoms_valid(decode(random_tokens(30, alphabet, c), alphabet)));
}

TEST(Decode, IsPure) {
  Alphabet alphabet = default_alphabet();
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    SelfiesString s = random_tokens(40, alphabet, rng);
    EXPECT_EQ(canonical_smiles(decode(s, alphabet)), canonical_smiles(decode(s, alphabet)));
    // decode output itself re-encodes to an equivalent string
    MolGraph g = decode(s, alphabet);
    EXPECT_EQ(canonical_key(decode(encode(g, alphabet), alphabet)), canonical_key(g));
  }
}

}  // namespace
}  // namespace janus
