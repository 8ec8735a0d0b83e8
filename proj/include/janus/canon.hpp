#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "janus/molgraph.hpp"
#include "janus/smiles.hpp"

namespace janus {

/// Relabeling-invariant identity of a molecular graph.  The bytes are the
/// canonical SMILES, but callers should treat them as opaque.
struct CanonicalKey {
  std::string bytes;

  friend auto operator<=>(const CanonicalKey&, const CanonicalKey&) = default;
  friend bool operator==(const CanonicalKey&, const CanonicalKey&) = default;
};

struct CanonicalKeyHash {
  std::size_t operator()(const CanonicalKey& k) const { return std::hash<std::string>{}(k.bytes); }
};

namespace detail {

inline int dense_rank(std::vector<int>& ranks, const std::vector<std::vector<int>>& signatures) {
  std::vector<int> idx(signatures.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int x, int y) {
    return signatures[static_cast<std::size_t>(x)] < signatures[static_cast<std::size_t>(y)];
  });
  int r = -1;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k == 0 || signatures[static_cast<std::size_t>(idx[k])] != signatures[static_cast<std::size_t>(idx[k - 1])]) ++r;
    ranks[static_cast<std::size_t>(idx[k])] = r;
  }
  return r + 1;
}

/// Iterated neighbourhood refinement (Morgan-style) until the number of
/// classes stops growing.  Returns the class count.
inline int refine(const MolGraph& g, std::vector<int>& ranks) {
  const std::size_t n = g.atom_count();
  std::vector<std::vector<int>> sig(n);
  int classes = 0;
  {
    std::vector<int> seen = ranks;
    std::sort(seen.begin(), seen.end());
    classes = static_cast<int>(std::unique(seen.begin(), seen.end()) - seen.begin());
  }
  for (;;) {
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::pair<int, int>> nb;
      for (const Neighbor& x : g.neighbors(static_cast<int>(a))) {
        nb.emplace_back(ranks[static_cast<std::size_t>(x.atom)], g.bond(x.bond).order);
      }
      std::sort(nb.begin(), nb.end());
      auto& s = sig[a];
      s.clear();
      s.push_back(ranks[a]);
      for (auto [r, o] : nb) {
        s.push_back(r);
        s.push_back(o);
      }
    }
    int next = dense_rank(ranks, sig);
    if (next == classes) return classes;
    classes = next;
  }
}

inline std::vector<int> initial_ranks(const MolGraph& g) {
  const std::size_t n = g.atom_count();
  std::vector<std::vector<int>> sig(n);
  for (std::size_t a = 0; a < n; ++a) {
    const Atom& at = g.atom(static_cast<int>(a));
    std::vector<int> orders;
    for (const Neighbor& x : g.neighbors(static_cast<int>(a))) orders.push_back(g.bond(x.bond).order);
    std::sort(orders.begin(), orders.end());
    sig[a] = {static_cast<int>(at.element), at.charge, g.degree(static_cast<int>(a)), at.implicit_h};
    sig[a].insert(sig[a].end(), orders.begin(), orders.end());
  }
  std::vector<int> ranks(n);
  dense_rank(ranks, sig);
  return ranks;
}

inline constexpr int kCanonLeafBudget = 4096;

struct CanonSearch {
  const MolGraph& g;
  std::string best;
  std::vector<int> best_ranks;
  int leaves = 0;

  void run(std::vector<int> ranks) {
    const int n = static_cast<int>(g.atom_count());
    int classes = refine(g, ranks);
    if (classes == n) {
      ++leaves;
      std::string s = write_smiles_with_priority(g, ranks);
      if (best_ranks.empty() || s < best) {
        best = std::move(s);
        best_ranks = ranks;
      }
      return;
    }
    // lowest-ranked non-singleton class
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (int r : ranks) ++count[static_cast<std::size_t>(r)];
    int target = -1;
    for (int r = 0; r < n; ++r) {
      if (count[static_cast<std::size_t>(r)] > 1) {
        target = r;
        break;
      }
    }
    std::vector<int> members;
    for (int a = 0; a < n; ++a) {
      if (ranks[static_cast<std::size_t>(a)] == target) members.push_back(a);
    }
    // twins (same neighbours, same bond orders) are interchangeable by an
    // automorphism, so one representative per twin group suffices
    std::vector<std::vector<std::pair<int, int>>> seen;
    for (int m : members) {
      if (leaves >= kCanonLeafBudget && !best_ranks.empty()) return;
      std::vector<std::pair<int, int>> nbs;
      for (const Neighbor& x : g.neighbors(m)) nbs.emplace_back(x.atom, g.bond(x.bond).order);
      if (std::find(seen.begin(), seen.end(), nbs) != seen.end()) continue;
      seen.push_back(nbs);
      std::vector<int> next(ranks.size());
      for (int a = 0; a < n; ++a) next[static_cast<std::size_t>(a)] = ranks[static_cast<std::size_t>(a)] * 2 + (a == m ? 0 : 1);
      std::vector<std::vector<int>> sig(ranks.size());
      for (std::size_t a = 0; a < ranks.size(); ++a) sig[a] = {next[a]};
      dense_rank(next, sig);
      run(std::move(next));
    }
  }
};

}  // namespace detail

/// Canonical atom ranks (a permutation of 0..n-1).
inline std::vector<int> canonical_ranks(const MolGraph& g) {
  if (g.empty()) return {};
  detail::CanonSearch search{g, {}, {}, 0};
  search.run(detail::initial_ranks(g));
  return search.best_ranks;
}

inline std::string canonical_smiles(const MolGraph& g) {
  if (g.empty()) return {};
  detail::CanonSearch search{g, {}, {}, 0};
  search.run(detail::initial_ranks(g));
  return search.best;
}

inline CanonicalKey canonical_key(const MolGraph& g) { return CanonicalKey{canonical_smiles(g)}; }

/// Atom order for SMILES writing: canonical, or a seeded random traversal.
struct WriteOrder {
  bool randomized = false;
  std::uint64_t seed = 0;

  static WriteOrder canonical() { return {}; }
  static WriteOrder random(std::uint64_t seed) { return {true, seed}; }
};

inline std::string write_smiles(const MolGraph& g, WriteOrder order = WriteOrder::canonical()) {
  if (!order.randomized) return canonical_smiles(g);
  std::vector<int> priority(g.atom_count());
  std::iota(priority.begin(), priority.end(), 0);
  std::mt19937_64 rng(order.seed);
  std::shuffle(priority.begin(), priority.end(), rng);
  return write_smiles_with_priority(g, priority);
}

/// The graph relabeled into canonical atom order.
inline MolGraph canonical_form(const MolGraph& g) {
  auto ranks = canonical_ranks(g);
  return g.permuted(ranks);
}

}  // namespace janus
