#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "janus/molgraph.hpp"

namespace janus {

using Ring = std::vector<int>;

namespace detail {

struct CycleCandidate {
  std::vector<std::uint64_t> edges;  // GF(2) incidence vector over bond indices
  std::vector<int> atoms;            // atoms in cycle order
};

inline void normalize_cycle(std::vector<int>& cyc) {
  auto it = std::min_element(cyc.begin(), cyc.end());
  std::rotate(cyc.begin(), it, cyc.end());
  if (cyc.size() > 2 && cyc.back() < cyc[1]) std::reverse(cyc.begin() + 1, cyc.end());
}

inline int highest_bit(const std::vector<std::uint64_t>& v) {
  for (std::size_t w = v.size(); w-- > 0;) {
    if (v[w]) return static_cast<int>(w * 64 + 63 - static_cast<std::size_t>(__builtin_clzll(v[w])));
  }
  return -1;
}

}  // namespace detail

/// Smallest set of smallest rings: a minimum cycle basis built from Horton
/// candidate cycles, chosen greedily by size with GF(2) independence.
/// Rings are atom cycles starting at their lowest atom index.
inline std::vector<Ring> perceive_rings(const MolGraph& g) {
  const int n = static_cast<int>(g.atom_count());
  const int m = static_cast<int>(g.bond_count());
  if (m == 0) return {};
  // cycle rank = E - V + components
  int components = 0;
  {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
      if (seen[static_cast<std::size_t>(s)]) continue;
      ++components;
      auto d = bfs_distances(g, s);
      for (int i = 0; i < n; ++i) {
        if (d[static_cast<std::size_t>(i)] >= 0) seen[static_cast<std::size_t>(i)] = 1;
      }
    }
  }
  const int rank = m - n + components;
  if (rank <= 0) return {};

  const std::size_t words = (static_cast<std::size_t>(m) + 63) / 64;
  std::vector<detail::CycleCandidate> cands;

  for (int v = 0; v < n; ++v) {
    // BFS tree rooted at v; neighbors are index-sorted so the tree is deterministic
    std::vector<int> parent(static_cast<std::size_t>(n), -1), parent_bond(static_cast<std::size_t>(n), -1),
        dist(static_cast<std::size_t>(n), -1), branch(static_cast<std::size_t>(n), -1);
    std::vector<int> queue{v};
    dist[static_cast<std::size_t>(v)] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      int a = queue[head];
      for (const Neighbor& nb : g.neighbors(a)) {
        auto u = static_cast<std::size_t>(nb.atom);
        if (dist[u] >= 0) continue;
        dist[u] = dist[static_cast<std::size_t>(a)] + 1;
        parent[u] = a;
        parent_bond[u] = nb.bond;
        branch[u] = (a == v) ? nb.atom : branch[static_cast<std::size_t>(a)];
        queue.push_back(nb.atom);
      }
    }
    for (int e = 0; e < m; ++e) {
      const Bond& b = g.bond(e);
      auto x = static_cast<std::size_t>(b.a), y = static_cast<std::size_t>(b.b);
      if (dist[x] < 0 || dist[y] < 0) continue;
      if (parent_bond[x] == e || parent_bond[y] == e) continue;
      // the two tree paths may only meet at v
      if (b.a != v && b.b != v && branch[x] == branch[y]) continue;
      detail::CycleCandidate c;
      c.edges.assign(words, 0);
      std::vector<int> px, py;
      for (int a = b.a; a != -1; a = parent[static_cast<std::size_t>(a)]) {
        px.push_back(a);
        int pb = parent_bond[static_cast<std::size_t>(a)];
        if (pb >= 0) c.edges[static_cast<std::size_t>(pb) / 64] |= 1ULL << (pb % 64);
      }
      for (int a = b.b; a != -1; a = parent[static_cast<std::size_t>(a)]) {
        py.push_back(a);
        int pb = parent_bond[static_cast<std::size_t>(a)];
        if (pb >= 0) c.edges[static_cast<std::size_t>(pb) / 64] |= 1ULL << (pb % 64);
      }
      c.edges[static_cast<std::size_t>(e) / 64] |= 1ULL << (e % 64);
      // px: x .. v, py: y .. v.  cycle: v .. x, y .. (before v)
      std::reverse(px.begin(), px.end());
      c.atoms = px;
      for (std::size_t k = 0; k + 1 < py.size(); ++k) c.atoms.push_back(py[k]);
      if (c.atoms.size() < 3) continue;
      detail::normalize_cycle(c.atoms);
      cands.push_back(std::move(c));
    }
  }

  std::sort(cands.begin(), cands.end(), [](const detail::CycleCandidate& p, const detail::CycleCandidate& q) {
    if (p.atoms.size() != q.atoms.size()) return p.atoms.size() < q.atoms.size();
    return p.atoms < q.atoms;
  });
  cands.erase(std::unique(cands.begin(), cands.end(),
                          [](const detail::CycleCandidate& p, const detail::CycleCandidate& q) {
                            return p.edges == q.edges;
                          }),
              cands.end());

  std::vector<std::vector<std::uint64_t>> basis;  // reduced rows
  std::vector<int> pivots;
  std::vector<Ring> rings;
  for (const auto& c : cands) {
    if (static_cast<int>(rings.size()) == rank) break;
    auto vec = c.edges;
    for (;;) {
      int hb = detail::highest_bit(vec);
      if (hb < 0) break;
      auto it = std::find(pivots.begin(), pivots.end(), hb);
      if (it == pivots.end()) break;
      const auto& row = basis[static_cast<std::size_t>(it - pivots.begin())];
      for (std::size_t w = 0; w < words; ++w) vec[w] ^= row[w];
    }
    int hb = detail::highest_bit(vec);
    if (hb < 0) continue;
    basis.push_back(std::move(vec));
    pivots.push_back(hb);
    rings.push_back(c.atoms);
  }
  return rings;
}

}  // namespace janus
