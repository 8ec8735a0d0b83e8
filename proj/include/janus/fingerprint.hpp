#pragma once

// Circular neighbourhood-hash fingerprint, radius 3, folded to 2048 bits.

#include <algorithm>
#include <bitset>
#include <cstdint>
#include <vector>

#include "janus/molgraph.hpp"
#include "janus/random.hpp"

namespace janus {

inline constexpr std::size_t kFingerprintBits = 2048;
inline constexpr int kFingerprintRadius = 3;

struct Fingerprint {
  std::bitset<kFingerprintBits> bits;

  std::size_t count() const { return bits.count(); }
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

namespace detail {

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

}  // namespace detail

inline Fingerprint fingerprint(const MolGraph& g) {
  const std::size_t n = g.atom_count();
  std::vector<std::uint64_t> cur(n), next(n);
  Fingerprint fp;
  for (std::size_t a = 0; a < n; ++a) {
    const int ai = static_cast<int>(a);
    const Atom& at = g.atom(ai);
    std::vector<int> orders;
    for (const Neighbor& nb : g.neighbors(ai)) orders.push_back(g.bond(nb.bond).order);
    std::sort(orders.begin(), orders.end());
    std::uint64_t h = detail::hash_combine(0x243f6a8885a308d3ULL, static_cast<std::uint64_t>(at.element));
    h = detail::hash_combine(h, static_cast<std::uint64_t>(at.charge + 8));
    h = detail::hash_combine(h, static_cast<std::uint64_t>(g.degree(ai)));
    for (int o : orders) h = detail::hash_combine(h, static_cast<std::uint64_t>(o));
    cur[a] = h;
    fp.bits.set(h % kFingerprintBits);
  }
  for (int r = 1; r <= kFingerprintRadius; ++r) {
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::uint64_t> env;
      for (const Neighbor& nb : g.neighbors(static_cast<int>(a))) {
        env.push_back(detail::hash_combine(static_cast<std::uint64_t>(g.bond(nb.bond).order),
                                           cur[static_cast<std::size_t>(nb.atom)]));
      }
      std::sort(env.begin(), env.end());
      std::uint64_t h = detail::hash_combine(static_cast<std::uint64_t>(r), cur[a]);
      for (std::uint64_t e : env) h = detail::hash_combine(h, e);
      next[a] = h;
      fp.bits.set(h % kFingerprintBits);
    }
    cur.swap(next);
  }
  return fp;
}

/// |a & b| / |a | b|; two empty vectors count as identical.
inline double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  std::size_t uni = (a.bits | b.bits).count();
  if (uni == 0) return 1.0;
  return static_cast<double>((a.bits & b.bits).count()) / static_cast<double>(uni);
}

}  // namespace janus
