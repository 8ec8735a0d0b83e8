#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "janus/element.hpp"
#include "janus/error.hpp"

namespace janus {

struct Atom {
  Element element = Element::C;
  int charge = 0;
  int implicit_h = 0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  int a = 0;
  int b = 0;
  int order = 1;

  int other(int atom) const { return atom == a ? b : a; }
  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Neighbor {
  int atom;
  int bond;
};

/// Valence-checked molecular graph.  Immutable once constructed: every
/// constructor validates endpoints, parallel bonds and per-atom valence.
class MolGraph {
 public:
  MolGraph() = default;

  MolGraph(std::vector<Atom> atoms, std::vector<Bond> bonds)
      : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
    build_adjacency();
    check_valence();
  }

  /// Builds a graph whose atoms get the default hydrogen count for their
  /// bond sum.  Throws ValenceError if some atom is over-bonded.
  static MolGraph with_default_hydrogens(std::vector<Atom> atoms, std::vector<Bond> bonds) {
    MolGraph g;
    g.atoms_ = std::move(atoms);
    g.bonds_ = std::move(bonds);
    g.build_adjacency();
    for (std::size_t i = 0; i < g.atoms_.size(); ++i) {
      Atom& at = g.atoms_[i];
      auto h = default_hydrogens(at.element, at.charge, g.bond_order_sum(static_cast<int>(i)));
      if (!h) {
        throw ValenceError("atom " + std::to_string(i) + " (" + std::string(symbol(at.element)) +
                           ") exceeds its maximum valence");
      }
      at.implicit_h = *h;
    }
    g.check_valence();
    return g;
  }

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }
  const Bond& bond(int i) const { return bonds_[static_cast<std::size_t>(i)]; }
  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }

  std::span<const Neighbor> neighbors(int i) const { return adjacency_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(adjacency_[static_cast<std::size_t>(i)].size()); }

  int bond_order_sum(int i) const {
    int s = 0;
    for (const Neighbor& n : neighbors(i)) s += bonds_[static_cast<std::size_t>(n.bond)].order;
    return s;
  }

  std::optional<int> bond_between(int i, int j) const {
    for (const Neighbor& n : neighbors(i)) {
      if (n.atom == j) return n.bond;
    }
    return std::nullopt;
  }

  bool is_connected() const {
    if (atoms_.empty()) return true;
    std::vector<char> seen(atoms_.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      for (const Neighbor& n : neighbors(a)) {
        if (!seen[static_cast<std::size_t>(n.atom)]) {
          seen[static_cast<std::size_t>(n.atom)] = 1;
          ++count;
          stack.push_back(n.atom);
        }
      }
    }
    return count == atoms_.size();
  }

  /// Relabels atoms: atom i of this graph becomes atom new_index[i].
  MolGraph permuted(std::span<const int> new_index) const {
    std::vector<Atom> atoms(atoms_.size());
    for (std::size_t i = 0; i < atoms_.size(); ++i) atoms[static_cast<std::size_t>(new_index[i])] = atoms_[i];
    std::vector<Bond> bonds;
    bonds.reserve(bonds_.size());
    for (const Bond& b : bonds_) {
      bonds.push_back({new_index[static_cast<std::size_t>(b.a)], new_index[static_cast<std::size_t>(b.b)], b.order});
    }
    return MolGraph(std::move(atoms), std::move(bonds));
  }

  /// Subgraph induced by `keep` (in that order); hydrogens are refilled to the
  /// default count so the cut bonds become hydrogens.
  MolGraph induced_subgraph(std::span<const int> keep) const {
    std::vector<int> map(atoms_.size(), -1);
    std::vector<Atom> atoms;
    atoms.reserve(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
      map[static_cast<std::size_t>(keep[k])] = static_cast<int>(k);
      atoms.push_back(atoms_[static_cast<std::size_t>(keep[k])]);
    }
    std::vector<Bond> bonds;
    for (const Bond& b : bonds_) {
      int x = map[static_cast<std::size_t>(b.a)];
      int y = map[static_cast<std::size_t>(b.b)];
      if (x >= 0 && y >= 0) bonds.push_back({x, y, b.order});
    }
    return with_default_hydrogens(std::move(atoms), std::move(bonds));
  }

 private:
  void build_adjacency() {
    const int n = static_cast<int>(atoms_.size());
    adjacency_.assign(atoms_.size(), {});
    for (std::size_t i = 0; i < bonds_.size(); ++i) {
      const Bond& b = bonds_[i];
      if (b.a < 0 || b.b < 0 || b.a >= n || b.b >= n) throw ValenceError("bond endpoint out of range");
      if (b.a == b.b) throw ValenceError("self bond on atom " + std::to_string(b.a));
      if (b.order < 1 || b.order > 3) throw ValenceError("bond order must be 1, 2 or 3");
      adjacency_[static_cast<std::size_t>(b.a)].push_back({b.b, static_cast<int>(i)});
      adjacency_[static_cast<std::size_t>(b.b)].push_back({b.a, static_cast<int>(i)});
    }
    for (auto& list : adjacency_) {
      std::sort(list.begin(), list.end(), [](const Neighbor& x, const Neighbor& y) { return x.atom < y.atom; });
      for (std::size_t k = 1; k < list.size(); ++k) {
        if (list[k].atom == list[k - 1].atom) throw ValenceError("parallel bonds between the same atoms");
      }
    }
  }

  void check_valence() const {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const Atom& at = atoms_[i];
      if (!is_valence_valid(at.element, at.charge, bond_order_sum(static_cast<int>(i)), at.implicit_h)) {
        throw ValenceError("valence violation at atom " + std::to_string(i) + " (" +
                           std::string(symbol(at.element)) + ")");
      }
    }
  }

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Heavy-atom graph distances from `source` (-1 for unreachable).
inline std::vector<int> bfs_distances(const MolGraph& g, int source) {
  std::vector<int> dist(g.atom_count(), -1);
  std::vector<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int a = queue[head];
    for (const Neighbor& n : g.neighbors(a)) {
      if (dist[static_cast<std::size_t>(n.atom)] < 0) {
        dist[static_cast<std::size_t>(n.atom)] = dist[static_cast<std::size_t>(a)] + 1;
        queue.push_back(n.atom);
      }
    }
  }
  return dist;
}

}  // namespace janus
