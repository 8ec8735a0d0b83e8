#pragma once

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "janus/molgraph.hpp"

#ifndef JANUS_TEST_DATA_DIR
#define JANUS_TEST_DATA_DIR "tests/data"
#endif

namespace janus::testing {

inline std::vector<std::string> load_corpus(const std::string& name = "corpus.smi") {
  std::ifstream in(std::string(JANUS_TEST_DATA_DIR) + "/" + name);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

/// Random connected all-carbon single-bonded graph with degrees <= 4.
inline MolGraph random_carbon_graph(int atoms, int extra_bonds, std::mt19937_64& rng) {
  std::vector<Atom> as(static_cast<std::size_t>(atoms));
  std::vector<Bond> bonds;
  std::vector<int> deg(static_cast<std::size_t>(atoms), 0);
  auto has = [&](int x, int y) {
    for (const Bond& b : bonds) {
      if ((b.a == x && b.b == y) || (b.a == y && b.b == x)) return true;
    }
    return false;
  };
  for (int i = 1; i < atoms; ++i) {
    for (;;) {
      int j = std::uniform_int_distribution<int>(0, i - 1)(rng);
      if (deg[static_cast<std::size_t>(j)] < 4) {
        bonds.push_back({j, i, 1});
        ++deg[static_cast<std::size_t>(j)];
        ++deg[static_cast<std::size_t>(i)];
        break;
      }
    }
  }
  for (int t = 0; t < extra_bonds * 10 && extra_bonds > 0; ++t) {
    int x = std::uniform_int_distribution<int>(0, atoms - 1)(rng);
    int y = std::uniform_int_distribution<int>(0, atoms - 1)(rng);
    if (x == y || has(x, y) || deg[static_cast<std::size_t>(x)] >= 4 || deg[static_cast<std::size_t>(y)] >= 4) continue;
    bonds.push_back({x, y, 1});
    ++deg[static_cast<std::size_t>(x)];
    ++deg[static_cast<std::size_t>(y)];
    if (--extra_bonds == 0) break;
  }
  return MolGraph::with_default_hydrogens(std::move(as), std::move(bonds));
}

inline std::vector<int> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace janus::testing
