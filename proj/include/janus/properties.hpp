#pragma once

// Native property surrogates and the penalized log P objective.
//
// logp_estimate and sa_surrogate are cheap atom-contribution / complexity
// stand-ins.  They are not Crippen log P or the Ertl SA score; exact values
// need an external evaluator.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "janus/error.hpp"
#include "janus/fingerprint.hpp"
#include "janus/molgraph.hpp"
#include "janus/rings.hpp"

namespace janus {

/// Atom type used by the log P table: element plus hybridization for C, N
/// and O (e.g. "C_sp3", "N_sp2"), the bare symbol for other neutral
/// elements, and symbol+charge for charged atoms (e.g. "N+1", "O-1").
inline std::string logp_atom_type(const MolGraph& g, int a) {
  const Atom& at = g.atom(a);
  std::string sym(symbol(at.element));
  if (at.charge != 0) return sym + (at.charge > 0 ? "+" : "-") + std::to_string(std::abs(at.charge));
  int max_order = 0, doubles = 0;
  for (const Neighbor& nb : g.neighbors(a)) {
    int o = g.bond(nb.bond).order;
    max_order = std::max(max_order, o);
    doubles += o == 2;
  }
  switch (at.element) {
    case Element::C:
    case Element::N:
      if (max_order == 3 || doubles >= 2) return sym + "_sp";
      return sym + (max_order == 2 ? "_sp2" : "_sp3");
    case Element::O:
      return max_order == 2 ? "O_sp2" : "O_sp3";
    default:
      return sym;
  }
}

/// Per-type contributions.  Hydrogens count as "H" on carbon and
/// "H_polar" on any other element.
class LogpTable {
 public:
  LogpTable() = default;
  explicit LogpTable(std::map<std::string, double> values) : values_(std::move(values)) {}

  static LogpTable defaults() {
    std::map<std::string, double> v = {
        {"C_sp3", 0.13}, {"C_sp2", 0.18},  {"C_sp", 0.05},   {"N_sp3", -0.70}, {"N_sp2", -0.50},
        {"N_sp", -0.30}, {"O_sp3", -0.40}, {"O_sp2", -0.15}, {"S", 0.45},      {"P", 0.10},
        {"F", 0.40},     {"Cl", 0.65},     {"Br", 0.85},     {"I", 1.05},      {"B", -0.20},
        {"H", 0.12},     {"H_polar", -0.10},
    };
    for (Element e : kAllElements) {
      for (int q = kMinCharge; q <= kMaxCharge; ++q) {
        if (q == 0 || allowed_valences(e, q).empty()) continue;
        v[std::string(symbol(e)) + (q > 0 ? "+" : "-") + std::to_string(std::abs(q))] = -1.0 * std::abs(q);
      }
    }
    return LogpTable(std::move(v));
  }

  /// Whitespace-separated "type value" lines; '#' starts a comment.  Entries
  /// override the defaults.
  static LogpTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read log P table " + path);
    LogpTable t = defaults();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      std::string name;
      double value = 0.0;
      if (!(ss >> name)) continue;
      std::string extra;
      if (!(ss >> value) || (ss >> extra)) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected '<type> <value>'");
      }
      t.values_[name] = value;
    }
    return t;
  }

  void set(const std::string& type, double value) { values_[type] = value; }
  const std::map<std::string, double>& values() const { return values_; }

  double at(const std::string& type) const {
    auto it = values_.find(type);
    if (it == values_.end()) throw PreconditionError("log P table has no entry for atom type '" + type + "'");
    return it->second;
  }

 private:
  std::map<std::string, double> values_;
};

inline double logp_estimate(const MolGraph& g, const LogpTable& table) {
  double sum = 0.0;
  for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
    sum += table.at(logp_atom_type(g, a));
    int h = g.atom(a).implicit_h;
    if (h > 0) sum += h * table.at(g.atom(a).element == Element::C ? "H" : "H_polar");
  }
  return sum;
}

struct SaWeights {
  double odd_ring = 2.0;    // fraction of atoms in rings outside 5..6
  double branching = 1.5;   // mean max(0, degree - 2)
  double hetero = 1.0;      // fraction of non-carbon atoms
  double macrocycle = 1.0;  // rings larger than 6
};

inline double sa_surrogate(const MolGraph& g, const std::vector<Ring>& rings, const SaWeights& w = {}) {
  const std::size_t n = g.atom_count();
  if (n == 0) return 0.0;
  std::vector<char> odd(n, 0);
  int macro = 0;
  for (const Ring& r : rings) {
    if (r.size() < 5 || r.size() > 6) {
      for (int a : r) odd[static_cast<std::size_t>(a)] = 1;
    }
    macro += r.size() > 6;
  }
  double odd_frac = 0.0, excess = 0.0, hetero = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    odd_frac += odd[a];
    excess += std::max(0, g.degree(static_cast<int>(a)) - 2);
    hetero += g.atom(static_cast<int>(a)).element != Element::C;
  }
  const double dn = static_cast<double>(n);
  return w.odd_ring * odd_frac / dn + w.branching * excess / dn + w.hetero * hetero / dn + w.macrocycle * macro;
}

inline double sa_surrogate(const MolGraph& g, const SaWeights& w = {}) { return sa_surrogate(g, perceive_rings(g), w); }

enum class RingPenaltyMode { Max, Sum };

inline double ring_penalty(const std::vector<Ring>& rings, RingPenaltyMode mode = RingPenaltyMode::Max) {
  double out = 0.0;
  for (const Ring& r : rings) {
    double excess = std::max(0.0, static_cast<double>(r.size()) - 6.0);
    out = mode == RingPenaltyMode::Max ? std::max(out, excess) : out + excess;
  }
  return out;
}

inline double ring_penalty(const MolGraph& g, RingPenaltyMode mode = RingPenaltyMode::Max) {
  return ring_penalty(perceive_rings(g), mode);
}

struct TermStats {
  double mean = 0.0;
  double std = 1.0;
  double z(double x) const { return (x - mean) / std; }
};

/// Identity by default (mean 0, std 1), which makes j_normalized == j_raw.
struct NormalizationConstants {
  TermStats logp, sa, ring;

  void validate() const {
    for (const TermStats* t : {&logp, &sa, &ring}) {
      if (!(t->std > 0.0) || !std::isfinite(t->std) || !std::isfinite(t->mean)) {
        throw PreconditionError("normalization constants need finite means and positive standard deviations");
      }
    }
  }
};

struct FitnessReport {
  double logp = 0.0;
  double sa = 0.0;
  double ring_penalty = 0.0;
  double j_raw = 0.0;
  double j_normalized = 0.0;
};

inline FitnessReport compose_fitness(double logp, double sa, double ring, const NormalizationConstants& c) {
  FitnessReport r;
  r.logp = logp;
  r.sa = sa;
  r.ring_penalty = ring;
  r.j_raw = logp - sa - ring;
  r.j_normalized = c.logp.z(logp) - c.sa.z(sa) - c.ring.z(ring);
  return r;
}

struct NativeTerms {
  LogpTable logp_table = LogpTable::defaults();
  SaWeights sa_weights;
  RingPenaltyMode ring_mode = RingPenaltyMode::Max;
};

inline FitnessReport penalized_logp(const MolGraph& g, const NormalizationConstants& c, const NativeTerms& terms = {}) {
  std::vector<Ring> rings = perceive_rings(g);
  return compose_fitness(logp_estimate(g, terms.logp_table), sa_surrogate(g, rings, terms.sa_weights),
                         ring_penalty(rings, terms.ring_mode), c);
}

inline constexpr double kRejected = -std::numeric_limits<double>::infinity();

/// `base` if the molecule is at least `delta` similar to the reference,
/// otherwise the rejection sentinel (-inf).
inline double constrained_fitness(const Fingerprint& mol, const Fingerprint& reference, double delta, double base) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw PreconditionError("delta must be in [0,1]");
  return tanimoto(mol, reference) >= delta ? base : kRejected;
}

}  // namespace janus
