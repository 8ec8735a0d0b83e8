#pragma once

// Genetic operators on token strings: random edits over several SMILES
// reorderings, crossover along substitution paths, circular fragments.

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "janus/canon.hpp"
#include "janus/error.hpp"
#include "janus/fingerprint.hpp"
#include "janus/molgraph.hpp"
#include "janus/random.hpp"
#include "janus/selfies.hpp"
#include "janus/smiles.hpp"

namespace janus {

inline constexpr std::size_t kDefaultSmilesCharLimit = 81;

struct Child {
  MolGraph mol;
  CanonicalKey key;
  double score = 0.0;  // joint similarity for crossover children
};

/// Token sub-sequences with multiplicities.  Ordered so that iteration (and
/// therefore weighted sampling) is deterministic.
class FragmentSet {
 public:
  void add(const SelfiesString& s, std::size_t count = 1) {
    if (count == 0) return;
    counts_[s] += count;
    total_ += count;
  }

  bool empty() const { return counts_.empty(); }
  std::size_t size() const { return counts_.size(); }
  std::size_t total() const { return total_; }
  const std::map<SelfiesString, std::size_t>& counts() const { return counts_; }

  std::size_t count(const SelfiesString& s) const {
    auto it = counts_.find(s);
    return it == counts_.end() ? 0 : it->second;
  }

  /// Multiplicity-weighted draw.
  const SelfiesString& sample(Rng& rng) const {
    if (empty()) throw PreconditionError("cannot sample from an empty fragment set");
    std::size_t r = uniform_index(rng, total_);
    for (const auto& [s, c] : counts_) {
      if (r < c) return s;
      r -= c;
    }
    return counts_.rbegin()->first;
  }

  void write(std::ostream& out) const {
    for (const auto& [s, c] : counts_) out << s.text() << '\t' << c << '\n';
  }

  static FragmentSet read(std::istream& in) {
    FragmentSet fs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError("fragment line " + std::to_string(lineno) + ": missing count");
      std::size_t count = 0;
      try {
        std::size_t used = 0;
        long long v = std::stoll(line.substr(tab + 1), &used);
        if (v < 1 || tab + 1 + used != line.size()) throw ParseError("");
        count = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        throw ParseError("fragment line " + std::to_string(lineno) + ": bad count");
      }
      SelfiesString s = parse_selfies(line.substr(0, tab));
      if (s.empty()) throw ParseError("fragment line " + std::to_string(lineno) + ": empty fragment");
      fs.add(s, count);
    }
    return fs;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    write(out);
  }

  static FragmentSet load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return read(in);
  }

 private:
  std::map<SelfiesString, std::size_t> counts_;
  std::size_t total_ = 0;
};

enum class EditKind { Delete, Add, Replace };

struct Edit {
  EditKind kind = EditKind::Replace;
  std::size_t position = 0;
  std::vector<Token> tokens;  // inserted (Add) or the single replacement (Replace)
};

struct MutationConfig {
  int num_reorderings = 10;
  int edits_per_string = 1;
  std::array<double, 3> edit_kind_weights = {1.0, 1.0, 1.0};  // delete, add, replace
  const FragmentSet* fragments = nullptr;
  double fragment_bias = 0.0;
  std::size_t max_smiles_chars = kDefaultSmilesCharLimit;  // 0 disables the limit

  void validate() const {
    if (num_reorderings < 1) throw PreconditionError("num_reorderings must be >= 1");
    if (edits_per_string < 1) throw PreconditionError("edits_per_string must be >= 1");
    double sum = 0.0;
    for (double w : edit_kind_weights) {
      if (!(w >= 0.0)) throw PreconditionError("edit kind weights must be non-negative");
      sum += w;
    }
    if (sum <= 0.0) throw PreconditionError("edit kind weights must not all be zero");
    if (!(fragment_bias >= 0.0 && fragment_bias <= 1.0)) throw PreconditionError("fragment_bias must be in [0,1]");
  }
};

struct PathConfig {
  int num_paths = 5;
  int max_intermediates_kept = 10;
  std::size_t max_smiles_chars = kDefaultSmilesCharLimit;

  void validate() const {
    if (num_paths < 1) throw PreconditionError("num_paths must be >= 1");
    if (max_intermediates_kept < 1) throw PreconditionError("max_intermediates_kept must be >= 1");
  }
};

inline SelfiesString apply_edit(SelfiesString s, const Edit& e) {
  auto& t = s.tokens;
  switch (e.kind) {
    case EditKind::Delete:
      if (e.position < t.size()) t.erase(t.begin() + static_cast<std::ptrdiff_t>(e.position));
      break;
    case EditKind::Add:
      t.insert(t.begin() + static_cast<std::ptrdiff_t>(std::min(e.position, t.size())), e.tokens.begin(),
               e.tokens.end());
      break;
    case EditKind::Replace:
      if (e.position < t.size() && !e.tokens.empty()) t[e.position] = e.tokens.front();
      break;
  }
  return s;
}

/// Draws one edit.  The fragment coin is only thrown for additions when a
/// bias is configured and fragments exist, so a zero bias consumes exactly
/// the same random numbers as having no fragments at all.
inline Edit random_edit(const SelfiesString& s, const MutationConfig& cfg, const Alphabet& alphabet, Rng& rng) {
  const auto& w = cfg.edit_kind_weights;
  double r = uniform_real(rng) * (w[0] + w[1] + w[2]);
  Edit e;
  e.kind = r < w[0] ? EditKind::Delete : r < w[0] + w[1] ? EditKind::Add : EditKind::Replace;
  if (e.kind == EditKind::Delete && w[0] <= 0.0) e.kind = w[1] > 0.0 ? EditKind::Add : EditKind::Replace;
  if (s.empty() && e.kind != EditKind::Add) e.kind = EditKind::Add;
  auto random_token = [&]() { return alphabet.token_at(1 + uniform_index(rng, alphabet.size() - 1)); };
  switch (e.kind) {
    case EditKind::Delete:
      e.position = uniform_index(rng, s.size());
      break;
    case EditKind::Add:
      e.position = uniform_index(rng, s.size() + 1);
      if (cfg.fragment_bias > 0.0 && cfg.fragments && !cfg.fragments->empty() && uniform_real(rng) < cfg.fragment_bias) {
        e.tokens = cfg.fragments->sample(rng).tokens;
      } else {
        e.tokens = {random_token()};
      }
      break;
    case EditKind::Replace:
      e.position = uniform_index(rng, s.size());
      e.tokens = {random_token()};
      break;
  }
  return e;
}

namespace detail {

class ChildCollector {
 public:
  ChildCollector(std::span<const CanonicalKey> excluded, std::size_t max_chars) : max_chars_(max_chars) {
    for (const auto& k : excluded) seen_.insert(k);
  }

  bool offer(MolGraph g, std::vector<Child>& out) {
    CanonicalKey key = canonical_key(g);
    if (max_chars_ > 0 && key.bytes.size() > max_chars_) return false;
    if (!seen_.insert(key).second) return false;
    out.push_back(Child{std::move(g), std::move(key), 0.0});
    return true;
  }

 private:
  std::size_t max_chars_;
  std::unordered_set<CanonicalKey, CanonicalKeyHash> seen_;
};

}  // namespace detail

/// One child per randomized SMILES rewrite of the parent, each carrying
/// `edits_per_string` random edits.  Children are distinct by key, differ
/// from the parent and respect the character limit.
inline std::vector<Child> mutate(const MolGraph& parent, const MutationConfig& cfg, const Alphabet& alphabet, Rng& rng) {
  cfg.validate();
  CanonicalKey parent_key = canonical_key(parent);
  detail::ChildCollector collector({&parent_key, 1}, cfg.max_smiles_chars);
  std::vector<Child> out;
  for (int r = 0; r < cfg.num_reorderings; ++r) {
    std::uint64_t order_seed = rng();
    MolGraph reordered = parse_smiles(write_smiles(parent, WriteOrder::random(order_seed)));
    SelfiesString s = encode(reordered, alphabet);
    for (int k = 0; k < cfg.edits_per_string; ++k) s = apply_edit(std::move(s), random_edit(s, cfg, alphabet, rng));
    collector.offer(decode(s, alphabet), out);
  }
  return out;
}

/// Joint similarity of a candidate to all parents: mean similarity minus
/// the spread (max - min).
inline double joint_similarity_of(std::span<const double> sims) {
  if (sims.empty()) throw PreconditionError("joint similarity needs at least one parent");
  double sum = 0.0, lo = sims[0], hi = sims[0];
  for (double s : sims) {
    sum += s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return sum / static_cast<double>(sims.size()) - (hi - lo);
}

inline double joint_similarity(const Fingerprint& candidate, std::span<const Fingerprint> parents) {
  std::vector<double> sims;
  sims.reserve(parents.size());
  for (const Fingerprint& p : parents) sims.push_back(tanimoto(candidate, p));
  return joint_similarity_of(sims);
}

/// Token strings of both parents in canonical atom order, the shorter one
/// padded at the end so they align position by position.
inline std::pair<SelfiesString, SelfiesString> aligned_encodings(const MolGraph& a, const MolGraph& b,
                                                                 const Alphabet& alphabet) {
  SelfiesString sa = encode(canonical_form(a), alphabet);
  SelfiesString sb = encode(canonical_form(b), alphabet);
  std::size_t len = std::max(sa.size(), sb.size());
  sa.tokens.resize(len, Token::pad());
  sb.tokens.resize(len, Token::pad());
  return {std::move(sa), std::move(sb)};
}

/// Intermediates along substitution paths from `a` to `b`, ranked by joint
/// similarity to both parents (ties by key) and truncated.  When the number
/// of differing positions d satisfies d! <= num_paths every ordering is
/// walked instead of sampling.
inline std::vector<Child> crossover(const MolGraph& a, const MolGraph& b, const PathConfig& cfg,
                                    const Alphabet& alphabet, Rng& rng) {
  cfg.validate();
  auto [sa, sb] = aligned_encodings(a, b, alphabet);
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa.tokens[i] != sb.tokens[i]) diff.push_back(i);
  }
  std::set<std::vector<Token>> strings;
  auto walk = [&](const std::vector<std::size_t>& order) {
    std::vector<Token> cur = sa.tokens;
    for (std::size_t p : order) {
      cur[p] = sb.tokens[p];
      strings.insert(cur);
    }
  };
  bool exhaustive = true;
  {
    std::size_t fact = 1;
    for (std::size_t k = 2; k <= diff.size(); ++k) {
      fact *= k;
      if (fact > static_cast<std::size_t>(cfg.num_paths)) {
        exhaustive = false;
        break;
      }
    }
  }
  if (exhaustive) {
    std::vector<std::size_t> order = diff;
    do {
      walk(order);
    } while (std::next_permutation(order.begin(), order.end()));
  } else {
    for (int p = 0; p < cfg.num_paths; ++p) {
      std::vector<std::size_t> order = diff;
      std::shuffle(order.begin(), order.end(), rng);
      walk(order);
    }
  }

  std::array<CanonicalKey, 2> parent_keys = {canonical_key(a), canonical_key(b)};
  std::array<Fingerprint, 2> parent_fps = {fingerprint(a), fingerprint(b)};
  detail::ChildCollector collector(parent_keys, cfg.max_smiles_chars);
  std::vector<Child> out;
  for (const auto& toks : strings) {
    if (collector.offer(decode(SelfiesString{toks}, alphabet), out)) {
      out.back().score = joint_similarity(fingerprint(out.back().mol), parent_fps);
    }
  }
  std::sort(out.begin(), out.end(), [](const Child& x, const Child& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.key < y.key;
  });
  if (out.size() > static_cast<std::size_t>(cfg.max_intermediates_kept)) {
    out.erase(out.begin() + cfg.max_intermediates_kept, out.end());
  }
  return out;
}

/// Atoms within `radius` bonds of `center`, ascending.
inline std::vector<int> circular_environment(const MolGraph& g, int center, int radius) {
  std::vector<int> dist = bfs_distances(g, center);
  std::vector<int> keep;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] >= 0 && dist[i] <= radius) keep.push_back(static_cast<int>(i));
  }
  return keep;
}

/// One fragment per atom: the circular environment of that atom as an
/// induced subgraph, encoded in canonical order.  Environments the grammar
/// cannot express are skipped.
inline FragmentSet extract_fragments(std::span<const MolGraph> dataset, const Alphabet& alphabet, int radius = 3) {
  if (dataset.empty()) throw PreconditionError("extract_fragments: empty dataset");
  if (radius < 0) throw PreconditionError("extract_fragments: negative radius");
  FragmentSet fs;
  for (const MolGraph& g : dataset) {
    for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
      std::vector<int> keep = circular_environment(g, a, radius);
      try {
        fs.add(encode(canonical_form(g.induced_subgraph(keep)), alphabet));
      } catch (const UnsupportedError&) {
      } catch (const ValenceError&) {
      }
    }
  }
  return fs;
}

}  // namespace janus
