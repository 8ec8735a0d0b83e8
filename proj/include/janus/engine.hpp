#pragma once

// The dual-population generational loop.
//
// Both populations start from the same molecules.  Each generation the
// exploration population breeds by mutation and crossover from Fermi-Dirac
// sampled parents and keeps children chosen by the selection pressure; the
// exploitation population mutates its elite and keeps the children closest
// to their own parent.  The two then trade their best members.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "janus/canon.hpp"
#include "janus/error.hpp"
#include "janus/fingerprint.hpp"
#include "janus/genops.hpp"
#include "janus/objective.hpp"
#include "janus/parallel.hpp"
#include "janus/random.hpp"
#include "janus/selfies.hpp"
#include "janus/smiles.hpp"
#include "janus/surrogate.hpp"

namespace janus {

struct Individual {
  MolGraph mol;  // canonical atom order
  SelfiesString selfies;
  std::string smiles;
  CanonicalKey key;
  Fingerprint fp;
  std::optional<double> fitness;
};

/// Throws UnsupportedError for graphs the grammar cannot express.
inline Individual make_individual(const MolGraph& g, const Alphabet& alphabet) {
  Individual ind;
  ind.mol = canonical_form(g);
  ind.key = canonical_key(ind.mol);
  ind.smiles = ind.key.bytes;
  ind.selfies = encode(ind.mol, alphabet);
  ind.fp = fingerprint(ind.mol);
  return ind;
}

/// Fitness descending, ties by key.  Unevaluated members sort last.
inline bool fitter(const Individual& a, const Individual& b) {
  double fa = a.fitness.value_or(-std::numeric_limits<double>::infinity());
  double fb = b.fitness.value_or(-std::numeric_limits<double>::infinity());
  if (fa != fb) return fa > fb;
  return a.key < b.key;
}

inline void sort_population(std::vector<Individual>& pop) { std::sort(pop.begin(), pop.end(), fitter); }

// ---------------------------------------------------------------------------
// Parent selection

struct SelectionConfig {
  int n_select = 0;            // 0: the number of replaced slots
  std::optional<double> f25;   // unset: fitness at rank min(2 n_select, N)

  void validate(std::size_t population_size) const {
    if (n_select < 0) throw PreconditionError("n_select must be >= 1");
    if (static_cast<std::size_t>(n_select) > population_size) {
      throw PreconditionError("n_select must not exceed the population size");
    }
    if (f25 && std::isnan(*f25)) throw PreconditionError("f25 must be a number");
  }
};

struct FermiDirac {
  double f50 = 0.0;
  double f25 = 0.0;
  bool uniform = false;        // degenerate parameters, sampling falls back to uniform
  std::vector<double> p;       // un-normalized relative frequencies
};

inline double fermi_dirac(double f, double f50, double f25) {
  return 1.0 / (std::pow(3.0, (f50 - f) / (f50 - f25)) + 1.0);
}

/// Relative frequencies for `fitnesses` (any order).  F50 is the n_select-th
/// best fitness.
inline FermiDirac fermi_dirac_frequencies(std::span<const double> fitnesses, std::size_t n_select,
                                          std::optional<double> f25 = std::nullopt) {
  if (fitnesses.empty()) throw PreconditionError("fermi_dirac_frequencies: empty input");
  if (n_select < 1 || n_select > fitnesses.size()) throw PreconditionError("n_select must be in [1, N]");
  std::vector<double> sorted(fitnesses.begin(), fitnesses.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  FermiDirac fd;
  fd.f50 = sorted[n_select - 1];
  if (f25) {
    fd.f25 = *f25;
  } else {
    // rank 2n among the finite values, so rejected molecules don't pin F25 at -inf
    std::size_t finite = static_cast<std::size_t>(
        std::count_if(sorted.begin(), sorted.end(), [](double x) { return std::isfinite(x); }));
    std::size_t rank = std::min(2 * n_select, finite);
    fd.f25 = rank == 0 ? fd.f50 : sorted[rank - 1];
  }
  fd.uniform = !std::isfinite(fd.f50) || !std::isfinite(fd.f25) || fd.f50 == fd.f25;
  fd.p.resize(fitnesses.size());
  for (std::size_t i = 0; i < fitnesses.size(); ++i) {
    fd.p[i] = fd.uniform ? 1.0 : fermi_dirac(fitnesses[i], fd.f50, fd.f25);
    if (std::isnan(fd.p[i])) fd.p[i] = 0.0;
  }
  return fd;
}

/// Indices drawn with replacement, probability proportional to the
/// frequencies (uniform in the degenerate case).
inline std::vector<std::size_t> sample_indices(const FermiDirac& fd, std::size_t count, Rng& rng) {
  std::vector<double> cum(fd.p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < fd.p.size(); ++i) {
    total += fd.p[i];
    cum[i] = total;
  }
  bool uniform = fd.uniform || !(total > 0.0);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    if (uniform) {
      out.push_back(uniform_index(rng, fd.p.size()));
      continue;
    }
    double u = uniform_real(rng) * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cum.begin());
    out.push_back(std::min(i, fd.p.size() - 1));
  }
  return out;
}

inline std::vector<std::size_t> sample_parents(std::span<const Individual> pop, std::size_t n_select,
                                               std::optional<double> f25, std::size_t count, Rng& rng) {
  std::vector<double> f;
  f.reserve(pop.size());
  for (const Individual& ind : pop) {
    if (!ind.fitness) throw PreconditionError("sample_parents: population has an unevaluated member");
    f.push_back(*ind.fitness);
  }
  return sample_indices(fermi_dirac_frequencies(f, n_select, f25), count, rng);
}

// ---------------------------------------------------------------------------
// Exchange

struct ExchangeResult {
  std::vector<std::string> to_exploit;  // keys copied explore -> exploit
  std::vector<std::string> to_explore;
};

/// Both populations must be sorted (fitter first).  The k best of each
/// pre-exchange snapshot replace the k worst of the other; members already
/// present are skipped in favour of the next best.
inline ExchangeResult exchange(std::vector<Individual>& explore, std::vector<Individual>& exploit, std::size_t k) {
  if (k > explore.size() || k > exploit.size()) throw PreconditionError("exchange size exceeds population size");
  ExchangeResult res;
  if (k == 0) return res;
  const std::vector<Individual> snap_explore = explore;
  const std::vector<Individual> snap_exploit = exploit;
  auto transfer = [k](const std::vector<Individual>& from, std::vector<Individual>& into,
                      std::vector<std::string>& log) {
    std::unordered_set<CanonicalKey, CanonicalKeyHash> present;
    for (const Individual& ind : into) present.insert(ind.key);
    std::vector<const Individual*> incoming;
    for (const Individual& ind : from) {
      if (incoming.size() == k) break;
      if (present.count(ind.key)) continue;
      incoming.push_back(&ind);
    }
    // overwrite from the worst end; the worst are never among the incoming keys
    std::size_t slot = into.size();
    for (const Individual* ind : incoming) {
      into[--slot] = *ind;
      log.push_back(ind->smiles);
    }
    sort_population(into);
  };
  transfer(snap_explore, exploit, res.to_exploit);
  transfer(snap_exploit, explore, res.to_explore);
  return res;
}

// ---------------------------------------------------------------------------
// Configuration and records

enum class Pressure { Random, Predictor, Classifier };
enum class InitFill { Random, Mutants, None };

inline const char* pressure_name(Pressure p) {
  switch (p) {
    case Pressure::Random: return "random";
    case Pressure::Predictor: return "predictor";
    case Pressure::Classifier: return "classifier";
  }
  return "?";
}

struct InitSpec {
  std::vector<MolGraph> seeds;
  InitFill fill = InitFill::Random;
  int random_length = 20;
};

struct EngineConfig {
  std::uint64_t seed = 0;
  int generations = 10;
  int population_size = 100;
  std::size_t max_smiles_chars = kDefaultSmilesCharLimit;  // 0: no limit
  double elite_fraction = 0.5;
  int exchange_k = -1;            // -1: 10% of the population
  int crossover_pairs = -1;       // -1: one pair per replaced slot
  int max_rounds = 5;             // operator retries before giving up
  int threads = 1;
  Pressure pressure = Pressure::Random;
  SelectionConfig selection;
  MutationConfig mutation;
  PathConfig crossover;
  TrainConfig surrogate;          // seed is overridden per generation
  InitSpec init;
  std::string output_dir;         // empty: nothing written

  std::size_t elite_count() const {
    auto e = static_cast<std::size_t>(std::llround(elite_fraction * population_size));
    return std::min(e, static_cast<std::size_t>(population_size));
  }
  std::size_t exchange_size() const {
    if (exchange_k >= 0) return static_cast<std::size_t>(exchange_k);
    return static_cast<std::size_t>(population_size) / 10;
  }

  void validate() const {
    if (population_size < 2) throw PreconditionError("population size must be >= 2");
    if (generations < 0) throw PreconditionError("generations must be >= 0");
    if (!(elite_fraction >= 0.0 && elite_fraction <= 1.0)) throw PreconditionError("elite_fraction must be in [0,1]");
    if (exchange_k > population_size) throw PreconditionError("exchange k exceeds the population size");
    if (max_rounds < 1) throw PreconditionError("max_rounds must be >= 1");
    if (threads < 1) throw PreconditionError("threads must be >= 1");
    if (init.random_length < 1) throw PreconditionError("random init length must be >= 1");
    selection.validate(static_cast<std::size_t>(population_size));
    mutation.validate();
    crossover.validate();
    if (pressure != Pressure::Random) {
      TrainConfig t = surrogate;
      t.mode = pressure == Pressure::Classifier ? SurrogateMode::Classifier : SurrogateMode::Predictor;
      t.validate();
    }
  }
};

struct PopulationStats {
  double best = 0.0, median = 0.0, q25 = 0.0, q75 = 0.0;
};

namespace detail {

// linear interpolation; an infinite lower neighbour is returned as is
inline double quantile_sorted(const std::vector<double>& v, double q) {
  double h = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= v.size() || !std::isfinite(v[lo])) return v[lo];
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

inline nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace detail

inline PopulationStats population_stats(std::span<const Individual> pop) {
  std::vector<double> f;
  for (const Individual& ind : pop) f.push_back(ind.fitness.value_or(kRejected));
  if (f.empty()) return {};
  std::sort(f.begin(), f.end());
  return {f.back(), detail::quantile_sorted(f, 0.5), detail::quantile_sorted(f, 0.25), detail::quantile_sorted(f, 0.75)};
}

struct GenerationRecord {
  int generation = 0;
  PopulationStats explore, exploit;
  std::size_t new_evaluations = 0;
  std::size_t total_evaluations = 0;
  std::size_t explore_overflow = 0;
  std::size_t exploit_overflow = 0;
  std::string surrogate;  // "", "trained" or the reason training was skipped
  ExchangeResult exchanged;

  double best() const { return std::max(explore.best, exploit.best); }

  nlohmann::json to_json() const {
    auto stats = [](const PopulationStats& s) {
      return nlohmann::json{{"best", detail::num(s.best)}, {"median", detail::num(s.median)},
                            {"q25", detail::num(s.q25)}, {"q75", detail::num(s.q75)}};
    };
    nlohmann::json j{{"generation", generation},
                     {"explore", stats(explore)},
                     {"exploit", stats(exploit)},
                     {"new_evaluations", new_evaluations},
                     {"total_evaluations", total_evaluations},
                     {"explore_overflow", explore_overflow},
                     {"exploit_overflow", exploit_overflow},
                     {"to_exploit", exchanged.to_exploit},
                     {"to_explore", exchanged.to_explore}};
    if (!surrogate.empty()) j["surrogate"] = surrogate;
    return j;
  }
};

struct EvaluationEntry {
  std::string smiles;
  double fitness = kRejected;
  int generation = 0;
  std::string error;
};

struct RunResult {
  std::vector<GenerationRecord> records;
  std::vector<Individual> explore, exploit;
  std::vector<EvaluationEntry> evaluations;  // in evaluation order
  std::optional<Mlp> model;                  // last trained surrogate

  double best_fitness() const { return records.empty() ? kRejected : records.back().best(); }
  const Individual& best_individual() const {
    const Individual& a = explore.front();
    const Individual& b = exploit.front();
    return fitter(b, a) ? b : a;
  }
};

/// Shortest round-trip text for a double; "-inf" for rejected values.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// Engine

class Engine {
 public:
  Engine(EngineConfig cfg, Objective& objective, Alphabet alphabet = default_alphabet())
      : cfg_(std::move(cfg)), objective_(objective), alphabet_(std::move(alphabet)) {
    cfg_.validate();
    cfg_.mutation.max_smiles_chars = cfg_.max_smiles_chars;
    cfg_.crossover.max_smiles_chars = cfg_.max_smiles_chars;
    for (const MolGraph& g : cfg_.init.seeds) {
      try {
        alphabet_.extend(encode(g, alphabet_).tokens);
      } catch (const UnsupportedError&) {
      }
    }
  }

  const Alphabet& alphabet() const { return alphabet_; }
  const EngineConfig& config() const { return cfg_; }

  RunResult run() {
    RunResult res;
    open_outputs();
    generation_ = 0;
    std::vector<Individual> pop = initial_population();
    std::size_t before = evaluations_.size();
    evaluate(pop);
    sort_population(pop);
    res.explore = pop;
    res.exploit = std::move(pop);

    GenerationRecord rec0;
    rec0.generation = 0;
    rec0.new_evaluations = evaluations_.size() - before;
    record(res, rec0);

    for (int gen = 1; gen <= cfg_.generations; ++gen) {
      generation_ = gen;
      before = evaluations_.size();
      GenerationRecord rec;
      rec.generation = gen;
      std::optional<Mlp> model;
      try {
        model = train_surrogate(rec.surrogate);
        if (model) res.model = model;
        res.explore = step_explore(res.explore, model ? &*model : nullptr, rec.explore_overflow);
        res.exploit = step_exploit(res.exploit, rec.exploit_overflow);
      } catch (const std::exception& e) {
        throw Error("generation " + std::to_string(gen) + ": " + e.what());
      }
      rec.exchanged = exchange(res.explore, res.exploit, cfg_.exchange_size());
      rec.new_evaluations = evaluations_.size() - before;
      record(res, rec);
    }
    res.evaluations = evaluations_;
    finish_outputs(res);
    return res;
  }

  /// One exploration step on a sorted, evaluated population.  `model` is
  /// the trained surrogate or null for random pressure.
  std::vector<Individual> step_explore(const std::vector<Individual>& pop, const Mlp* model, std::size_t& overflow_size) {
    const std::size_t n = pop.size();
    const std::size_t e = std::min(cfg_.elite_count(), n);
    const std::size_t r = n - e;
    overflow_size = 0;
    if (r == 0) return pop;
    std::size_t n_select = cfg_.selection.n_select > 0 ? static_cast<std::size_t>(cfg_.selection.n_select) : r;
    n_select = std::min(n_select, n);
    std::vector<double> f;
    for (const Individual& ind : pop) f.push_back(ind.fitness.value_or(kRejected));
    FermiDirac fd = fermi_dirac_frequencies(f, n_select, cfg_.selection.f25);
    const std::size_t pairs = cfg_.crossover_pairs >= 0 ? static_cast<std::size_t>(cfg_.crossover_pairs) : r;

    std::vector<CanonicalKey> excluded;
    for (const Individual& ind : pop) excluded.push_back(ind.key);
    detail::ChildCollector pool_keys(excluded, cfg_.max_smiles_chars);
    std::vector<Child> pool;
    for (int round = 0; round < cfg_.max_rounds && pool.size() < r; ++round) {
      Rng rng(seed_for({1, 0, static_cast<std::uint64_t>(round)}));
      std::vector<std::size_t> mut = sample_indices(fd, r, rng);
      std::vector<std::size_t> cross = sample_indices(fd, 2 * pairs, rng);
      std::vector<std::vector<Child>> mut_out(mut.size()), cross_out(pairs);
      parallel_for(mut.size() + pairs, cfg_.threads, [&](std::size_t i) {
        if (i < mut.size()) {
          Rng local(seed_for({1, 1, static_cast<std::uint64_t>(round), i}));
          mut_out[i] = mutate(pop[mut[i]].mol, cfg_.mutation, alphabet_, local);
          return;
        }
        std::size_t j = i - mut.size();
        const Individual& a = pop[cross[2 * j]];
        const Individual& b = pop[cross[2 * j + 1]];
        if (a.key == b.key) return;
        Rng local(seed_for({1, 2, static_cast<std::uint64_t>(round), j}));
        cross_out[j] = crossover(a.mol, b.mol, cfg_.crossover, alphabet_, local);
      });
      for (auto* batch : {&mut_out, &cross_out}) {
        for (auto& children : *batch) {
          for (Child& c : children) absorb(pool_keys, std::move(c), pool);
        }
      }
    }
    overflow_size = pool.size();
    if (pool.size() < r) {
      throw Error("exploration produced " + std::to_string(pool.size()) + " unique children for " +
                  std::to_string(r) + " open slots after " + std::to_string(cfg_.max_rounds) + " rounds");
    }

    std::vector<std::size_t> chosen;
    if (model) {
      std::vector<Fingerprint> fps;
      std::vector<CanonicalKey> keys;
      for (const Child& c : pool) {
        fps.push_back(fingerprint(c.mol));
        keys.push_back(c.key);
      }
      chosen = rank_overflow(*model, fps, keys, r);
    } else {
      std::vector<std::size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      Rng rng(seed_for({1, 3}));
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(r);
      chosen = std::move(idx);
    }
    last_overflow_ = pool;
    return refill(pop, e, pool, chosen);
  }

  /// One exploitation step: the elite are the parents, children are ranked
  /// by similarity to their own parent.
  std::vector<Individual> step_exploit(const std::vector<Individual>& pop, std::size_t& overflow_size) {
    const std::size_t n = pop.size();
    const std::size_t e = std::min(cfg_.elite_count(), n);
    const std::size_t r = n - e;
    overflow_size = 0;
    if (r == 0) return pop;
    const std::size_t parents = std::max<std::size_t>(e, 1);

    std::unordered_set<CanonicalKey, CanonicalKeyHash> in_pop;
    for (const Individual& ind : pop) in_pop.insert(ind.key);
    std::vector<Child> pool;  // score = similarity to parent
    std::unordered_map<CanonicalKey, std::size_t, CanonicalKeyHash> where;
    for (int round = 0; round < cfg_.max_rounds && pool.size() < r; ++round) {
      std::vector<std::vector<Child>> out(parents);
      parallel_for(parents, cfg_.threads, [&](std::size_t i) {
        Rng local(seed_for({2, 1, static_cast<std::uint64_t>(round), i}));
        out[i] = mutate(pop[i].mol, cfg_.mutation, alphabet_, local);
        for (Child& c : out[i]) c.score = tanimoto(fingerprint(c.mol), pop[i].fp);
      });
      for (auto& children : out) {
        for (Child& c : children) {
          if (in_pop.count(c.key)) continue;
          auto it = where.find(c.key);
          if (it != where.end()) {
            pool[it->second].score = std::max(pool[it->second].score, c.score);
            continue;
          }
          where.emplace(c.key, pool.size());
          pool.push_back(std::move(c));
        }
      }
    }
    overflow_size = pool.size();
    if (pool.size() < r) {
      throw Error("exploitation produced " + std::to_string(pool.size()) + " unique children for " +
                  std::to_string(r) + " open slots after " + std::to_string(cfg_.max_rounds) + " rounds");
    }
    std::vector<double> sims;
    std::vector<CanonicalKey> keys;
    for (const Child& c : pool) {
      sims.push_back(c.score);
      keys.push_back(c.key);
    }
    last_overflow_ = pool;
    return refill(pop, e, pool, rank_by_score(sims, keys, r));
  }

  /// Evaluates members without a fitness, consulting the cache first.
  void evaluate(std::vector<Individual>& members) {
    std::vector<std::size_t> todo;
    std::unordered_set<CanonicalKey, CanonicalKeyHash> queued;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i].fitness) continue;
      if (cache_.count(members[i].key) || !queued.insert(members[i].key).second) continue;
      todo.push_back(i);
    }
    if (!todo.empty()) {
      std::vector<Candidate> batch;
      for (std::size_t i : todo) batch.push_back({&members[i].mol, &members[i].smiles, &members[i].fp});
      std::vector<Evaluation> out = objective_.evaluate(batch, cfg_.threads);
      if (out.size() != batch.size()) throw Error("objective returned the wrong number of results");
      for (std::size_t k = 0; k < todo.size(); ++k) {
        const Individual& ind = members[todo[k]];
        double fit = out[k].error.empty() ? out[k].fitness : kRejected;
        if (std::isnan(fit)) fit = kRejected;
        cache_.emplace(ind.key, fit);
        archive_.add(ind.key, ind.fp, fit);
        evaluations_.push_back({ind.smiles, fit, generation_, out[k].error});
        log_evaluation(evaluations_.size() - 1);
      }
    }
    for (Individual& ind : members) {
      if (!ind.fitness) ind.fitness = cache_.at(ind.key);
    }
  }

  std::size_t evaluation_count() const { return cache_.size(); }
  /// Children offered to the most recent step (exploit: score = parent similarity).
  const std::vector<Child>& last_overflow() const { return last_overflow_; }
  const TrainingArchive& archive() const { return archive_; }

 private:
  std::uint64_t seed_for(std::initializer_list<std::uint64_t> path) const {
    std::vector<std::uint64_t> parts = {cfg_.seed, static_cast<std::uint64_t>(generation_)};
    parts.insert(parts.end(), path.begin(), path.end());
    std::uint64_t h = derive_seed({parts[0]});
    for (std::size_t i = 1; i < parts.size(); ++i) h = derive_seed({h, parts[i]});
    return h;
  }

  static void absorb(detail::ChildCollector& keys, Child c, std::vector<Child>& pool) {
    keys.offer(std::move(c.mol), pool);
  }

  std::vector<Individual> refill(const std::vector<Individual>& pop, std::size_t e, std::vector<Child>& pool,
                                 const std::vector<std::size_t>& chosen) {
    std::vector<Individual> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(e));
    std::vector<Individual> fresh(chosen.size());
    parallel_for(chosen.size(), cfg_.threads, [&](std::size_t i) {
      fresh[i] = make_individual(pool[chosen[i]].mol, alphabet_);
    });
    evaluate(fresh);
    for (Individual& ind : fresh) next.push_back(std::move(ind));
    sort_population(next);
    return next;
  }

  std::optional<Mlp> train_surrogate(std::string& note) {
    if (cfg_.pressure == Pressure::Random) return std::nullopt;
    if (archive_.size() < 2) {
      note = "skipped: fewer than two finite evaluations";
      return std::nullopt;
    }
    TrainConfig t = cfg_.surrogate;
    t.mode = cfg_.pressure == Pressure::Classifier ? SurrogateMode::Classifier : SurrogateMode::Predictor;
    t.seed = seed_for({3});
    try {
      TrainResult tr = train(archive_, t);
      note = "trained";
      return std::move(tr.model);
    } catch (const PreconditionError& e) {
      note = std::string("skipped: ") + e.what();
      return std::nullopt;
    }
  }

  std::vector<Individual> initial_population() {
    const auto n = static_cast<std::size_t>(cfg_.population_size);
    std::vector<Individual> pop;
    std::unordered_set<CanonicalKey, CanonicalKeyHash> seen;
    auto offer = [&](const MolGraph& g) {
      if (pop.size() >= n) return;
      Individual ind;
      try {
        ind = make_individual(g, alphabet_);
      } catch (const UnsupportedError&) {
        return;
      } catch (const ValenceError&) {
        return;
      }
      if (cfg_.max_smiles_chars > 0 && ind.smiles.size() > cfg_.max_smiles_chars) return;
      if (!seen.insert(ind.key).second) return;
      pop.push_back(std::move(ind));
    };
    for (const MolGraph& g : cfg_.init.seeds) offer(g);
    if (pop.size() < n) {
      if (cfg_.init.fill == InitFill::None) {
        throw PreconditionError("seed set has " + std::to_string(pop.size()) + " unique usable molecules, need " +
                                std::to_string(n) + " (random fill disabled)");
      }
      if (cfg_.init.fill == InitFill::Mutants && pop.empty()) {
        throw PreconditionError("mutant fill needs at least one usable seed molecule");
      }
      Rng rng(seed_for({0}));
      const std::size_t attempts = 1000 * n + 10000;
      std::size_t seeds = pop.size();
      for (std::size_t t = 0; t < attempts && pop.size() < n; ++t) {
        if (cfg_.init.fill == InitFill::Random) {
          offer(decode(random_tokens(static_cast<std::size_t>(cfg_.init.random_length), alphabet_, rng), alphabet_));
        } else {
          // mutants of the seeds, then of earlier mutants
          const Individual& parent = pop[t < 4 * seeds ? t % seeds : uniform_index(rng, pop.size())];
          MolGraph mol = parent.mol;
          for (Child& c : mutate(mol, cfg_.mutation, alphabet_, rng)) offer(c.mol);
        }
      }
      if (pop.size() < n) throw Error("could not build an initial population of " + std::to_string(n) + " molecules");
    }
    return pop;
  }

  // -- run directory -------------------------------------------------------

  void open_outputs() {
    if (cfg_.output_dir.empty()) return;
    std::filesystem::create_directories(cfg_.output_dir);
    auto open = [&](std::ofstream& f, const char* name) {
      f.open(std::filesystem::path(cfg_.output_dir) / name);
      if (!f) throw Error(std::string("cannot write ") + cfg_.output_dir + "/" + name);
    };
    open(records_out_, "records.jsonl");
    open(progress_out_, "progress.csv");
    open(evals_out_, "evaluations.tsv");
    progress_out_ << "generation,evaluations,best,median,q25,q75\n";
    evals_out_ << "index\tsmiles\tfitness\tgeneration\terror\n";
  }

  void log_evaluation(std::size_t i) {
    if (!evals_out_.is_open()) return;
    const EvaluationEntry& e = evaluations_[i];
    std::string err = e.error;
    std::replace(err.begin(), err.end(), '\t', ' ');
    std::replace(err.begin(), err.end(), '\n', ' ');
    evals_out_ << i << '\t' << e.smiles << '\t' << format_number(e.fitness) << '\t' << e.generation << '\t' << err
               << '\n';
  }

  void record(RunResult& res, GenerationRecord& rec) {
    rec.explore = population_stats(res.explore);
    rec.exploit = population_stats(res.exploit);
    rec.total_evaluations = evaluations_.size();
    res.records.push_back(rec);
    if (!records_out_.is_open()) return;
    records_out_ << rec.to_json().dump() << '\n';
    std::vector<Individual> both = res.explore;
    both.insert(both.end(), res.exploit.begin(), res.exploit.end());
    PopulationStats u = population_stats(both);
    progress_out_ << rec.generation << ',' << rec.total_evaluations << ',' << format_number(u.best) << ','
                  << format_number(u.median) << ',' << format_number(u.q25) << ',' << format_number(u.q75) << '\n';
    records_out_.flush();
    progress_out_.flush();
    evals_out_.flush();
  }

  void finish_outputs(const RunResult& res) {
    if (cfg_.output_dir.empty()) return;
    auto dump = [&](const std::vector<Individual>& pop, const char* name) {
      std::ofstream f(std::filesystem::path(cfg_.output_dir) / name);
      for (const Individual& ind : pop) f << ind.smiles << '\t' << format_number(ind.fitness.value_or(kRejected)) << '\n';
    };
    dump(res.explore, "final_explore.txt");
    dump(res.exploit, "final_exploit.txt");
    if (res.model) res.model->save((std::filesystem::path(cfg_.output_dir) / "model.bin").string());
    records_out_.close();
    progress_out_.close();
    evals_out_.close();
  }

  EngineConfig cfg_;
  Objective& objective_;
  Alphabet alphabet_;
  int generation_ = 0;
  std::unordered_map<CanonicalKey, double, CanonicalKeyHash> cache_;
  TrainingArchive archive_;
  std::vector<EvaluationEntry> evaluations_;
  std::vector<Child> last_overflow_;
  std::ofstream records_out_, progress_out_, evals_out_;
};

}  // namespace janus
