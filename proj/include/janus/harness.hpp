#pragma once

// Benchmark drivers and corpus tools behind the command-line interface.
// Every report is written next to the per-run logs it was computed from.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "janus/config.hpp"
#include "janus/engine.hpp"
#include "janus/evaluator.hpp"
#include "janus/genops.hpp"
#include "janus/metrics.hpp"
#include "janus/objective.hpp"
#include "janus/properties.hpp"

namespace janus {

// ---------------------------------------------------------------------------
// Fitness construction

/// Owns the objective and any evaluator processes behind it.
struct Fitness {
  std::unique_ptr<ExternalEvaluator> whole, logp, sa;
  std::unique_ptr<Objective> objective;
  Objective& get() { return *objective; }
};

inline NativeTerms native_terms(const FitnessSpec& f) {
  NativeTerms t;
  if (!f.logp_table_file.empty()) t.logp_table = LogpTable::load(f.logp_table_file);
  t.sa_weights = f.sa_weights;
  t.ring_mode = f.ring_mode;
  return t;
}

inline std::unique_ptr<Fitness> make_fitness(const FitnessSpec& f) {
  auto out = std::make_unique<Fitness>();
  if (f.kind == FitnessKind::External) {
    out->whole = std::make_unique<ExternalEvaluator>(f.evaluator);
    out->objective = std::make_unique<ExternalObjective>(*out->whole);
    return out;
  }
  auto term_source = [&](const std::string& cmd) -> std::unique_ptr<ExternalEvaluator> {
    if (cmd.empty()) return nullptr;
    EvaluatorSpec s = f.evaluator;
    s.command = cmd;
    return std::make_unique<ExternalEvaluator>(s);
  };
  out->logp = term_source(f.logp_command);
  out->sa = term_source(f.sa_command);
  NormalizationConstants c;
  if (!f.normalization_file.empty()) c = load_normalization(f.normalization_file);
  out->objective = std::make_unique<PenalizedLogpObjective>(native_terms(f), c, f.scale, out->logp.get(), out->sa.get());
  return out;
}

// ---------------------------------------------------------------------------
// Corpus files

struct CorpusEntry {
  int line = 0;
  std::string smiles;
  std::optional<double> value;  // optional tab-separated second column
};

struct Corpus {
  std::vector<CorpusEntry> entries;
  std::vector<MolGraph> mols;        // parallel to entries
  std::vector<std::string> problems; // "line N: reason"
  std::size_t lines = 0;
};

/// One SMILES per line, optional tab-separated number.  Blank lines and
/// lines starting with '#' are skipped.
inline Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  Corpus c;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '#') continue;
    ++c.lines;
    CorpusEntry e;
    e.line = line;
    auto tab = raw.find('\t');
    e.smiles = raw.substr(0, tab);
    try {
      if (tab != std::string::npos) {
        std::string v = raw.substr(tab + 1);
        auto tab2 = v.find('\t');
        if (tab2 != std::string::npos) v = v.substr(0, tab2);
        if (v == "-inf") {
          e.value = kRejected;
        } else {
          std::size_t used = 0;
          e.value = std::stod(v, &used);
          if (used != v.size()) throw ParseError("bad number '" + v + "'");
        }
      }
      c.mols.push_back(parse_smiles(e.smiles));
      c.entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      c.problems.push_back("line " + std::to_string(line) + ": " + ex.what());
    }
  }
  return c;
}

inline std::vector<MolGraph> read_molecules(const std::string& path) {
  Corpus c = read_corpus(path);
  if (!c.problems.empty()) throw ParseError(path + ": " + c.problems.front());
  return std::move(c.mols);
}

// ---------------------------------------------------------------------------
// Statistics

struct Summary {
  double mean = 0.0;
  double std = 0.0;       // sample standard deviation
  bool std_defined = true;
  double max = 0.0;
  double min = 0.0;
};

inline Summary summarize(std::span<const double> xs) {
  if (xs.empty()) throw PreconditionError("summary of an empty list");
  Summary s;
  s.max = *std::max_element(xs.begin(), xs.end());
  s.min = *std::min_element(xs.begin(), xs.end());
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) {
    s.std_defined = false;
    return s;
  }
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size() - 1));
  return s;
}

inline nlohmann::json to_json(const Summary& s) {
  nlohmann::json j{{"mean", detail::num(s.mean)}, {"std", detail::num(s.std)}, {"min", detail::num(s.min)},
                   {"max", detail::num(s.max)}};
  if (!s.std_defined) j["std_undefined"] = true;
  return j;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw PreconditionError("median of an empty list");
  std::sort(v.begin(), v.end());
  return detail::quantile_sorted(v, 0.5);
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
}

/// Best fitness seen after each evaluation (the shared budget unit).
inline std::vector<double> best_so_far(std::span<const EvaluationEntry> log) {
  std::vector<double> out;
  double best = kRejected;
  for (const EvaluationEntry& e : log) {
    best = std::max(best, e.fitness);
    out.push_back(best);
  }
  return out;
}

inline std::vector<EvaluationEntry> read_evaluation_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<EvaluationEntry> out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, '\t')) cols.push_back(c);
    if (cols.size() < 4) throw ParseError(path + ": short row");
    EvaluationEntry e;
    e.smiles = cols[1];
    e.fitness = cols[2] == "-inf" ? kRejected : std::stod(cols[2]);
    e.generation = std::stoi(cols[3]);
    if (cols.size() > 4) e.error = cols[4];
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Single runs

/// Resolves files named in the config into the engine config.
inline EngineConfig prepare_engine(const RunConfig& rc, std::unique_ptr<FragmentSet>& fragments) {
  validate(rc);
  EngineConfig e = rc.engine;
  if (!rc.init_file.empty()) e.init.seeds = read_molecules(rc.init_file);
  if (!rc.fragments_file.empty()) {
    fragments = std::make_unique<FragmentSet>(FragmentSet::load(rc.fragments_file));
    e.mutation.fragments = fragments.get();
  }
  return e;
}

inline RunResult run_once(const RunConfig& rc, Objective& objective) {
  std::unique_ptr<FragmentSet> fragments;
  EngineConfig e = prepare_engine(rc, fragments);
  if (!e.output_dir.empty()) {
    std::filesystem::create_directories(e.output_dir);
    write_text(std::filesystem::path(e.output_dir) / "config.toml", config_snapshot(rc));
  }
  return Engine(e, objective).run();
}

inline RunResult run_once(const RunConfig& rc) {
  validate(rc);
  auto fit = make_fitness(rc.fitness);
  return run_once(rc, fit->get());
}

// ---------------------------------------------------------------------------
// Unconstrained benchmark

/// `repeats` runs with seeds seed, seed+1, ...; each in out_dir/run_<i>.
inline nlohmann::json bench_unconstrained(const RunConfig& base, int repeats, const std::string& out_dir) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  validate(base);
  std::filesystem::create_directories(out_dir);
  auto fit = make_fitness(base.fitness);
  std::vector<double> bests;
  nlohmann::json runs = nlohmann::json::array();
  std::string single_best;
  double single = kRejected;
  for (int i = 0; i < repeats; ++i) {
    RunConfig rc = base;
    rc.engine.seed = base.engine.seed + static_cast<std::uint64_t>(i);
    rc.engine.output_dir = (std::filesystem::path(out_dir) / ("run_" + std::to_string(i))).string();
    auto t0 = std::chrono::steady_clock::now();
    RunResult r = run_once(rc, fit->get());
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Individual& b = r.best_individual();
    bests.push_back(r.best_fitness());
    if (r.best_fitness() > single) {
      single = r.best_fitness();
      single_best = b.smiles;
    }
    runs.push_back({{"seed", rc.engine.seed}, {"dir", rc.engine.output_dir}, {"best", detail::num(r.best_fitness())},
                    {"best_smiles", b.smiles}, {"evaluations", r.evaluations.size()}, {"wall_seconds", secs}});
  }
  nlohmann::json rep{{"benchmark", "unconstrained"},
                     {"objective", fit->get().describe()},
                     {"repeats", repeats},
                     {"best", to_json(summarize(bests))},
                     {"single_best", detail::num(single)},
                     {"single_best_smiles", single_best},
                     {"runs", runs}};
  write_text(std::filesystem::path(out_dir) / "report.json", rep.dump(2) + "\n");
  return rep;
}

// ---------------------------------------------------------------------------
// Constrained benchmark

/// For each start molecule: a short run seeded with the molecule and its
/// mutants, scoring molecules less than `delta` similar to it as rejected.
inline nlohmann::json bench_constrained(const RunConfig& base, const std::vector<MolGraph>& starts, double delta,
                                        const std::string& out_dir, int max_generations = 10) {
  validate(base);
  if (starts.empty()) throw PreconditionError("no start molecules");
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must be in [0,1]");
  std::filesystem::create_directories(out_dir);
  auto fit = make_fitness(base.fitness);
  std::vector<double> improvements;
  std::size_t successes = 0;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Individual start = make_individual(starts[i], default_alphabet());
    Candidate cand{&start.mol, &start.smiles, &start.fp};
    Evaluation e0 = fit->get().evaluate({&cand, 1}, base.engine.threads).front();
    if (!e0.error.empty()) throw Error("start molecule " + start.smiles + ": " + e0.error);
    ConstrainedObjective obj(fit->get(), start.fp, delta);
    RunConfig rc = base;
    rc.init_file.clear();
    rc.engine.generations = std::min(rc.engine.generations, max_generations);
    rc.engine.init.seeds = {start.mol};
    rc.engine.init.fill = InitFill::Mutants;
    rc.engine.seed = derive_seed({base.engine.seed, i});
    rc.engine.output_dir = (std::filesystem::path(out_dir) / ("mol_" + std::to_string(i))).string();
    RunResult r = run_once(rc, obj);
    const Individual& b = r.best_individual();
    double improvement = r.best_fitness() - e0.fitness;
    bool ok = improvement > 0.0;
    successes += ok;
    improvements.push_back(improvement);
    rows.push_back({{"start", start.smiles}, {"start_fitness", e0.fitness}, {"best", b.smiles},
                    {"best_fitness", detail::num(r.best_fitness())}, {"improvement", detail::num(improvement)},
                    {"similarity", tanimoto(b.fp, start.fp)}, {"success", ok}, {"dir", rc.engine.output_dir}});
  }
  nlohmann::json rep{{"benchmark", "constrained"},
                     {"delta", delta},
                     {"generations", std::min(base.engine.generations, max_generations)},
                     {"improvement", to_json(summarize(improvements))},
                     {"success_rate", static_cast<double>(successes) / static_cast<double>(starts.size())},
                     {"molecules", rows}};
  write_text(std::filesystem::path(out_dir) / "report.json", rep.dump(2) + "\n");
  return rep;
}

// ---------------------------------------------------------------------------
// Normalization constants

struct NormalizationResult {
  NormalizationConstants constants;
  std::size_t used = 0;
  std::vector<std::string> warnings;
};

/// Per-term mean and population standard deviation over a corpus.
inline NormalizationResult compute_normalization(const Corpus& corpus, const FitnessSpec& spec) {
  NormalizationResult res;
  res.warnings = corpus.problems;
  if (corpus.lines == 0) throw Error("corpus is empty");
  double parsed = static_cast<double>(corpus.mols.size()) / static_cast<double>(corpus.lines);
  if (parsed < 0.9) {
    throw Error("only " + std::to_string(corpus.mols.size()) + " of " + std::to_string(corpus.lines) +
                " corpus lines parse (need 90%)");
  }
  NativeTerms terms = native_terms(spec);
  std::unique_ptr<ExternalEvaluator> logp_src, sa_src;
  std::vector<EvalRequest> reqs;
  for (std::size_t i = 0; i < corpus.mols.size(); ++i) reqs.push_back({std::to_string(i), corpus.entries[i].smiles});
  std::vector<std::optional<double>> logp(corpus.mols.size()), sa(corpus.mols.size());
  auto external = [&](const std::string& cmd, std::vector<std::optional<double>>& dst, const char* term) {
    EvaluatorSpec s = spec.evaluator;
    s.command = cmd;
    ExternalEvaluator ev(s);
    auto out = ev.evaluate(reqs);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].ok()) {
        dst[i] = *out[i].score;
      } else {
        res.warnings.push_back("line " + std::to_string(corpus.entries[i].line) + ": " + term + " evaluator: " + out[i].error);
      }
    }
  };
  if (!spec.logp_command.empty()) external(spec.logp_command, logp, "logp");
  if (!spec.sa_command.empty()) external(spec.sa_command, sa, "sa");
  std::vector<double> L, S, R;
  for (std::size_t i = 0; i < corpus.mols.size(); ++i) {
    const MolGraph& g = corpus.mols[i];
    std::vector<Ring> rings = perceive_rings(g);
    try {
      double l = spec.logp_command.empty() ? logp_estimate(g, terms.logp_table) : logp[i].value();
      double s = spec.sa_command.empty() ? sa_surrogate(g, rings, terms.sa_weights) : sa[i].value();
      L.push_back(l);
      S.push_back(s);
      R.push_back(ring_penalty(rings, terms.ring_mode));
    } catch (const std::bad_optional_access&) {
    } catch (const std::exception& e) {
      res.warnings.push_back("line " + std::to_string(corpus.entries[i].line) + ": " + e.what());
    }
  }
  res.used = L.size();
  if (res.used < 100) {
    res.warnings.push_back("corpus has only " + std::to_string(res.used) + " usable molecules (100 or more recommended)");
  }
  if (res.used == 0) throw Error("no usable molecules in the corpus");
  auto stats = [](const std::vector<double>& v, const char* name) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    double sd = std::sqrt(var / static_cast<double>(v.size()));
    if (!(sd > 0.0)) throw Error(std::string(name) + " has zero spread over the corpus; cannot normalize");
    return TermStats{m, sd};
  };
  res.constants.logp = stats(L, "logp");
  res.constants.sa = stats(S, "sa");
  res.constants.ring = stats(R, "ring penalty");
  return res;
}

// ---------------------------------------------------------------------------
// Random baseline

struct BaselineResult {
  std::vector<EvaluationEntry> evaluations;
  std::vector<double> curve;  // best so far after each evaluation
  double best() const { return curve.empty() ? kRejected : curve.back(); }
};

/// Random token strings, decoded and evaluated until `budget` distinct
/// molecules have been scored.
inline BaselineResult random_baseline(std::size_t budget, Objective& objective, std::uint64_t seed,
                                      std::size_t max_smiles_chars = kDefaultSmilesCharLimit, int length = 20,
                                      int threads = 1) {
  if (budget < 1) throw PreconditionError("budget must be >= 1");
  Alphabet alphabet = default_alphabet();
  Rng rng(derive_seed({seed, 0x62617365}));
  std::unordered_set<CanonicalKey, CanonicalKeyHash> seen;
  std::vector<Individual> pending;
  BaselineResult res;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * budget + 10000;
  while (res.evaluations.size() < budget) {
    pending.clear();
    while (pending.size() < std::min<std::size_t>(256, budget - res.evaluations.size())) {
      if (++attempts > max_attempts) throw Error("random baseline could not find enough distinct molecules");
      Individual ind = make_individual(decode(random_tokens(static_cast<std::size_t>(length), alphabet, rng), alphabet), alphabet);
      if (max_smiles_chars > 0 && ind.smiles.size() > max_smiles_chars) continue;
      if (!seen.insert(ind.key).second) continue;
      pending.push_back(std::move(ind));
    }
    std::vector<Candidate> batch;
    for (const Individual& ind : pending) batch.push_back({&ind.mol, &ind.smiles, &ind.fp});
    auto out = objective.evaluate(batch, threads);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      double f = out[i].error.empty() && !std::isnan(out[i].fitness) ? out[i].fitness : kRejected;
      res.evaluations.push_back({pending[i].smiles, f, 0, out[i].error});
    }
  }
  res.curve = best_so_far(res.evaluations);
  return res;
}

/// Aligned best-so-far curves by evaluation count; the shorter curve is
/// left blank past its end.
inline std::string comparison_csv(std::span<const double> ga, std::span<const double> baseline) {
  std::ostringstream o;
  o << "evaluations,janus_best,baseline_best\n";
  for (std::size_t i = 0; i < std::max(ga.size(), baseline.size()); ++i) {
    o << i + 1 << ',' << (i < ga.size() ? format_number(ga[i]) : "") << ','
      << (i < baseline.size() ? format_number(baseline[i]) : "") << '\n';
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Bulk metrics

struct BulkMetrics {
  std::size_t count = 0;
  double diversity = 0.0;
  std::optional<double> novelty;       // needs references
  std::optional<double> success_rate;  // needs scores
};

/// Generated molecules come from a run directory (evaluations.tsv) or a
/// SMILES file with optional scores.
inline BulkMetrics bulk_metrics(const std::string& generated, const std::string& refs_file, double success_threshold) {
  std::vector<Fingerprint> fps;
  std::vector<double> scores;
  bool have_scores = true;
  if (std::filesystem::is_directory(generated)) {
    for (const EvaluationEntry& e : read_evaluation_log((std::filesystem::path(generated) / "evaluations.tsv").string())) {
      fps.push_back(fingerprint(parse_smiles(e.smiles)));
      scores.push_back(e.fitness);
    }
  } else {
    Corpus c = read_corpus(generated);
    if (!c.problems.empty()) throw ParseError(generated + ": " + c.problems.front());
    for (std::size_t i = 0; i < c.mols.size(); ++i) {
      fps.push_back(fingerprint(c.mols[i]));
      if (c.entries[i].value) {
        scores.push_back(*c.entries[i].value);
      } else {
        have_scores = false;
      }
    }
  }
  if (fps.size() < 2) throw PreconditionError("metrics need at least two generated molecules");
  BulkMetrics m;
  m.count = fps.size();
  m.diversity = diversity(fps);
  if (!refs_file.empty()) {
    std::vector<Fingerprint> refs;
    for (const MolGraph& g : read_molecules(refs_file)) refs.push_back(fingerprint(g));
    m.novelty = novelty(fps, refs);
  }
  if (have_scores) m.success_rate = success_rate(scores, success_threshold);
  return m;
}

}  // namespace janus
