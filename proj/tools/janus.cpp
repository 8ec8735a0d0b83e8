// janus: command-line front end.  Exit codes: 0 ok, 1 runtime failure,
// 2 bad arguments or configuration.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "janus/harness.hpp"

namespace fs = std::filesystem;
using namespace janus;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> generations, population, threads;
  std::optional<std::string> pressure, out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--generations", generations, "number of generations");
    cmd->add_option("--population", population, "population size");
    cmd->add_option("--threads", threads, "worker threads for operators and evaluation");
    cmd->add_option("--pressure", pressure, "none | predictor | classifier");
    cmd->add_option("--out", out, "output directory");
  }

  void apply(RunConfig& rc) const {
    if (seed) rc.engine.seed = *seed;
    if (generations) rc.engine.generations = *generations;
    if (population) rc.engine.population_size = *population;
    if (threads) rc.engine.threads = *threads;
    if (out) rc.engine.output_dir = *out;
    if (pressure) {
      if (*pressure == "none" || *pressure == "random") {
        rc.engine.pressure = Pressure::Random;
      } else if (*pressure == "predictor") {
        rc.engine.pressure = Pressure::Predictor;
      } else if (*pressure == "classifier") {
        rc.engine.pressure = Pressure::Classifier;
      } else {
        throw ConfigError("--pressure must be none, predictor or classifier");
      }
    }
  }
};

RunConfig load(const std::string& path, const Overrides& o) {
  RunConfig rc = path.empty() ? RunConfig{} : load_run_config(path);
  if (path.empty()) rc.source = "<defaults>";
  o.apply(rc);
  validate(rc);
  return rc;
}

std::string require_out(const RunConfig& rc, const char* fallback) {
  return rc.engine.output_dir.empty() ? std::string(fallback) : rc.engine.output_dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JANUS dual-population genetic algorithm for molecular design"};
  app.require_subcommand(1);

  std::string config;
  Overrides ov;

  auto* run = app.add_subcommand("run", "run the genetic algorithm");
  run->add_option("--config", config, "config file");
  ov.attach(run);

  int repeats = 15;
  auto* bench = app.add_subcommand("bench-logp", "unconstrained penalized log P benchmark over several seeds");
  bench->add_option("--config", config, "config file");
  bench->add_option("--repeats", repeats, "independent runs")->check(CLI::PositiveNumber);
  ov.attach(bench);

  std::string molecules;
  double delta = 0.4;
  int max_gen = 10;
  auto* cons = app.add_subcommand("bench-constrained", "similarity-constrained improvement benchmark");
  cons->add_option("--config", config, "config file");
  cons->add_option("--molecules", molecules, "start molecules, one SMILES per line")->required();
  cons->add_option("--delta", delta, "similarity threshold")->check(CLI::Range(0.0, 1.0));
  cons->add_option("--max-generations", max_gen, "generation cap per molecule")->check(CLI::PositiveNumber);
  ov.attach(cons);

  std::string generated, refs;
  double threshold = 0.5;
  std::string metrics_out;
  auto* met = app.add_subcommand("metrics", "diversity, novelty and success rate of generated molecules");
  met->add_option("--generated", generated, "run directory or SMILES file (optional tab-separated score)")->required();
  met->add_option("--refs", refs, "reference SMILES for novelty");
  met->add_option("--threshold", threshold, "success threshold on the score");
  met->add_option("--out", metrics_out, "write the JSON report here as well");

  std::string corpus, norm_out;
  auto* norm = app.add_subcommand("normalize", "per-term normalization constants from a corpus");
  norm->add_option("--corpus", corpus, "SMILES corpus")->required();
  norm->add_option("--config", config, "config whose [fitness] section selects the term evaluators");
  norm->add_option("--out", norm_out, "output JSON file")->required();

  std::size_t budget = 0;
  std::string compare;
  auto* base = app.add_subcommand("baseline", "random-sampling baseline with a fixed evaluation budget");
  base->add_option("--config", config, "config file (fitness, seed, character limit)");
  base->add_option("--budget", budget, "distinct molecules to evaluate (default: those of --compare)");
  base->add_option("--compare", compare, "run directory to compare against");
  ov.attach(base);

  std::string frag_corpus, frag_out;
  int radius = 3;
  auto* frag = app.add_subcommand("fragments", "extract circular fragments from a corpus");
  frag->add_option("--corpus", frag_corpus, "SMILES corpus")->required();
  frag->add_option("--out", frag_out, "fragment file")->required();
  frag->add_option("--radius", radius, "environment radius")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      if (config.empty()) throw ConfigError("run needs --config");
      RunConfig rc = load(config, ov);
      if (rc.engine.output_dir.empty()) rc.engine.output_dir = "janus_run";
      RunResult r = run_once(rc);
      const Individual& b = r.best_individual();
      std::cout << "best " << format_number(r.best_fitness()) << " " << b.smiles << "\n"
                << "evaluations " << r.evaluations.size() << "\n"
                << "output " << rc.engine.output_dir << "\n";
    } else if (*bench) {
      RunConfig rc = load(config, ov);
      auto rep = bench_unconstrained(rc, repeats, require_out(rc, "bench_logp"));
      std::cout << rep.dump(2) << "\n";
    } else if (*cons) {
      RunConfig rc = load(config, ov);
      std::vector<MolGraph> starts;
      try {
        starts = read_molecules(molecules);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      auto rep = bench_constrained(rc, starts, delta, require_out(rc, "bench_constrained"), max_gen);
      nlohmann::json brief = rep;
      brief.erase("molecules");
      std::cout << brief.dump(2) << "\n";
    } else if (*met) {
      if (!fs::exists(generated)) throw ConfigError("not found: " + generated);
      if (!refs.empty() && !fs::exists(refs)) throw ConfigError("not found: " + refs);
      BulkMetrics m = bulk_metrics(generated, refs, threshold);
      nlohmann::json j{{"count", m.count}, {"diversity", m.diversity}};
      j["novelty"] = m.novelty ? nlohmann::json(*m.novelty) : nlohmann::json(nullptr);
      j["success_rate"] = m.success_rate ? nlohmann::json(*m.success_rate) : nlohmann::json(nullptr);
      j["success_threshold"] = threshold;
      if (!metrics_out.empty()) write_text(metrics_out, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
    } else if (*norm) {
      RunConfig rc = config.empty() ? RunConfig{} : load_run_config(config);
      if (!fs::exists(corpus)) throw ConfigError("not found: " + corpus);
      Corpus c = read_corpus(corpus);
      NormalizationResult res = compute_normalization(c, rc.fitness);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      write_text(norm_out, to_json(res.constants).dump(2) + "\n");
      std::cout << "wrote " << norm_out << " from " << res.used << " molecules\n";
    } else if (*base) {
      RunConfig rc = load(config, ov);
      std::vector<double> ga_curve;
      if (!compare.empty()) {
        ga_curve = best_so_far(read_evaluation_log((fs::path(compare) / "evaluations.tsv").string()));
        if (budget == 0) budget = ga_curve.size();
      }
      if (budget == 0) throw ConfigError("baseline needs --budget or --compare");
      auto fit = make_fitness(rc.fitness);
      BaselineResult b = random_baseline(budget, fit->get(), rc.engine.seed, rc.engine.max_smiles_chars,
                                         rc.engine.init.random_length, rc.engine.threads);
      std::string out = require_out(rc, "baseline");
      fs::create_directories(out);
      {
        std::ofstream f(fs::path(out) / "evaluations.tsv");
        f << "index\tsmiles\tfitness\tgeneration\terror\n";
        for (std::size_t i = 0; i < b.evaluations.size(); ++i) {
          f << i << '\t' << b.evaluations[i].smiles << '\t' << format_number(b.evaluations[i].fitness) << "\t0\t"
            << b.evaluations[i].error << '\n';
        }
      }
      write_text(fs::path(out) / "comparison.csv", comparison_csv(ga_curve, b.curve));
      std::cout << "baseline best " << format_number(b.best()) << " after " << b.evaluations.size() << " evaluations\n";
      if (!ga_curve.empty()) std::cout << "janus best " << format_number(ga_curve.back()) << "\n";
    } else if (*frag) {
      if (!fs::exists(frag_corpus)) throw ConfigError("not found: " + frag_corpus);
      std::vector<MolGraph> mols = read_molecules(frag_corpus);
      FragmentSet fs_out = extract_fragments(mols, default_alphabet(), radius);
      fs_out.save(frag_out);
      std::cout << "wrote " << fs_out.size() << " fragments (" << fs_out.total() << " occurrences) to " << frag_out << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
