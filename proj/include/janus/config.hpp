#pragma once

// Run configuration files.  A small TOML subset: [section] headers,
// `key = value` lines, # comments; values are integers, reals, booleans,
// "strings" and flat [arrays].  Every key must be known.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "janus/engine.hpp"
#include "janus/error.hpp"
#include "janus/evaluator.hpp"
#include "janus/properties.hpp"

namespace janus {

/// Bad or inconsistent configuration (the CLI maps this to exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ConfigValue {
  std::variant<bool, long long, double, std::string, std::vector<ConfigValue>> v;
  int line = 0;
};

using ConfigTable = std::map<std::string, std::map<std::string, ConfigValue>>;

namespace detail {

class TomlReader {
 public:
  TomlReader(std::string_view text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  ConfigTable read() {
    ConfigTable out;
    std::string section;
    std::istringstream in{std::string(text_)};
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      line_text_ = strip_comment(raw);
      pos_ = 0;
      skip_ws();
      if (pos_ == line_text_.size()) continue;
      if (line_text_[pos_] == '[') {
        ++pos_;
        section = bare_key();
        skip_ws();
        expect(']');
        skip_ws();
        if (pos_ != line_text_.size()) fail("unexpected text after section header");
        if (out.count(section)) fail("duplicate section [" + section + "]");
        out[section];
        continue;
      }
      std::string key = bare_key();
      skip_ws();
      expect('=');
      skip_ws();
      ConfigValue v = value();
      skip_ws();
      if (pos_ != line_text_.size()) fail("unexpected text after value");
      if (!out[section].emplace(key, std::move(v)).second) fail("duplicate key '" + key + "'");
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + msg);
  }

  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  void skip_ws() {
    while (pos_ < line_text_.size() && (line_text_[pos_] == ' ' || line_text_[pos_] == '\t' || line_text_[pos_] == '\r')) ++pos_;
  }

  void expect(char c) {
    if (pos_ >= line_text_.size() || line_text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string bare_key() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < line_text_.size() &&
           (std::isalnum(static_cast<unsigned char>(line_text_[pos_])) || line_text_[pos_] == '_' || line_text_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected a key");
    return line_text_.substr(start, pos_ - start);
  }

  ConfigValue value() {
    ConfigValue v;
    v.line = line_;
    if (pos_ >= line_text_.size()) fail("missing value");
    char c = line_text_[pos_];
    if (c == '"') {
      ++pos_;
      std::string s;
      while (pos_ < line_text_.size() && line_text_[pos_] != '"') {
        if (line_text_[pos_] == '\\' && pos_ + 1 < line_text_.size()) ++pos_;
        s += line_text_[pos_++];
      }
      expect('"');
      v.v = std::move(s);
      return v;
    }
    if (c == '[') {
      ++pos_;
      std::vector<ConfigValue> items;
      skip_ws();
      while (pos_ < line_text_.size() && line_text_[pos_] != ']') {
        items.push_back(value());
        skip_ws();
        if (pos_ < line_text_.size() && line_text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      expect(']');
      v.v = std::move(items);
      return v;
    }
    std::size_t start = pos_;
    while (pos_ < line_text_.size() && line_text_[pos_] != ',' && line_text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(line_text_[pos_]))) {
      ++pos_;
    }
    std::string tok = line_text_.substr(start, pos_ - start);
    if (tok == "true" || tok == "false") {
      v.v = tok == "true";
      return v;
    }
    if (tok == "inf" || tok == "+inf" || tok == "-inf") {
      v.v = tok[0] == '-' ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
      return v;
    }
    try {
      std::size_t used = 0;
      if (tok.find_first_of(".eE") == std::string::npos) {
        long long x = std::stoll(tok, &used);
        if (used == tok.size()) {
          v.v = x;
          return v;
        }
      } else {
        double x = std::stod(tok, &used);
        if (used == tok.size()) {
          v.v = x;
          return v;
        }
      }
    } catch (const std::exception&) {
    }
    fail("cannot read value '" + tok + "'");
  }

  std::string_view text_;
  std::string origin_;
  std::string line_text_;
  std::size_t pos_ = 0;
  int line_ = 0;
};

}  // namespace detail

inline ConfigTable parse_config_text(std::string_view text, const std::string& origin = "<config>") {
  return detail::TomlReader(text, origin).read();
}

// ---------------------------------------------------------------------------

enum class FitnessKind { Native, External };

struct FitnessSpec {
  FitnessKind kind = FitnessKind::Native;
  FitnessScale scale = FitnessScale::Raw;
  std::string normalization_file;  // JSON written by `janus normalize`
  std::string logp_table_file;
  RingPenaltyMode ring_mode = RingPenaltyMode::Max;
  SaWeights sa_weights;
  EvaluatorSpec evaluator;         // kind = external: the whole fitness
  std::string logp_command;        // native: optional external term sources
  std::string sa_command;
};

struct RunConfig {
  EngineConfig engine;
  FitnessSpec fitness;
  std::string init_file;           // seed molecules, one SMILES per line
  std::string fragments_file;
  std::string source;              // file the config came from, if any
};

namespace detail {

class SectionReader {
 public:
  SectionReader(std::map<std::string, ConfigValue>& kv, std::string section, std::string origin)
      : kv_(kv), section_(std::move(section)), origin_(std::move(origin)) {}

  ~SectionReader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : kv_) {
      if (!used_.count(k)) throw ConfigError(where(v) + "unknown key '" + k + "' in [" + section_ + "]");
    }
  }

  template <class T>
  void get(const std::string& key, T& out) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    used_.insert(key);
    out = convert<T>(it->second, key);
  }

  template <class T>
  void get_optional(const std::string& key, std::optional<T>& out) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    used_.insert(key);
    out = convert<T>(it->second, key);
  }

  template <class E>
  void get_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    std::string s;
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    get(key, s);
    for (const auto& [n, e] : names) {
      if (s == n) {
        out = e;
        return;
      }
    }
    std::string allowed;
    for (const auto& [n, e] : names) allowed += std::string(allowed.empty() ? "" : ", ") + n;
    throw ConfigError(where(it->second) + key + " must be one of: " + allowed);
  }

 private:
  std::string where(const ConfigValue& v) const { return origin_ + ":" + std::to_string(v.line) + ": "; }

  template <class T>
  T convert(const ConfigValue& v, const std::string& key) const {
    auto bad = [&](const char* want) -> ConfigError {
      return ConfigError(where(v) + "[" + section_ + "] " + key + " must be " + want);
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (auto* b = std::get_if<bool>(&v.v)) return *b;
      throw bad("a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (auto* i = std::get_if<long long>(&v.v)) {
        if (!std::in_range<T>(*i)) throw bad("in range");
        return static_cast<T>(*i);
      }
      throw bad("an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto* d = std::get_if<double>(&v.v)) return static_cast<T>(*d);
      if (auto* i = std::get_if<long long>(&v.v)) return static_cast<T>(*i);
      throw bad("a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto* s = std::get_if<std::string>(&v.v)) return *s;
      throw bad("a string");
    } else {
      // vectors of numbers
      auto* arr = std::get_if<std::vector<ConfigValue>>(&v.v);
      if (!arr) throw bad("an array");
      T out;
      for (const ConfigValue& item : *arr) out.push_back(convert<typename T::value_type>(item, key));
      return out;
    }
  }

  std::map<std::string, ConfigValue>& kv_;
  std::string section_;
  std::string origin_;
  std::set<std::string> used_;
};

}  // namespace detail

/// Builds a RunConfig from parsed tables; relative paths resolve against
/// `base_dir`.
inline RunConfig run_config_from(ConfigTable table, const std::string& origin = "<config>",
                                 const std::filesystem::path& base_dir = {}) {
  static const std::set<std::string> sections = {"run", "selection", "mutation", "crossover", "surrogate", "fitness", "output"};
  for (const auto& [name, kv] : table) {
    if (!sections.count(name)) {
      throw ConfigError(origin + ": unknown section [" + name + "]" + (name.empty() ? " (keys before any section)" : ""));
    }
  }
  RunConfig rc;
  rc.source = origin;
  EngineConfig& e = rc.engine;
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative() && !base_dir.empty()) p = (base_dir / p).string();
  };
  {
    detail::SectionReader r(table["run"], "run", origin);
    r.get("seed", e.seed);
    r.get("generations", e.generations);
    r.get("population_size", e.population_size);
    r.get("max_smiles_chars", e.max_smiles_chars);
    r.get("elite_fraction", e.elite_fraction);
    r.get("exchange_k", e.exchange_k);
    r.get("threads", e.threads);
    r.get("max_rounds", e.max_rounds);
    r.get("init_file", rc.init_file);
    r.get_enum("init_fill", e.init.fill, {{"random", InitFill::Random}, {"mutants", InitFill::Mutants}, {"none", InitFill::None}});
    r.get("random_length", e.init.random_length);
  }
  {
    detail::SectionReader r(table["selection"], "selection", origin);
    r.get("n_select", e.selection.n_select);
    r.get_optional("f25", e.selection.f25);
  }
  {
    detail::SectionReader r(table["mutation"], "mutation", origin);
    r.get("num_reorderings", e.mutation.num_reorderings);
    r.get("edits_per_string", e.mutation.edits_per_string);
    std::vector<double> w;
    r.get("edit_weights", w);
    if (!w.empty()) {
      if (w.size() != 3) throw ConfigError(origin + ": [mutation] edit_weights needs 3 values (delete, add, replace)");
      e.mutation.edit_kind_weights = {w[0], w[1], w[2]};
    }
    r.get("fragments_file", rc.fragments_file);
    r.get("fragment_bias", e.mutation.fragment_bias);
  }
  {
    detail::SectionReader r(table["crossover"], "crossover", origin);
    r.get("num_paths", e.crossover.num_paths);
    r.get("max_intermediates_kept", e.crossover.max_intermediates_kept);
    r.get("pairs", e.crossover_pairs);
  }
  {
    detail::SectionReader r(table["surrogate"], "surrogate", origin);
    r.get_enum("pressure", e.pressure,
               {{"none", Pressure::Random}, {"random", Pressure::Random}, {"predictor", Pressure::Predictor},
                {"classifier", Pressure::Classifier}});
    r.get("top_fraction", e.surrogate.top_fraction);
    r.get("hidden", e.surrogate.hidden);
    r.get("learning_rate", e.surrogate.learning_rate);
    r.get("epochs", e.surrogate.epochs);
    r.get("batch_size", e.surrogate.batch_size);
  }
  {
    FitnessSpec& f = rc.fitness;
    detail::SectionReader r(table["fitness"], "fitness", origin);
    r.get_enum("kind", f.kind, {{"native", FitnessKind::Native}, {"external", FitnessKind::External}});
    r.get_enum("scale", f.scale, {{"raw", FitnessScale::Raw}, {"normalized", FitnessScale::Normalized}});
    r.get("normalization_file", f.normalization_file);
    r.get("logp_table_file", f.logp_table_file);
    r.get_enum("ring_penalty", f.ring_mode, {{"max", RingPenaltyMode::Max}, {"sum", RingPenaltyMode::Sum}});
    r.get("sa_odd_ring", f.sa_weights.odd_ring);
    r.get("sa_branching", f.sa_weights.branching);
    r.get("sa_hetero", f.sa_weights.hetero);
    r.get("sa_macrocycle", f.sa_weights.macrocycle);
    r.get("command", f.evaluator.command);
    r.get("timeout_seconds", f.evaluator.timeout_seconds);
    r.get("batch_size", f.evaluator.batch_size);
    r.get("logp_command", f.logp_command);
    r.get("sa_command", f.sa_command);
  }
  {
    detail::SectionReader r(table["output"], "output", origin);
    r.get("dir", e.output_dir);
  }
  resolve(rc.init_file);
  resolve(rc.fragments_file);
  resolve(rc.fitness.normalization_file);
  resolve(rc.fitness.logp_table_file);
  return rc;
}

/// Checks ranges and referenced files; throws ConfigError.
inline void validate(const RunConfig& rc) {
  try {
    rc.engine.validate();
    if (rc.fitness.kind == FitnessKind::External) {
      rc.fitness.evaluator.validate();
    }
    if (rc.fitness.scale == FitnessScale::Normalized && rc.fitness.kind == FitnessKind::Native &&
        rc.fitness.normalization_file.empty()) {
      throw PreconditionError("scale = \"normalized\" needs [fitness] normalization_file");
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(rc.source + ": " + e.what());
  }
  for (const std::string* p : {&rc.init_file, &rc.fragments_file, &rc.fitness.normalization_file, &rc.fitness.logp_table_file}) {
    if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError(rc.source + ": file not found: " + *p);
  }
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig rc = run_config_from(parse_config_text(ss.str(), path), path, std::filesystem::path(path).parent_path());
  return rc;
}

// ---------------------------------------------------------------------------
// Normalization constants on disk (JSON)

inline nlohmann::json to_json(const NormalizationConstants& c) {
  auto t = [](const TermStats& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
  return nlohmann::json{{"logp", t(c.logp)}, {"sa", t(c.sa)}, {"ring_penalty", t(c.ring)}};
}

inline NormalizationConstants load_normalization(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open normalization file " + path);
  NormalizationConstants c;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    auto t = [&](const char* k) { return TermStats{j.at(k).at("mean").get<double>(), j.at(k).at("std").get<double>()}; };
    c.logp = t("logp");
    c.sa = t("sa");
    c.ring = t("ring_penalty");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    c.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

/// The effective configuration as a config file.
inline std::string config_snapshot(const RunConfig& rc) {
  const EngineConfig& e = rc.engine;
  std::ostringstream o;
  auto str = [](const std::string& s) { return nlohmann::json(s).dump(); };
  auto num = [](double x) { return format_number(x); };
  const char* fills[] = {"random", "mutants", "none"};
  o << "[run]\nseed = " << e.seed << "\ngenerations = " << e.generations << "\npopulation_size = " << e.population_size
    << "\nmax_smiles_chars = " << e.max_smiles_chars << "\nelite_fraction = " << num(e.elite_fraction)
    << "\nexchange_k = " << e.exchange_k << "\nthreads = " << e.threads << "\nmax_rounds = " << e.max_rounds
    << "\ninit_file = " << str(rc.init_file) << "\ninit_fill = \"" << fills[static_cast<int>(e.init.fill)]
    << "\"\nrandom_length = " << e.init.random_length << "\n\n[selection]\nn_select = " << e.selection.n_select << "\n";
  if (e.selection.f25) o << "f25 = " << num(*e.selection.f25) << "\n";
  o << "\n[mutation]\nnum_reorderings = " << e.mutation.num_reorderings << "\nedits_per_string = " << e.mutation.edits_per_string
    << "\nedit_weights = [" << num(e.mutation.edit_kind_weights[0]) << ", " << num(e.mutation.edit_kind_weights[1]) << ", "
    << num(e.mutation.edit_kind_weights[2]) << "]\nfragments_file = " << str(rc.fragments_file)
    << "\nfragment_bias = " << num(e.mutation.fragment_bias) << "\n\n[crossover]\nnum_paths = " << e.crossover.num_paths
    << "\nmax_intermediates_kept = " << e.crossover.max_intermediates_kept << "\npairs = " << e.crossover_pairs
    << "\n\n[surrogate]\npressure = \"" << pressure_name(e.pressure) << "\"\ntop_fraction = " << num(e.surrogate.top_fraction)
    << "\nhidden = [";
  for (std::size_t i = 0; i < e.surrogate.hidden.size(); ++i) o << (i ? ", " : "") << e.surrogate.hidden[i];
  const FitnessSpec& f = rc.fitness;
  o << "]\nlearning_rate = " << num(e.surrogate.learning_rate) << "\nepochs = " << e.surrogate.epochs
    << "\nbatch_size = " << e.surrogate.batch_size << "\n\n[fitness]\nkind = \""
    << (f.kind == FitnessKind::Native ? "native" : "external") << "\"\nscale = \""
    << (f.scale == FitnessScale::Raw ? "raw" : "normalized") << "\"\nnormalization_file = " << str(f.normalization_file)
    << "\nlogp_table_file = " << str(f.logp_table_file) << "\nring_penalty = \""
    << (f.ring_mode == RingPenaltyMode::Max ? "max" : "sum") << "\"\nsa_odd_ring = " << num(f.sa_weights.odd_ring)
    << "\nsa_branching = " << num(f.sa_weights.branching) << "\nsa_hetero = " << num(f.sa_weights.hetero)
    << "\nsa_macrocycle = " << num(f.sa_weights.macrocycle) << "\ncommand = " << str(f.evaluator.command)
    << "\ntimeout_seconds = " << num(f.evaluator.timeout_seconds) << "\nbatch_size = " << f.evaluator.batch_size
    << "\nlogp_command = " << str(f.logp_command) << "\nsa_command = " << str(f.sa_command) << "\n\n[output]\ndir = "
    << str(e.output_dir) << "\n";
  return o.str();
}

}  // namespace janus
