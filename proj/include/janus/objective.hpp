#pragma once

// Fitness functions seen by the engine.  An objective scores a batch of
// molecules; per-molecule failures come back as errors with a rejected
// (-inf) fitness instead of aborting the batch.

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "janus/canon.hpp"
#include "janus/evaluator.hpp"
#include "janus/fingerprint.hpp"
#include "janus/parallel.hpp"
#include "janus/properties.hpp"

namespace janus {

struct Candidate {
  const MolGraph* mol;
  const std::string* smiles;
  const Fingerprint* fp;
};

struct Evaluation {
  double fitness = kRejected;
  std::string error;
};

class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::vector<Evaluation> evaluate(std::span<const Candidate> batch, int threads) = 0;
  virtual std::string describe() const = 0;
};

/// Wraps a pure per-molecule function; evaluated in parallel.
class FunctionObjective : public Objective {
 public:
  using Fn = std::function<double(const Candidate&)>;
  FunctionObjective(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

  std::vector<Evaluation> evaluate(std::span<const Candidate> batch, int threads) override {
    std::vector<Evaluation> out(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
      try {
        out[i].fitness = fn_(batch[i]);
        if (std::isnan(out[i].fitness)) {
          out[i].fitness = kRejected;
          out[i].error = "fitness is NaN";
        }
      } catch (const std::exception& e) {
        out[i].fitness = kRejected;
        out[i].error = e.what();
      }
    });
    return out;
  }

  std::string describe() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

enum class FitnessScale { Raw, Normalized };

/// Penalized log P from native terms; log P and/or SA may instead come from
/// external evaluators.
class PenalizedLogpObjective : public Objective {
 public:
  PenalizedLogpObjective(NativeTerms terms, NormalizationConstants constants, FitnessScale scale,
                         ExternalEvaluator* logp_source = nullptr, ExternalEvaluator* sa_source = nullptr)
      : terms_(std::move(terms)), constants_(constants), scale_(scale), logp_source_(logp_source), sa_source_(sa_source) {
    constants_.validate();
  }

  std::vector<Evaluation> evaluate(std::span<const Candidate> batch, int threads) override {
    const std::size_t n = batch.size();
    std::vector<double> logp(n), sa(n), ring(n);
    std::vector<std::string> errors(n);
    parallel_for(n, threads, [&](std::size_t i) {
      std::vector<Ring> rings = perceive_rings(*batch[i].mol);
      ring[i] = ring_penalty(rings, terms_.ring_mode);
      if (!sa_source_) sa[i] = sa_surrogate(*batch[i].mol, rings, terms_.sa_weights);
      if (!logp_source_) {
        try {
          logp[i] = logp_estimate(*batch[i].mol, terms_.logp_table);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    });
    auto external = [&](ExternalEvaluator* src, std::vector<double>& dst, const char* term) {
      if (!src) return;
      std::vector<EvalRequest> reqs;
      for (std::size_t i = 0; i < n; ++i) reqs.push_back({std::to_string(i), *batch[i].smiles});
      auto res = src->evaluate(reqs);
      for (std::size_t i = 0; i < n; ++i) {
        if (res[i].ok()) {
          dst[i] = *res[i].score;
        } else if (errors[i].empty()) {
          errors[i] = std::string(term) + " evaluator: " + res[i].error;
        }
      }
    };
    external(logp_source_, logp, "logp");
    external(sa_source_, sa, "sa");
    std::vector<Evaluation> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!errors[i].empty()) {
        out[i].error = errors[i];
        continue;
      }
      FitnessReport r = compose_fitness(logp[i], sa[i], ring[i], constants_);
      out[i].fitness = scale_ == FitnessScale::Raw ? r.j_raw : r.j_normalized;
    }
    return out;
  }

  std::string describe() const override {
    return std::string("penalized_logp(") + (scale_ == FitnessScale::Raw ? "raw" : "normalized") + ")";
  }

 private:
  NativeTerms terms_;
  NormalizationConstants constants_;
  FitnessScale scale_;
  ExternalEvaluator* logp_source_;
  ExternalEvaluator* sa_source_;
};

/// The whole fitness comes from an external evaluator.
class ExternalObjective : public Objective {
 public:
  explicit ExternalObjective(ExternalEvaluator& ev) : ev_(ev) {}

  std::vector<Evaluation> evaluate(std::span<const Candidate> batch, int) override {
    std::vector<EvalRequest> reqs;
    for (std::size_t i = 0; i < batch.size(); ++i) reqs.push_back({std::to_string(i), *batch[i].smiles});
    auto res = ev_.evaluate(reqs);
    std::vector<Evaluation> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (res[i].ok()) {
        out[i].fitness = *res[i].score;
      } else {
        out[i].error = res[i].error;
      }
    }
    return out;
  }

  std::string describe() const override { return "external(" + ev_.spec().command + ")"; }

 private:
  ExternalEvaluator& ev_;
};

/// Base fitness when similar enough to the reference, otherwise rejected.
class ConstrainedObjective : public Objective {
 public:
  ConstrainedObjective(Objective& base, Fingerprint reference, double delta)
      : base_(base), reference_(reference), delta_(delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw PreconditionError("delta must be in [0,1]");
  }

  std::vector<Evaluation> evaluate(std::span<const Candidate> batch, int threads) override {
    auto out = base_.evaluate(batch, threads);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (out[i].error.empty()) out[i].fitness = constrained_fitness(*batch[i].fp, reference_, delta_, out[i].fitness);
    }
    return out;
  }

  std::string describe() const override { return "constrained(" + base_.describe() + ")"; }

 private:
  Objective& base_;
  Fingerprint reference_;
  double delta_;
};

}  // namespace janus
