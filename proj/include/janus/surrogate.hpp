#pragma once

// Selection-pressure models retrained each generation on every molecule
// evaluated so far: a fitness regressor and a top-fraction classifier.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "janus/canon.hpp"
#include "janus/error.hpp"
#include "janus/fingerprint.hpp"
#include "janus/mlp.hpp"
#include "janus/random.hpp"

namespace janus {

enum class SurrogateMode { Predictor, Classifier };

struct TrainConfig {
  SurrogateMode mode = SurrogateMode::Predictor;
  double top_fraction = 0.5;  // classifier only
  std::vector<std::size_t> hidden = {256, 64};
  double learning_rate = 0.01;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
  bool record_loss = false;  // full-archive loss after every epoch

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw PreconditionError("learning rate must be > 0");
    if (epochs < 1) throw PreconditionError("epochs must be >= 1");
    if (batch_size < 1) throw PreconditionError("batch size must be >= 1");
    if (mode == SurrogateMode::Classifier && !(top_fraction > 0.0 && top_fraction < 1.0)) {
      throw PreconditionError("top_fraction must be in (0,1)");
    }
    for (std::size_t h : hidden) {
      if (h == 0) throw PreconditionError("hidden layer widths must be positive");
    }
  }
};

/// Every evaluated molecule once, in first-seen order.
class TrainingArchive {
 public:
  struct Entry {
    CanonicalKey key;
    std::vector<std::uint32_t> active;
    double fitness;
  };

  /// Returns false for a known key or a non-finite fitness (rejected
  /// molecules carry no usable target).
  bool add(const CanonicalKey& key, const Fingerprint& fp, double fitness) {
    if (!std::isfinite(fitness) || keys_.count(key)) return false;
    keys_.insert(key);
    entries_.push_back({key, active_bits(fp), fitness});
    return true;
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  bool contains(const CanonicalKey& key) const { return keys_.count(key) > 0; }

 private:
  std::vector<Entry> entries_;
  std::unordered_set<CanonicalKey, CanonicalKeyHash> keys_;
};

/// Indices ordered by fitness descending, ties by key.
inline std::vector<std::size_t> fitness_order(const TrainingArchive& archive) {
  const auto& e = archive.entries();
  std::vector<std::size_t> idx(e.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (e[a].fitness != e[b].fitness) return e[a].fitness > e[b].fitness;
    return e[a].key < e[b].key;
  });
  return idx;
}

/// 1 for the top ceil(fraction * N) molecules, 0 otherwise.
inline std::vector<double> top_fraction_labels(const TrainingArchive& archive, double fraction) {
  const std::size_t n = archive.size();
  const auto& e = archive.entries();
  bool all_equal = std::all_of(e.begin(), e.end(), [&](const auto& x) { return x.fitness == e.front().fitness; });
  if (n < 2 || all_equal) throw PreconditionError("classifier labels are degenerate: all fitness values are equal");
  auto positives = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  if (positives == 0 || positives >= n) throw PreconditionError("classifier labels contain a single class");
  std::vector<double> labels(n, 0.0);
  auto order = fitness_order(archive);
  for (std::size_t k = 0; k < positives; ++k) labels[order[k]] = 1.0;
  return labels;
}

struct TrainResult {
  Mlp model;
  std::vector<double> epoch_loss;  // empty unless record_loss
};

inline double archive_loss(const Mlp& m, const TrainingArchive& archive, std::span<const double> targets) {
  double sum = 0.0;
  for (std::size_t i = 0; i < archive.size(); ++i) {
    double u = m.raw(MlpInput::of(std::span<const std::uint32_t>(archive.entries()[i].active)));
    sum += sample_loss(m.head(), u, targets[i]);
  }
  return sum / static_cast<double>(archive.size());
}

/// Plain minibatch gradient descent from a fresh He initialization.
inline TrainResult train(const TrainingArchive& archive, const TrainConfig& cfg) {
  cfg.validate();
  if (archive.size() < 2) throw PreconditionError("training needs at least two molecules");
  const std::size_t n = archive.size();
  const auto& entries = archive.entries();

  std::vector<std::size_t> widths = {kFingerprintBits};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(1);
  const bool classify = cfg.mode == SurrogateMode::Classifier;
  Mlp m(widths, classify ? Head::Logistic : Head::Identity);
  m.init_he(derive_seed({cfg.seed, 1}));

  std::vector<double> targets(n);
  if (classify) {
    targets = top_fraction_labels(archive, cfg.top_fraction);
  } else {
    double mean = 0.0;
    for (const auto& e : entries) mean += e.fitness;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& e : entries) var += (e.fitness - mean) * (e.fitness - mean);
    double sd = std::sqrt(var / static_cast<double>(n));
    if (!(sd > 1e-12)) sd = 1.0;
    m.target_mean = mean;
    m.target_std = sd;
    for (std::size_t i = 0; i < n; ++i) targets[i] = (entries[i].fitness - mean) / sd;
  }

  TrainResult result;
  Gradients g(m);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({cfg.seed, 2}));
  std::vector<char> touched_mark(kFingerprintBits, 0);
  std::vector<std::uint32_t> touched;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto& e = entries[order[k]];
        backprop(m, MlpInput::of(std::span<const std::uint32_t>(e.active)), targets[order[k]], scale, g);
        for (std::uint32_t i : e.active) {
          if (!touched_mark[i]) {
            touched_mark[i] = 1;
            touched.push_back(i);
          }
        }
      }
      // first layer: only columns with a nonzero gradient
      Layer& L0 = m.layers()[0];
      Layer& G0 = g.layers[0];
      for (std::size_t j = 0; j < L0.out; ++j) {
        double* w = L0.w.data() + j * L0.in;
        double* gw = G0.w.data() + j * L0.in;
        for (std::uint32_t i : touched) {
          w[i] -= cfg.learning_rate * gw[i];
          gw[i] = 0.0;
        }
      }
      for (std::uint32_t i : touched) touched_mark[i] = 0;
      touched.clear();
      for (std::size_t j = 0; j < L0.out; ++j) {
        L0.b[j] -= cfg.learning_rate * G0.b[j];
        G0.b[j] = 0.0;
      }
      for (std::size_t l = 1; l < m.layers().size(); ++l) {
        Layer& L = m.layers()[l];
        Layer& G = g.layers[l];
        for (std::size_t i = 0; i < L.w.size(); ++i) {
          L.w[i] -= cfg.learning_rate * G.w[i];
          G.w[i] = 0.0;
        }
        for (std::size_t i = 0; i < L.b.size(); ++i) {
          L.b[i] -= cfg.learning_rate * G.b[i];
          G.b[i] = 0.0;
        }
      }
    }
    if (cfg.record_loss) result.epoch_loss.push_back(archive_loss(m, archive, targets));
  }
  if (!m.all_finite()) throw Error("surrogate training diverged (non-finite parameters); lower the learning rate");
  result.model = std::move(m);
  return result;
}

inline std::vector<double> score(const Mlp& model, std::span<const Fingerprint> fps) {
  std::vector<double> out;
  out.reserve(fps.size());
  for (const Fingerprint& fp : fps) out.push_back(model.predict(fp));
  return out;
}

/// Indices of the k highest scores, ties broken by key; highest first.
inline std::vector<std::size_t> rank_by_score(std::span<const double> scores, std::span<const CanonicalKey> keys,
                                              std::size_t k) {
  if (scores.size() != keys.size()) throw PreconditionError("scores and keys differ in length");
  if (k > scores.size()) throw PreconditionError("cannot keep more children than there are");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return keys[a] < keys[b];
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

inline std::vector<std::size_t> rank_overflow(const Mlp& model, std::span<const Fingerprint> fps,
                                              std::span<const CanonicalKey> keys, std::size_t k) {
  std::vector<double> s = score(model, fps);
  return rank_by_score(s, keys, k);
}

}  // namespace janus
