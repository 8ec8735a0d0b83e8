#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "janus/error.hpp"
#include "janus/fingerprint.hpp"

namespace janus {

/// One minus the mean pairwise Tanimoto similarity.
inline double diversity(std::span<const Fingerprint> fps) {
  const std::size_t n = fps.size();
  if (n < 2) throw PreconditionError("diversity needs at least two molecules");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sum += tanimoto(fps[i], fps[j]);
  }
  return 1.0 - 2.0 * sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Fraction of molecules whose nearest reference is strictly less similar
/// than `threshold`.
inline double novelty(std::span<const Fingerprint> fps, std::span<const Fingerprint> refs, double threshold = 0.4) {
  if (refs.empty()) throw PreconditionError("novelty needs a non-empty reference set");
  if (fps.empty()) throw PreconditionError("novelty needs at least one molecule");
  std::size_t novel = 0;
  for (const Fingerprint& f : fps) {
    double nearest = 0.0;
    for (const Fingerprint& r : refs) nearest = std::max(nearest, tanimoto(f, r));
    novel += nearest < threshold;
  }
  return static_cast<double>(novel) / static_cast<double>(fps.size());
}

/// Fraction of scores at or above `threshold`.
inline double success_rate(std::span<const double> scores, double threshold) {
  if (scores.empty()) throw PreconditionError("success rate needs at least one score");
  std::size_t hits = 0;
  for (double s : scores) hits += s >= threshold;
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

}  // namespace janus
