#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "spi/calibration.hpp"
#include "spi/errors.hpp"
#include "spi/rng.hpp"
#include "spi/score_vector.hpp"

namespace spi {

// Estimated class-probability vector from a classifier.
struct ClassProbability {
  std::vector<double> probs;

  void validate() const {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw DomainError("ClassProbability: negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("ClassProbability: entries must sum to 1");
  }
};

// Adaptive-prediction-sets score: sort probabilities descending (ties broken by
// ascending class index), accumulate through the label's rank, and subtract
// u times the label's own probability. Always lands in [0, 1].
inline double aps_score(const ClassProbability& probs, std::size_t label_index, double u) {
  probs.validate();
  if (label_index >= probs.probs.size()) throw DomainError("aps_score: label index out of range");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("aps_score: u outside [0,1]");

  std::vector<std::size_t> order(probs.probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs.probs[a] > probs.probs[b]; });

  double cumulative = 0.0;
  for (std::size_t idx : order) {
    cumulative += probs.probs[idx];
    if (idx == label_index) return cumulative - u * probs.probs[idx];
  }
  throw DomainError("aps_score: label index not found");  // unreachable
}

// Lower/upper conditional quantile estimates from a quantile regression model.
struct QuantilePair {
  double lo = 0.0;
  double hi = 0.0;

  void validate() const {
    if (!(lo <= hi)) throw DomainError("QuantilePair: lo must be <= hi");
  }
};

// Conformalized quantile regression score: signed distance outside the band.
inline double cqr_score(const QuantilePair& q, double y) {
  q.validate();
  return std::max(q.lo - y, y - q.hi);
}

struct RealInterval {
  double lo = kPlusInf;
  double hi = kMinusInf;

  bool empty() const { return !(lo <= hi); }
  bool contains(double y) const { return lo <= y && y <= hi; }
};

// Prediction interval dual to the CQR score: [lo - cutoff, hi + cutoff].
// cutoff = -inf gives the empty interval, +inf the whole line.
inline RealInterval cqr_interval(const QuantilePair& q, const PredictionThreshold& threshold) {
  q.validate();
  if (threshold.empty_set()) return RealInterval{kPlusInf, kMinusInf};
  if (threshold.trivial()) return RealInterval{kMinusInf, kPlusInf};
  return RealInterval{q.lo - threshold.cutoff, q.hi + threshold.cutoff};
}

// Default tie-breaking noise half-width: negligible relative to the score range.
inline double default_jitter_delta(const ScoreVector& scores) {
  const double range = scores.max() - scores.min();
  if (range > 0.0) return 1e-9 * range;
  return 1e-9 * std::max(1.0, std::abs(scores.max()));
}

// Add i.i.d. Uniform[-delta, delta] noise from the seeded stream, restoring a
// continuous score distribution when the raw scores have atoms.
inline ScoreVector jitter(const ScoreVector& scores, double delta, std::mt19937_64& eng) {
  if (!(delta > 0.0)) throw DomainError("jitter: delta must be > 0");
  std::vector<double> out;
  out.reserve(scores.values().size());
  for (double v : scores.values()) out.push_back(v + uniform_in(eng, -delta, delta));
  return ScoreVector(std::move(out));
}

inline ScoreVector jitter(const ScoreVector& scores, double delta, std::uint64_t seed) {
  std::mt19937_64 eng(derive_seed(seed, 0));
  return jitter(scores, delta, eng);
}

// Affine score adjustment g(s) = scale * s + shift, least-squares fitted on the
// matched order statistics (S~_(floor(iN/m)), S_(i)) for i in [m].
struct AffineAdjustment {
  double scale = 1.0;
  double shift = 0.0;

  // An inverted fit cannot be a sensible scale correction; surfaced to callers
  // rather than rejected, since the worst-case guarantees hold regardless.
  bool scale_nonpositive() const { return scale <= 0.0; }
};

inline AffineAdjustment affine_adjust_fit(const ScoreVector& real, const ScoreVector& synth) {
  const long m = real.size(), N = synth.size();
  if (m < 2) throw DomainError("affine_adjust_fit: need at least 2 real scores");
  if (N < m) throw DomainError("affine_adjust_fit: need N >= m so every matched index is >= 1");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (long i = 1; i <= m; ++i) {
    const double x = synth.order_stat(i * N / m);
    const double y = real.order_stat(i);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dm = static_cast<double>(m);
  const double var = sxx - sx * sx / dm;
  if (!(var > 0.0)) {
    throw DegenerateFitError("affine_adjust_fit: matched synthetic order statistics have zero variance");
  }
  const double scale = (sxy - sx * sy / dm) / var;
  const double shift = (sy - scale * sx) / dm;
  return AffineAdjustment{scale, shift};
}

inline ScoreVector apply(const AffineAdjustment& g, const ScoreVector& scores) {
  std::vector<double> out;
  out.reserve(scores.values().size());
  for (double v : scores.values()) out.push_back(g.scale * v + g.shift);
  return ScoreVector(std::move(out));
}

}  // namespace spi
