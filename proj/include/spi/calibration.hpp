#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "spi/combinatorics.hpp"
#include "spi/errors.hpp"
#include "spi/score_vector.hpp"
#include "spi/transporter.hpp"

namespace spi {

// ceil((1 - alpha) * M) = M - floor(alpha * M), evaluated exactly over the
// binary value of alpha. Naive double arithmetic misindexes when alpha * M
// straddles an integer (e.g. alpha = 0.2, M = 5 gives ceil(4.0000000000000002)),
// and the finite-sample guarantees depend on the exact order statistic.
inline long quantile_index(double alpha, long M) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile_index: alpha outside (0,1)");
  if (M < 1) throw DomainError("quantile_index: M must be >= 1");
  int exp2 = 0;
  double frac = std::frexp(alpha, &exp2);           // alpha = frac * 2^exp2, frac in [0.5, 1)
  auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));  // exact 53-bit integer
  int shift = 53 - exp2;                            // alpha = mant / 2^shift, shift >= 53
  unsigned __int128 prod = static_cast<unsigned __int128>(mant) * static_cast<unsigned __int128>(M);
  unsigned __int128 fl = (shift >= 127) ? 0 : (prod >> shift);
  return M - static_cast<long>(fl);
}

// A prediction-set cutoff; label y belongs to the set iff score(x, y) <= cutoff.
// +inf is the trivial all-labels set, -inf the empty set.
struct PredictionThreshold {
  double cutoff = kPlusInf;

  bool trivial() const { return cutoff == kPlusInf; }
  bool empty_set() const { return cutoff == kMinusInf; }
  bool contains(double score) const { return score <= cutoff; }
};

// Distribution-free worst-case coverage interval; both endpoints are integer
// multiples of 1/(m+1).
struct CoverageBounds {
  double lower = 0.0;
  double upper = 1.0;
  long m = 0;
  long N = 0;
  double alpha = 0.0;
  double beta = 0.0;
};

// Split conformal baseline: the ceil((1-alpha)(m+1))-th smallest score, or +inf
// when that index exceeds m (the small-sample trivial-set regime).
inline PredictionThreshold split_conformal_threshold(const ScoreVector& scores, double alpha) {
  const long m = scores.size();
  const long idx = quantile_index(alpha, m + 1);
  if (idx > m) return PredictionThreshold{kPlusInf};
  return PredictionThreshold{scores.order_stat(idx)};
}

// The (ceil((1-alpha)(N+1)) + offset)-th smallest synthetic score; +inf past the
// end. offset 0 gives the synthetic conformal quantile, offset 1 its successor.
inline double synth_quantile(const ScoreVector& synth, double alpha, int offset) {
  if (offset != 0 && offset != 1) throw DomainError("synth_quantile: offset must be 0 or 1");
  const long idx = quantile_index(alpha, synth.size() + 1) + offset;
  if (idx > synth.size()) return kPlusInf;
  return synth.order_stat(idx);
}

// Fast-form calibration cutoff
//   Q = max{ min{Q~'_{1-alpha}, S_(R~-)}, S_(R~+) },
// where R~+/- is the largest rank r with R_r^+/- <= ceil((1-alpha)(N+1)), with
// sentinels S_(0) = -inf (no rank qualifies: empty set) and S_(m+1) = +inf.
inline PredictionThreshold spi_threshold(const ScoreVector& real, const ScoreVector& synth,
                                         double alpha, const WindowTable& table) {
  if (real.size() != table.m || synth.size() != table.N) {
    throw ConfigError("spi_threshold: score counts do not match the window table");
  }
  const long q_idx = quantile_index(alpha, table.N + 1);
  const double q_prime = synth_quantile(synth, alpha, 1);

  long r_tilde_minus = 0, r_tilde_plus = 0;
  for (long r = 1; r <= table.m + 1; ++r) {
    const auto& [lo, hi] = table.row(r);
    if (lo <= q_idx) r_tilde_minus = r;
    if (hi <= q_idx) r_tilde_plus = r;
  }
  const double cutoff = std::max(std::min(q_prime, real.order_stat(r_tilde_minus)),
                                 real.order_stat(r_tilde_plus));
  return PredictionThreshold{cutoff};
}

inline PredictionThreshold spi_threshold(const ScoreVector& real, const ScoreVector& synth,
                                         double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("spi_threshold: alpha outside (0,1)");
  return spi_threshold(real, synth, alpha, window_table(real.size(), synth.size(), beta));
}

// Direct-construction membership test: transport the candidate score and compare
// against the synthetic conformal quantile. Intentionally kept as an independent
// code path; it is the equivalence oracle for the fast form above.
inline bool spi_member_direct(double candidate_score, const ScoreVector& real,
                              const ScoreVector& synth, double alpha, const WindowTable& table) {
  const double q_tilde = synth_quantile(synth, alpha, 0);
  return transport(candidate_score, real, synth, table) <= q_tilde;
}

inline bool spi_member_direct(double candidate_score, const ScoreVector& real,
                              const ScoreVector& synth, double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("spi_member_direct: alpha outside (0,1)");
  return spi_member_direct(candidate_score, real, synth, alpha,
                           window_table(real.size(), synth.size(), beta));
}

inline CoverageBounds worst_case_bounds(const WindowTable& table, double alpha) {
  const long q_idx = quantile_index(alpha, table.N + 1);
  long lower_count = 0, upper_count = 0;
  for (const auto& [lo, hi] : table.rows) {
    if (hi <= q_idx) ++lower_count;
    if (lo <= q_idx) ++upper_count;
  }
  const double denom = static_cast<double>(table.m + 1);
  return CoverageBounds{lower_count / denom, upper_count / denom,
                        table.m, table.N, alpha, table.beta};
}

inline CoverageBounds worst_case_bounds(long m, long N, double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("worst_case_bounds: alpha outside (0,1)");
  return worst_case_bounds(window_table(m, N, beta), alpha);
}

// Smallest beta on the grid {step, 2*step, ...} whose worst-case lower bound
// reaches target_lower; no grid point below 1 qualifying is reported as
// no-solution rather than an error.
inline std::optional<double> select_beta(long m, long N, double alpha, double target_lower,
                                         double step) {
  if (!(step > 0.0)) throw DomainError("select_beta: step must be > 0");
  if (!(target_lower >= 0.0 && target_lower <= 1.0)) {
    throw DomainError("select_beta: target_lower outside [0,1]");
  }
  for (long k = 1;; ++k) {
    const double beta = static_cast<double>(k) * step;
    if (!(beta < 1.0)) return std::nullopt;
    if (worst_case_bounds(m, N, alpha, beta).lower >= target_lower) return beta;
  }
}

// Scores paired with a discrete label.
struct LabeledScoreSet {
  std::vector<std::pair<std::string, double>> entries;

  std::vector<std::string> labels() const {
    std::set<std::string> seen;
    for (const auto& [label, score] : entries) seen.insert(label);
    return {seen.begin(), seen.end()};
  }

  ScoreVector scores_for(const std::string& label) const {
    std::vector<double> out;
    for (const auto& [l, s] : entries) {
      if (l == label) out.push_back(s);
    }
    return ScoreVector(std::move(out));
  }

  ScoreVector all_scores() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& [l, s] : entries) out.push_back(s);
    return ScoreVector(std::move(out));
  }
};

struct LabelThreshold {
  PredictionThreshold threshold;
  CoverageBounds bounds;     // computed with N_y in place of N
  long m_y = 0;
  long N_y = 0;
  bool synth_fallback = false;  // label absent from synthetic data: whole set used
  bool no_real_scores = false;  // m_y = 0: single-rank window table
};

// Label-conditional calibration: partition by class, run the calibration within
// each class, and fall back to the whole synthetic set for classes it lacks.
inline std::map<std::string, LabelThreshold> label_conditional_thresholds(
    const LabeledScoreSet& real, const LabeledScoreSet& synth, double alpha, double beta,
    const std::vector<std::string>& universe = {}) {
  std::set<std::string> labels(universe.begin(), universe.end());
  if (labels.empty()) {
    for (const auto& [l, s] : real.entries) labels.insert(l);
    for (const auto& [l, s] : synth.entries) labels.insert(l);
  }
  const ScoreVector whole_synth = synth.all_scores();

  std::map<std::string, LabelThreshold> out;
  for (const auto& label : labels) {
    ScoreVector real_y = real.scores_for(label);
    ScoreVector synth_y = synth.scores_for(label);
    const bool fallback = synth_y.empty();
    const ScoreVector& synth_used = fallback ? whole_synth : synth_y;
    if (synth_used.empty()) {
      throw ConfigError("label_conditional_thresholds: no synthetic scores available");
    }
    WindowTable table = window_table(real_y.size(), synth_used.size(), beta);
    LabelThreshold entry;
    entry.threshold = spi_threshold(real_y, synth_used, alpha, table);
    entry.bounds = worst_case_bounds(table, alpha);
    entry.m_y = real_y.size();
    entry.N_y = synth_used.size();
    entry.synth_fallback = fallback;
    entry.no_real_scores = real_y.empty();
    out.emplace(label, std::move(entry));
  }
  return out;
}

}  // namespace spi
