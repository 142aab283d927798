#pragma once

#include <algorithm>

#include "spi/combinatorics.hpp"
#include "spi/errors.hpp"
#include "spi/score_vector.hpp"

namespace spi {

// Rank of eta among the real scores: 1 + #{S_i < eta}. Strict inequality, so a
// tie with a real score does not advance the rank.
inline long rank_among(double eta, const ScoreVector& real_scores) {
  const auto& s = real_scores.sorted();
  return 1 + static_cast<long>(std::lower_bound(s.begin(), s.end(), eta) - s.begin());
}

// Window in the synthetic score space for a given real rank: the synthetic order
// statistics at ranks (R_r^-, R_r^+), with rank N+1 mapping to +inf.
struct ScoreWindow {
  double lower = 0.0;
  double upper = 0.0;
  long lo_rank = 1;
  long hi_rank = 1;
};

inline ScoreWindow score_window(long r, const WindowTable& table, const ScoreVector& synth) {
  if (synth.size() != table.N) {
    throw ConfigError("score_window: synthetic score count does not match the window table");
  }
  auto [lo, hi] = table.row(r);
  return ScoreWindow{synth.order_stat(lo), synth.order_stat(hi), lo, hi};
}

// The window-constrained lower-nearest-neighbor transport of a real-domain
// score into the synthetic score space:
//   eta >= U  -> U
//   eta <  L  -> L
//   otherwise -> the largest in-window synthetic order statistic <= eta.
// Ties eta == synthetic value map to the tied value (the <= in the middle
// branch), which keeps the map deterministic even on non-continuous inputs.
inline double transport(double eta, const ScoreVector& real_scores, const ScoreVector& synth,
                        const WindowTable& table) {
  if (real_scores.size() != table.m) {
    throw ConfigError("transport: real score count does not match the window table");
  }
  const long r = rank_among(eta, real_scores);
  ScoreWindow w = score_window(r, table, synth);
  if (eta >= w.upper) return w.upper;
  if (eta < w.lower) return w.lower;
  // L <= eta < U, so the candidate set {S~_(j) : lo <= j <= hi, S~_(j) <= eta}
  // contains at least S~_(lo).
  const auto& s = synth.sorted();
  long hi_finite = std::min(w.hi_rank, synth.size());
  auto it = std::upper_bound(s.begin() + (w.lo_rank - 1), s.begin() + hi_finite, eta);
  return *(it - 1);
}

}  // namespace spi
