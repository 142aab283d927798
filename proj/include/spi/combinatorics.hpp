#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spi/errors.hpp"

namespace spi {

// Exact C(n,k) in 64-bit; safe for n <= 62 (C(62,31) < 2^63). Stepwise products
// C(n-k+i, i) are integers, so every division below is exact.
inline std::uint64_t binomial_u64(long n, long k) {
  if (n < 0 || k < 0 || k > n) throw DomainError("binomial_u64: need 0 <= k <= n");
  if (k > n - k) k = n - k;
  std::uint64_t res = 1;
  for (long i = 1; i <= k; ++i) {
    res = res * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return res;
}

// log C(n,k) by compensated summation of log((n-k+i)/i). Slower than an lgamma
// identity but accurate to a few ulps even at n ~ 3e4, and exact at k = 0.
inline double log_binomial(long n, long k) {
  if (n < 0 || k < 0 || k > n) throw DomainError("log_binomial: need 0 <= k <= n");
  if (k > n - k) k = n - k;
  double sum = 0.0, comp = 0.0;
  for (long i = 1; i <= k; ++i) {
    double term = std::log(static_cast<double>(n - k + i)) - std::log(static_cast<double>(i));
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

// PMF of the r-th order statistic of a sample of size m+1 drawn without
// replacement from a pooled population of size N+m+1:
//   p(k) = C(k+r-2, r-1) * C(N+m-k-r+2, m-r+1) / C(N+m+1, m+1),  k in [N+1].
struct OrderStatPmf {
  long m = 0;
  long N = 0;
  long r = 1;
  std::vector<double> mass;  // mass[k-1] = p(k)

  double at(long k) const {
    if (k < 1 || k > N + 1) throw DomainError("OrderStatPmf: k outside [N+1]");
    return mass[static_cast<std::size_t>(k - 1)];
  }
};

namespace detail {

// Entries smaller than this are stored as exact zeros; they cannot move any
// window endpoint at a practical beta but would otherwise denormalize the scan.
inline constexpr double kMassFloor = 1e-300;

inline double log_order_stat_mass(long m, long N, long r, long k) {
  return log_binomial(k + r - 2, r - 1) + log_binomial(N + m - k - r + 2, m - r + 1) -
         log_binomial(N + m + 1, m + 1);
}

}  // namespace detail

inline OrderStatPmf order_stat_pmf(long m, long N, long r) {
  if (m < 0) throw DomainError("order_stat_pmf: m must be >= 0");
  if (N < 1) throw DomainError("order_stat_pmf: N must be >= 1");
  if (r < 1 || r > m + 1) throw DomainError("order_stat_pmf: rank r outside [m+1]");

  OrderStatPmf pmf{m, N, r, std::vector<double>(static_cast<std::size_t>(N + 1))};

  if (N + m + 1 <= 62) {
    // Small populations: exact integer numerators/denominator, one correctly
    // rounded division per entry. The product of the two binomials never
    // exceeds the denominator (p(k) <= 1), so 64 bits suffice.
    const double den = static_cast<double>(binomial_u64(N + m + 1, m + 1));
    for (long k = 1; k <= N + 1; ++k) {
      std::uint64_t num =
          binomial_u64(k + r - 2, r - 1) * binomial_u64(N + m - k - r + 2, m - r + 1);
      pmf.mass[static_cast<std::size_t>(k - 1)] = static_cast<double>(num) / den;
    }
    return pmf;
  }

  // Large populations: anchor p(k) in log space, then run the exact ratio
  //   p(k+1)/p(k) = (k+r-1)(N-k+1) / (k (N+m-k-r+2))
  // in linear space, re-anchoring every 256 steps to bound drift and to recover
  // from the underflow floor.
  const double log_floor = std::log(detail::kMassFloor);
  double p = 0.0;
  for (long k = 1; k <= N + 1; ++k) {
    if ((k - 1) % 256 == 0) {
      double lp = detail::log_order_stat_mass(m, N, r, k);
      p = (lp < log_floor) ? 0.0 : std::exp(lp);
    } else {
      long j = k - 1;
      p *= static_cast<double>(j + r - 1) * static_cast<double>(N - j + 1) /
           (static_cast<double>(j) * static_cast<double>(N + m - j - r + 2));
      if (p < detail::kMassFloor) p = 0.0;
    }
    pmf.mass[static_cast<std::size_t>(k - 1)] = p;
  }
  return pmf;
}

// F(t) = sum_{k=1}^{t} p(k); F(0) = 0 by convention (empty sum).
inline double order_stat_cdf(const OrderStatPmf& pmf, long t) {
  if (t < 0 || t > pmf.N + 1) throw DomainError("order_stat_cdf: t outside [0, N+1]");
  double sum = 0.0;
  for (long k = 1; k <= t; ++k) sum += pmf.mass[static_cast<std::size_t>(k - 1)];
  return sum;
}

namespace detail {

// Measure-zero boundary cases F(t-1) = beta/2 are decided toward inclusion with
// a small absolute slack, so a one-ulp CDF wobble cannot flip a rank.
inline constexpr double kCdfSlack = 1e-12;

}  // namespace detail

// Window rank bounds into the synthetic order statistics:
//   R- = max{t in [N+1] : F(t-1) <= beta/2},  R+ = min{t in [N+1] : F(t) >= 1 - beta/2}.
// The lower scan accumulates the left tail bottom-up and the upper scan the
// right tail top-down, so each comparison sums its own tail smallest-first.
inline std::pair<long, long> window_rank_bounds(const OrderStatPmf& pmf, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("window_rank_bounds: beta outside (0,1)");
  const long N = pmf.N;
  const double half = beta / 2.0 + detail::kCdfSlack;

  long r_minus = 1;
  double prefix = 0.0;  // F(t-1)
  for (long t = 1; t <= N + 1; ++t) {
    if (prefix <= half) r_minus = t;
    else break;
    prefix += pmf.mass[static_cast<std::size_t>(t - 1)];
  }

  // F(t) >= 1 - beta/2  <=>  suffix(t+1) = sum_{k > t} p(k) <= beta/2.
  long r_plus = N + 1;
  double suffix = 0.0;
  for (long t = N + 1; t >= 1; --t) {
    if (suffix <= half) r_plus = t;
    else break;
    suffix += pmf.mass[static_cast<std::size_t>(t - 1)];
  }
  return {r_minus, r_plus};
}

inline std::pair<long, long> window_rank_bounds(long m, long N, long r, double beta) {
  return window_rank_bounds(order_stat_pmf(m, N, r), beta);
}

// Per-rank window bounds for all r in [m+1]. Immutable after construction and
// safe to share across threads; in simulations it depends only on (m, N, beta)
// and is computed once per configuration.
struct WindowTable {
  long m = 0;
  long N = 0;
  double beta = 0.0;
  std::vector<std::pair<long, long>> rows;  // rows[r-1] = (R_r^-, R_r^+)

  const std::pair<long, long>& row(long r) const {
    if (r < 1 || r > m + 1) throw DomainError("WindowTable: rank r outside [m+1]");
    return rows[static_cast<std::size_t>(r - 1)];
  }
};

inline WindowTable window_table(long m, long N, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("window_table: beta outside (0,1)");
  WindowTable table{m, N, beta, {}};
  table.rows.reserve(static_cast<std::size_t>(m + 1));
  for (long r = 1; r <= m + 1; ++r) {
    table.rows.push_back(window_rank_bounds(order_stat_pmf(m, N, r), beta));
  }
  return table;
}

}  // namespace spi
