// Test-side oracles, deliberately independent of the library's computation
// paths: Pascal-triangle binomials, brute-force enumeration of the pooled-rank
// pmf, an exact big-integer CDF scan for window bounds, and a fixed composite
// Simpson rule.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

using BigInt = boost::multiprecision::cpp_int;

// Pascal's triangle, a different route than the library's multiplicative form.
inline std::vector<std::vector<std::uint64_t>> pascal_triangle(long n_max) {
  std::vector<std::vector<std::uint64_t>> p(static_cast<std::size_t>(n_max + 1));
  for (long n = 0; n <= n_max; ++n) {
    auto& row = p[static_cast<std::size_t>(n)];
    row.resize(static_cast<std::size_t>(n + 1), 1);
    for (long k = 1; k < n; ++k) {
      row[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k - 1)] +
                                         p[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k)];
    }
  }
  return p;
}

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// PMF of the r-th coordinate of a uniform draw over all nondecreasing tuples
// (z_1 <= ... <= z_{m+1}) in [N+1]^{m+1}, by explicit enumeration. Returns one
// reduced rational per k in [N+1].
inline std::vector<Rational> enumerate_rank_pmf(long m, long N, long r) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(N + 1), 0);
  std::uint64_t total = 0;
  std::vector<long> tuple(static_cast<std::size_t>(m + 1));

  std::function<void(long, long)> rec = [&](long pos, long min_val) {
    if (pos == m + 1) {
      ++total;
      ++counts[static_cast<std::size_t>(tuple[static_cast<std::size_t>(r - 1)] - 1)];
      return;
    }
    for (long v = min_val; v <= N + 1; ++v) {
      tuple[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, v);
    }
  };
  rec(0, 1);

  std::vector<Rational> pmf;
  pmf.reserve(counts.size());
  for (std::uint64_t c : counts) {
    const std::uint64_t g = std::gcd(c, total);
    pmf.push_back(g == 0 ? Rational{0, 1} : Rational{c / g, total / g});
  }
  return pmf;
}

inline BigInt big_binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  BigInt r = 1;
  for (long i = 1; i <= k; ++i) {
    r *= (n - k + i);
    r /= i;
  }
  return r;
}

// Window rank bounds from the exact rational CDF, with beta treated as its
// exact binary value. No floating point anywhere in the comparisons.
inline std::pair<long, long> exact_window_bounds(long m, long N, long r, double beta) {
  int e = 0;
  const double frac = std::frexp(beta, &e);  // beta = frac * 2^e, e <= 0 for beta < 1
  const BigInt mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  const int shift = 54 - e;  // beta/2 = mant / 2^shift

  const BigInt den = big_binomial(N + m + 1, m + 1);
  auto mass_num = [&](long k) {
    return big_binomial(k + r - 2, r - 1) * big_binomial(N + m - k - r + 2, m - r + 1);
  };
  const BigInt rhs = mant * den;

  long r_minus = 1;
  BigInt partial = 0;  // numerator of F(t-1)
  for (long t = 1; t <= N + 1; ++t) {
    if ((partial << shift) <= rhs) r_minus = t;
    else break;
    partial += mass_num(t);
  }

  long r_plus = N + 1;
  partial = 0;  // numerator of F(t)
  for (long t = 1; t <= N + 1; ++t) {
    partial += mass_num(t);
    if (((den - partial) << shift) <= rhs) {
      r_plus = t;
      break;
    }
  }
  return {r_minus, r_plus};
}

// Fixed composite Simpson rule; panels must be even.
inline double composite_simpson(const std::function<double(double)>& f, double a, double b,
                                int panels) {
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) {
    sum += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  }
  return sum * h / 3.0;
}

}  // namespace oracle
