#pragma once

#include <cmath>
#include <functional>

#include "spi/distributions.hpp"
#include "spi/errors.hpp"

namespace spi {

// Density of the i-th order statistic among sample_size i.i.d. draws:
//   n! / ((i-1)! (n-i)!) * F(x)^(i-1) * (1-F(x))^(n-i) * f(x),
// assembled in log space so the factorial prefactor survives n up to ~1e4.
inline double order_stat_density(const Distribution& dist, long sample_size, long i, double x) {
  if (sample_size < 1) throw DomainError("order_stat_density: sample_size must be >= 1");
  if (i < 1 || i > sample_size) throw DomainError("order_stat_density: rank outside [sample_size]");
  const double f = dist.pdf(x);
  if (f == 0.0) return 0.0;
  const double F = dist.cdf(x);
  if (F == 0.0 && i > 1) return 0.0;
  if (F == 1.0 && i < sample_size) return 0.0;

  const double n = static_cast<double>(sample_size);
  double log_term = std::lgamma(n + 1.0) - std::lgamma(static_cast<double>(i)) -
                    std::lgamma(n - static_cast<double>(i) + 1.0);
  if (i > 1) log_term += static_cast<double>(i - 1) * std::log(F);
  if (i < sample_size) log_term += (n - static_cast<double>(i)) * std::log1p(-F);
  return std::exp(log_term) * f;
}

namespace detail {

struct SimpsonState {
  std::function<double(double)> f;
  bool converged = true;
  double worst_residual = 0.0;
};

inline double simpson_panel(const std::function<double(double)>& f, double a, double fa, double b,
                            double fb, double& fm) {
  const double m = 0.5 * (a + b);
  fm = f(m);
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(SimpsonState& st, double a, double fa, double m, double fm,
                                   double b, double fb, double whole, double tol, int depth) {
  double flm, frm;
  const double left = simpson_panel(st.f, a, fa, m, fm, flm);
  const double right = simpson_panel(st.f, m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) {
      st.converged = false;
      st.worst_residual = std::max(st.worst_residual, std::abs(delta) / 15.0);
    }
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(st, a, fa, 0.5 * (a + m), flm, m, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(st, m, fm, 0.5 * (m + b), frm, b, fb, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson to absolute tolerance. The integrand is seeded on a coarse
// grid first so narrow features (well-separated order-statistic bumps) are not
// missed by the opening panel.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, bool& converged, double& achieved) {
  SimpsonState st{f, true, 0.0};
  constexpr int kSeedPanels = 64;
  double total = 0.0;
  const double h = (b - a) / kSeedPanels;
  double x0 = a, f0 = f(a);
  for (int p = 0; p < kSeedPanels; ++p) {
    const double x1 = (p == kSeedPanels - 1) ? b : a + h * (p + 1);
    const double f1 = f(x1);
    double fm;
    const double whole = simpson_panel(f, x0, f0, x1, f1, fm);
    total += adaptive_simpson_rec(st, x0, f0, 0.5 * (x0 + x1), fm, x1, f1, whole,
                                  tol / kSeedPanels, 48);
    x0 = x1;
    f0 = f1;
  }
  converged = st.converged;
  achieved = st.worst_residual;
  return total;
}

}  // namespace detail

// Average total variation distance between the order-statistic distributions of
// P and Q over ranks 1..m+1:
//   eps = 1/(m+1) * sum_i 0.5 * integral |f_{P,(i)} - f_{Q,(i)}|.
// Integration runs over the union of the two distributions' [1e-9, 1-1e-9]
// quantile ranges with adaptive bisection to 1e-7 absolute per rank.
inline double tv_order_stat(const Distribution& p, const Distribution& q, long m) {
  if (m < 0) throw DomainError("tv_order_stat: m must be >= 0");
  const double lo = std::min(p.quantile(1e-9), q.quantile(1e-9));
  const double hi = std::max(p.quantile(1.0 - 1e-9), q.quantile(1.0 - 1e-9));

  const long n = m + 1;
  double eps = 0.0;
  for (long i = 1; i <= n; ++i) {
    auto integrand = [&](double x) {
      return std::abs(order_stat_density(p, n, i, x) - order_stat_density(q, n, i, x));
    };
    bool converged = true;
    double achieved = 0.0;
    const double integral = detail::adaptive_simpson(integrand, lo, hi, 1e-7, converged, achieved);
    if (!converged) {
      throw QuadratureError("tv_order_stat: quadrature did not reach tolerance 1e-7",
                            eps / static_cast<double>(n) + 0.5 * integral / static_cast<double>(n));
    }
    eps += 0.5 * integral;
  }
  eps /= static_cast<double>(n);
  if (eps < 0.0) eps = 0.0;
  if (eps > 1.0) eps = 1.0;
  return eps;
}

inline double tv_order_stat(const DistPtr& p, const DistPtr& q, long m) {
  return tv_order_stat(*p, *q, m);
}

}  // namespace spi
