#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracle_helpers.hpp"
#include "spi/analysis.hpp"
#include "spi/distributions.hpp"

using Catch::Matchers::WithinAbs;

TEST_CASE("distribution cdf/quantile round trips") {
  std::vector<spi::DistPtr> dists = {
      spi::make_normal(0.0, 1.0),
      spi::make_normal(-3.0, 0.25),
      spi::make_uniform(-1.0, 4.0),
      spi::make_lognormal(0.5, 0.8),
      spi::make_locscale(spi::make_lognormal(0.0, 1.0), 2.0, 0.5),
      spi::make_mixture(0.3, spi::make_normal(-2.0, 1.0), spi::make_normal(3.0, 0.5)),
  };
  for (const auto& d : dists) {
    for (double p = 0.001; p < 1.0; p += 0.0201) {
      REQUIRE_THAT(d->cdf(d->quantile(p)), WithinAbs(p, 1e-9));
    }
    double prev = -1e308;
    for (double x = -8.0; x <= 8.0; x += 0.1) {
      REQUIRE(d->pdf(x) >= 0.0);
      const double f = d->cdf(x);
      REQUIRE(f >= prev);
      prev = f;
    }
  }
}

TEST_CASE("normal quantile reference values") {
  auto normal = spi::make_normal(0.0, 1.0);
  CHECK_THAT(normal->quantile(0.975), WithinAbs(1.959963984540054, 1e-12));
  CHECK_THAT(normal->quantile(0.5), WithinAbs(0.0, 1e-15));
  CHECK_THAT(normal->quantile(0.05), WithinAbs(-1.6448536269514722, 1e-12));
}

TEST_CASE("distribution JSON round trip") {
  auto mix = spi::make_mixture(0.25, spi::make_uniform(0.0, 1.0),
                               spi::make_locscale(spi::make_normal(0.0, 1.0), 1.0, 2.0));
  auto rebuilt = spi::dist_from_json(mix->to_json());
  for (double x = -4.0; x <= 5.0; x += 0.37) {
    REQUIRE(rebuilt->cdf(x) == mix->cdf(x));
    REQUIRE(rebuilt->pdf(x) == mix->pdf(x));
  }
  CHECK_THROWS_AS(spi::dist_from_json(nlohmann::json{{"family", "cauchy"}}), spi::ConfigError);
  CHECK_THROWS_AS(spi::dist_from_json(nlohmann::json{{"family", "normal"}, {"mu", 0.0}}),
                  spi::ConfigError);
  CHECK_THROWS_AS(spi::dist_from_json(nlohmann::json::array()), spi::ConfigError);
}

TEST_CASE("sampling is a pure function of the engine state") {
  auto mix = spi::make_mixture(0.5, spi::make_normal(0.0, 1.0), spi::make_lognormal(0.0, 0.5));
  auto e1 = spi::make_engine(99, 4);
  auto e2 = spi::make_engine(99, 4);
  for (int i = 0; i < 100; ++i) REQUIRE(mix->sample(e1) == mix->sample(e2));
}

TEST_CASE("order_stat_density closed forms") {
  auto normal = spi::make_normal(0.0, 1.0);
  for (double x = -3.0; x <= 3.0; x += 0.5) {
    REQUIRE(spi::order_stat_density(*normal, 1, 1, x) == normal->pdf(x));
  }
  auto unit = spi::make_uniform(0.0, 1.0);
  CHECK_THAT(spi::order_stat_density(*unit, 2, 2, 0.5), WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(spi::order_stat_density(*unit, 2, 3, 0.5), spi::DomainError);
  CHECK_THROWS_AS(spi::order_stat_density(*unit, 2, 0, 0.5), spi::DomainError);
}

TEST_CASE("order_stat_density integrates to one") {
  auto normal = spi::make_normal(0.0, 1.0);
  auto density = [&](double x) { return spi::order_stat_density(*normal, 16, 8, x); };
  const double integral = oracle::composite_simpson(density, -9.0, 9.0, 20000);
  CHECK_THAT(integral, WithinAbs(1.0, 1e-6));
}

TEST_CASE("tv_order_stat vanishes at P = Q") {
  auto normal = spi::make_normal(0.4, 1.3);
  CHECK_THAT(spi::tv_order_stat(normal, normal, 0), WithinAbs(0.0, 1e-9));
  CHECK_THAT(spi::tv_order_stat(normal, normal, 7), WithinAbs(0.0, 1e-9));
}

TEST_CASE("tv_order_stat matches the Gaussian shift closed form at m = 0") {
  // d_TV(N(0,1), N(mu,1)) = 2 Phi(mu/2) - 1.
  const double closed_form = std::erfc(-0.25 * std::sqrt(2.0)) - 1.0;
  const double eps = spi::tv_order_stat(spi::make_normal(0.0, 1.0), spi::make_normal(1.0, 1.0), 0);
  CHECK_THAT(eps, WithinAbs(closed_form, 1e-6));
  CHECK_THAT(eps, WithinAbs(0.382925, 1e-6));
}

TEST_CASE("tv_order_stat grows with the shift and is symmetric") {
  auto base = spi::make_normal(0.0, 1.0);
  double prev = 0.0;
  for (double shift : {0.5, 1.0, 2.0}) {
    const double eps = spi::tv_order_stat(base, spi::make_normal(shift, 1.0), 15);
    REQUIRE(eps > prev);
    REQUIRE(eps >= 0.0);
    REQUIRE(eps <= 1.0);
    prev = eps;
  }
  auto shifted = spi::make_normal(0.7, 1.0);
  CHECK_THAT(spi::tv_order_stat(base, shifted, 4), WithinAbs(spi::tv_order_stat(shifted, base, 4), 1e-12));
}
