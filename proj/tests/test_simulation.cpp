#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "spi/analysis.hpp"
#include "spi/simulation.hpp"

namespace {

spi::TrialConfig base_config() {
  spi::TrialConfig c;
  c.m = 15;
  c.N = 1000;
  c.alpha = 0.1;
  c.beta = 0.4;
  c.trials = 2000;
  c.master_seed = 20250810;
  c.method = spi::Method::Spi;
  c.p_dist = spi::make_normal(0.0, 1.0);
  c.q_dist = spi::make_normal(0.0, 1.0);
  return c;
}

}  // namespace

TEST_CASE("reports are identical at any worker count") {
  auto config = base_config();
  config.trials = 128;
  auto one = spi::run_coverage_experiment(config, 1);
  auto eight = spi::run_coverage_experiment(config, 8);
  CHECK(one.to_csv() == eight.to_csv());
  CHECK(one.aggregates_json().dump() == eight.aggregates_json().dump());
}

TEST_CASE("config JSON round trip") {
  auto config = base_config();
  config.method = spi::Method::SpiSubset;
  config.subset = spi::SubsetParams{50, 20, 7};
  auto rebuilt = spi::TrialConfig::from_json(config.to_json());
  CHECK(rebuilt.to_json() == config.to_json());
}

TEST_CASE("config validation rejects bad combinations") {
  auto config = base_config();
  config.trials = 0;
  CHECK_THROWS_AS(config.validate(), spi::ConfigError);

  config = base_config();
  config.subset = spi::SubsetParams{10, 10, 2};
  CHECK_THROWS_AS(config.validate(), spi::ConfigError);  // subset params without spi-subset

  config = base_config();
  config.method = spi::Method::SpiSubset;
  config.subset = spi::SubsetParams{10, 10, 2};  // L*n != N
  CHECK_THROWS_AS(config.validate(), spi::ConfigError);

  config = base_config();
  config.method = spi::Method::LabelConditional;
  CHECK_THROWS_AS(config.validate(), spi::ConfigError);  // no labels

  CHECK_THROWS_AS(spi::method_from_string("boosted"), spi::ConfigError);
}

TEST_CASE("reported coverage SE follows the binomial formula") {
  auto config = base_config();
  config.trials = 400;
  auto report = spi::run_coverage_experiment(config, 2);
  const double vbar = report.mean_coverage;
  CHECK(report.coverage_se == std::sqrt(vbar * (1.0 - vbar) / 400.0));
  // Law-of-total-variance decomposition over the exact per-trial coverages.
  double mean_v1mv = 0.0, var = 0.0;
  for (const auto& r : report.records) {
    mean_v1mv += r.coverage * (1.0 - r.coverage);
    var += (r.coverage - vbar) * (r.coverage - vbar);
  }
  mean_v1mv /= 400.0;
  var /= 400.0;
  CHECK_THAT(vbar * (1.0 - vbar), Catch::Matchers::WithinRel(mean_v1mv + var, 1e-10));
}

TEST_CASE("only-real at m = 18, alpha = 0.05 is always trivial") {
  auto config = base_config();
  config.method = spi::Method::OnlyReal;
  config.m = 18;
  config.alpha = 0.05;
  config.trials = 200;
  auto report = spi::run_coverage_experiment(config);
  CHECK(report.fraction_trivial == 1.0);
  CHECK(report.mean_coverage == 1.0);
  for (const auto& r : report.records) REQUIRE(r.trivial);
}

TEST_CASE("split conformal coverage sits inside its finite-sample band") {
  spi::TrialConfig config;
  config.method = spi::Method::OnlyReal;
  config.m = 100;
  config.N = 1;  // unused by only-real, but must be a valid count
  config.alpha = 0.1;
  config.beta = 0.4;
  config.trials = 4000;
  config.master_seed = 31;
  config.p_dist = spi::make_uniform(0.0, 1.0);
  config.q_dist = spi::make_uniform(0.0, 1.0);
  auto report = spi::run_coverage_experiment(config, 4);
  const double lo = 0.9 - 3.0 * report.coverage_se;
  const double hi = 0.9 + 1.0 / 101.0 + 3.0 * report.coverage_se;
  CHECK(report.mean_coverage >= lo);
  CHECK(report.mean_coverage <= hi);
}

TEST_CASE("only-synth under a heavy downward shift undercovers badly") {
  auto config = base_config();
  config.method = spi::Method::OnlySynth;
  config.q_dist = spi::make_normal(-10.0, 1.0);
  config.trials = 500;
  auto report = spi::run_coverage_experiment(config, 4);
  CHECK(report.mean_coverage < 0.2);
}

TEST_CASE("worst-case bounds hold under an arbitrary shift") {
  auto config = base_config();
  config.q_dist = spi::make_normal(5.0, 1.0);
  config.trials = 3000;
  auto report = spi::run_coverage_experiment(config, 4);
  REQUIRE(report.bounds.has_value());
  CHECK(report.bounds->lower == 0.8125);
  CHECK(report.bounds->upper == 0.9375);
  CHECK(report.mean_coverage >= report.bounds->lower - 3.0 * report.coverage_se);
  CHECK(report.mean_coverage <= report.bounds->upper + 3.0 * report.coverage_se);
}

TEST_CASE("coverage at P = Q is tight around the target") {
  auto config = base_config();
  config.trials = 3000;
  auto report = spi::run_coverage_experiment(config, 4);
  CHECK(report.mean_coverage >= 1.0 - config.alpha - config.beta);
  CHECK(report.mean_coverage <= 1.0 - config.alpha + config.beta + 1.0 / 1001.0);
  CHECK_THAT(report.mean_coverage, Catch::Matchers::WithinAbs(0.9, 0.03));
}

TEST_CASE("coverage band with the quadrature epsilon under a mild shift") {
  auto config = base_config();
  config.N = 300;
  config.q_dist = spi::make_normal(0.5, 1.0);
  config.trials = 2000;
  auto report = spi::run_coverage_experiment(config, 4);
  const double eps = spi::tv_order_stat(config.p_dist, config.q_dist, config.m);
  const double lo = 1.0 - config.alpha - config.beta - eps - 3.0 * report.coverage_se;
  const double hi = 1.0 - config.alpha + config.beta + eps + 1.0 / 301.0 + 3.0 * report.coverage_se;
  CHECK(report.mean_coverage >= lo);
  CHECK(report.mean_coverage <= hi);
}

TEST_CASE("affine-adjusted synthetic scores keep the worst-case bounds") {
  auto config = base_config();
  config.method = spi::Method::SpiAffine;
  config.q_dist = spi::make_normal(5.0, 1.0);
  config.trials = 2000;
  auto report = spi::run_coverage_experiment(config, 4);
  REQUIRE(report.bounds.has_value());
  CHECK(report.mean_coverage >= report.bounds->lower - 3.0 * report.coverage_se);
  CHECK(report.mean_coverage <= report.bounds->upper + 3.0 * report.coverage_se);
}

TEST_CASE("spi-subset with k = L matches spi on the pooled set") {
  auto config = base_config();
  config.N = 200;
  config.trials = 100;
  auto pooled = spi::run_coverage_experiment(config, 2);

  config.method = spi::Method::SpiSubset;
  config.subset = spi::SubsetParams{10, 20, 10};
  auto subset = spi::run_coverage_experiment(config, 2);

  REQUIRE(pooled.records.size() == subset.records.size());
  for (std::size_t i = 0; i < pooled.records.size(); ++i) {
    REQUIRE(pooled.records[i].threshold == subset.records[i].threshold);
    REQUIRE(pooled.records[i].coverage == subset.records[i].coverage);
  }
}

TEST_CASE("subset selection keeps coverage within the n*k bounds under shift") {
  auto config = base_config();
  config.method = spi::Method::SpiSubset;
  config.N = 300;
  config.subset = spi::SubsetParams{20, 15, 5};
  config.trials = 1500;
  // Half the synthetic groups resemble the real distribution, half sit far off.
  config.q_dist = spi::make_mixture(0.5, spi::make_normal(0.0, 1.0), spi::make_normal(4.0, 1.0));
  auto report = spi::run_coverage_experiment(config, 4);
  REQUIRE(report.bounds.has_value());
  CHECK(report.bounds->N == 75);
  CHECK(report.mean_coverage >= report.bounds->lower - 3.0 * report.coverage_se);
  CHECK(report.mean_coverage <= report.bounds->upper + 3.0 * report.coverage_se);
}

TEST_CASE("bound sweep covers the grid and tightens with m") {
  auto rows = spi::run_bound_sweep({5, 15, 50}, {0.4}, {0.02, 0.05, 0.1}, 1000);
  REQUIRE(rows.size() == 9);
  for (const auto& b : rows) {
    const double lc = b.lower * static_cast<double>(b.m + 1);
    REQUIRE(std::abs(lc - std::round(lc)) < 1e-9);
  }
  auto width = [&](long m, double alpha) {
    for (const auto& b : rows) {
      if (b.m == m && b.alpha == alpha) return b.upper - b.lower;
    }
    FAIL("row not found");
    return 0.0;
  };
  CHECK(width(50, 0.05) <= width(5, 0.05));
  CHECK(width(50, 0.1) <= width(15, 0.1));
  CHECK_THROWS_AS(spi::run_bound_sweep({}, {0.4}, {0.1}, 100), spi::ConfigError);

  const std::string csv = spi::bound_sweep_csv(rows);
  CHECK(csv.rfind("m,N,alpha,beta,lower,upper\n", 0) == 0);
}

TEST_CASE("spi-affine configs without enough real scores are rejected upfront") {
  auto config = base_config();
  config.method = spi::Method::SpiAffine;
  config.m = 1;
  CHECK_THROWS_AS(config.validate(), spi::ConfigError);
}

TEST_CASE("spi-subset bounds use the selected size n*k") {
  auto config = base_config();
  config.method = spi::Method::SpiSubset;
  config.N = 200;
  config.subset = spi::SubsetParams{10, 20, 4};
  config.trials = 50;
  auto report = spi::run_coverage_experiment(config, 2);
  REQUIRE(report.bounds.has_value());
  CHECK(report.bounds->N == 80);
}

TEST_CASE("label-conditional simulation reports per-label aggregates") {
  spi::TrialConfig config;
  config.method = spi::Method::LabelConditional;
  config.alpha = 0.1;
  config.beta = 0.4;
  config.trials = 300;
  config.master_seed = 5;
  config.labels.push_back({"a", 10, 300, spi::make_normal(0.0, 1.0), spi::make_normal(0.0, 1.0)});
  config.labels.push_back({"b", 5, 150, spi::make_normal(1.0, 2.0), spi::make_normal(3.0, 2.0)});
  auto report = spi::run_coverage_experiment(config, 3);

  REQUIRE(report.label_aggregates.size() == 2);
  for (const auto& la : report.label_aggregates) {
    REQUIRE(la.mean_coverage >= la.bounds.lower - 0.05);
    REQUIRE(la.mean_coverage <= la.bounds.upper + 0.05);
  }
  CHECK(report.label_aggregates[0].bounds.N == 300);
  CHECK(report.label_aggregates[1].bounds.N == 150);

  auto rerun = spi::run_coverage_experiment(config, 1);
  CHECK(report.to_csv() == rerun.to_csv());
}

TEST_CASE("window containment frequencies respect the 1 - beta floor") {
  auto report = spi::run_window_containment_check(15, 200, 0.4, spi::make_normal(0.0, 1.0), 4000, 99, 4);
  REQUIRE(report.hit_frequency.size() == 16);
  const double floor = 0.6 - 3.0 * std::sqrt(0.6 * 0.4 / 4000.0);
  for (double f : report.hit_frequency) REQUIRE(f >= floor);

  auto uniform = spi::run_window_containment_check(15, 200, 0.4, spi::make_uniform(0.0, 1.0), 4000, 99, 4);
  for (std::size_t r = 0; r < 16; ++r) {
    // Rank-based, hence distribution-free under P = Q.
    REQUIRE(std::abs(report.hit_frequency[r] - uniform.hit_frequency[r]) <=
            4.0 * std::sqrt(2.0 * 0.25 / 4000.0));
  }

  auto narrow = spi::run_window_containment_check(8, 100, 0.99, spi::make_normal(0.0, 1.0), 4000, 7, 4);
  const double narrow_floor = 0.01 - 3.0 * std::sqrt(0.01 * 0.99 / 4000.0);
  for (double f : narrow.hit_frequency) REQUIRE(f >= narrow_floor);
}

TEST_CASE("equivalence harness on a tiny exhaustive instance") {
  spi::ScoreVector real({0.5});
  spi::ScoreVector synth({0.3, 0.7});
  auto table = spi::window_table(1, 2, 0.5);
  std::vector<double> grid;
  for (double c = -1.0; c <= 2.0; c += 0.0041) grid.push_back(c);
  CHECK(spi::count_equivalence_disagreements(real, synth, 0.3, table, grid) == 0);
}

TEST_CASE("equivalence harness reports tie-induced disagreements instead of hiding them") {
  // Continuity is violated on purpose: everything is a tie.
  spi::ScoreVector real({1.0, 1.0, 1.0});
  spi::ScoreVector synth({1.0, 1.0, 1.0, 1.0});
  auto table = spi::window_table(3, 4, 0.5);
  std::vector<double> grid;
  for (double c = 0.0; c <= 2.0; c += 0.01) grid.push_back(c);
  const long disagreements = spi::count_equivalence_disagreements(real, synth, 0.3, table, grid);
  CHECK(disagreements >= 0);
  SUCCEED("tied instance handled deterministically; disagreements = " +
          std::to_string(disagreements));
}
