#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spi/calibration.hpp"
#include "spi/distributions.hpp"
#include "spi/errors.hpp"
#include "spi/io.hpp"
#include "spi/rng.hpp"
#include "spi/scores.hpp"
#include "spi/subset_selection.hpp"

namespace spi {

enum class Method { OnlyReal, OnlySynth, Spi, SpiSubset, SpiAffine, LabelConditional };

inline Method method_from_string(const std::string& name) {
  if (name == "only-real") return Method::OnlyReal;
  if (name == "only-synth") return Method::OnlySynth;
  if (name == "spi") return Method::Spi;
  if (name == "spi-subset") return Method::SpiSubset;
  if (name == "spi-affine") return Method::SpiAffine;
  if (name == "label-conditional") return Method::LabelConditional;
  throw ConfigError("unknown method '" + name + "'");
}

inline std::string method_name(Method m) {
  switch (m) {
    case Method::OnlyReal: return "only-real";
    case Method::OnlySynth: return "only-synth";
    case Method::Spi: return "spi";
    case Method::SpiSubset: return "spi-subset";
    case Method::SpiAffine: return "spi-affine";
    case Method::LabelConditional: return "label-conditional";
  }
  return "?";
}

struct SubsetParams {
  long L = 0;  // number of synthetic groups
  long n = 0;  // scores per group
  long k = 0;  // groups selected
};

struct LabelSimConfig {
  std::string label;
  long m = 0;
  long N = 0;
  DistPtr p_dist;
  DistPtr q_dist;
};

struct TrialConfig {
  long m = 0;
  long N = 0;
  double alpha = 0.1;
  double beta = 0.4;
  DistPtr p_dist;
  DistPtr q_dist;
  long trials = 1;
  std::uint64_t master_seed = 0;
  Method method = Method::Spi;
  std::optional<SubsetParams> subset;
  std::vector<LabelSimConfig> labels;

  void validate() const {
    if (trials < 1) throw ConfigError("config: trials must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha outside (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("config: beta outside (0,1)");
    if (method == Method::LabelConditional) {
      if (labels.empty()) throw ConfigError("config: label-conditional needs a label universe");
      for (const auto& l : labels) {
        if (l.m < 0 || l.N < 1) throw ConfigError("config: label '" + l.label + "' needs m >= 0, N >= 1");
        if (!l.p_dist || !l.q_dist) throw ConfigError("config: label '" + l.label + "' missing distributions");
      }
      return;
    }
    if (m < 0) throw ConfigError("config: m must be >= 0");
    if (N < 1) throw ConfigError("config: N must be >= 1");
    if (!p_dist || !q_dist) throw ConfigError("config: p_dist and q_dist are required");
    if (method == Method::SpiAffine && (m < 2 || N < m)) {
      throw ConfigError("config: spi-affine needs m >= 2 and N >= m for the affine fit");
    }
    if (method == Method::SpiSubset) {
      if (!subset) throw ConfigError("config: spi-subset needs subset parameters {L, n, k}");
      if (subset->L < 1 || subset->n < 1) throw ConfigError("config: subset L and n must be >= 1");
      if (subset->k < 1 || subset->k > subset->L) throw ConfigError("config: subset k outside [1, L]");
      if (subset->L * subset->n != N) {
        throw ConfigError("config: spi-subset requires N == L * n");
      }
    } else if (subset) {
      throw ConfigError("config: subset parameters only apply to method spi-subset");
    }
  }

  static TrialConfig from_json(const nlohmann::json& j) {
    TrialConfig c;
    try {
      c.method = method_from_string(j.at("method").get<std::string>());
      c.alpha = j.at("alpha").get<double>();
      c.beta = j.value("beta", 0.4);
      c.trials = j.at("trials").get<long>();
      c.master_seed = j.at("master_seed").get<std::uint64_t>();
      if (c.method == Method::LabelConditional) {
        for (const auto& lj : j.at("labels")) {
          LabelSimConfig l;
          l.label = lj.at("label").get<std::string>();
          l.m = lj.at("m").get<long>();
          l.N = lj.at("N").get<long>();
          l.p_dist = dist_from_json(lj.at("p_dist"));
          l.q_dist = dist_from_json(lj.at("q_dist"));
          c.labels.push_back(std::move(l));
        }
      } else {
        c.m = j.at("m").get<long>();
        c.N = j.at("N").get<long>();
        c.p_dist = dist_from_json(j.at("p_dist"));
        c.q_dist = dist_from_json(j.at("q_dist"));
        if (j.contains("subset")) {
          const auto& sj = j.at("subset");
          c.subset = SubsetParams{sj.at("L").get<long>(), sj.at("n").get<long>(),
                                  sj.at("k").get<long>()};
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad simulation config: ") + e.what());
    }
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"method", method_name(method)}, {"alpha", alpha},
                     {"beta", beta},                   {"trials", trials},
                     {"master_seed", master_seed}};
    if (method == Method::LabelConditional) {
      nlohmann::json labels_j = nlohmann::json::array();
      for (const auto& l : labels) {
        labels_j.push_back({{"label", l.label}, {"m", l.m}, {"N", l.N},
                            {"p_dist", l.p_dist->to_json()}, {"q_dist", l.q_dist->to_json()}});
      }
      j["labels"] = labels_j;
    } else {
      j["m"] = m;
      j["N"] = N;
      j["p_dist"] = p_dist->to_json();
      j["q_dist"] = q_dist->to_json();
      if (subset) j["subset"] = {{"L", subset->L}, {"n", subset->n}, {"k", subset->k}};
    }
    return j;
  }
};

struct TrialRecord {
  long trial = 0;
  double threshold = 0.0;
  double coverage = 0.0;
  bool trivial = false;
};

struct LabelAggregate {
  std::string label;
  double mean_coverage = 0.0;
  CoverageBounds bounds;
};

struct TrialReport {
  nlohmann::json config;
  std::vector<TrialRecord> records;
  double mean_coverage = 0.0;
  double coverage_se = 0.0;  // sqrt(vbar (1 - vbar) / trials)
  double mean_threshold = 0.0;  // over trials with a finite cutoff; NaN if none
  double fraction_trivial = 0.0;
  double coverage_min = 0.0, coverage_q25 = 0.0, coverage_median = 0.0, coverage_q75 = 0.0,
         coverage_max = 0.0;
  std::optional<CoverageBounds> bounds;
  std::vector<LabelAggregate> label_aggregates;

  std::string to_csv() const {
    std::string out = "trial,threshold,coverage,trivial\n";
    for (const auto& r : records) {
      out += std::to_string(r.trial);
      out += ',';
      out += format_full(r.threshold);
      out += ',';
      out += format_full(r.coverage);
      out += ',';
      out += r.trivial ? '1' : '0';
      out += '\n';
    }
    return out;
  }

  nlohmann::json aggregates_json() const {
    nlohmann::json j{{"mean_coverage", mean_coverage},
                     {"coverage_se", coverage_se},
                     {"fraction_trivial", fraction_trivial},
                     {"coverage_quantiles",
                      {{"min", coverage_min},
                       {"q25", coverage_q25},
                       {"median", coverage_median},
                       {"q75", coverage_q75},
                       {"max", coverage_max}}},
                     {"trials", static_cast<long>(records.size())},
                     {"config", config}};
    j["mean_threshold"] = std::isnan(mean_threshold)
                              ? nlohmann::json(nullptr)
                              : nlohmann::json(mean_threshold);
    if (bounds) j["bounds"] = to_json(*bounds);
    if (!label_aggregates.empty()) {
      nlohmann::json per_label = nlohmann::json::array();
      for (const auto& la : label_aggregates) {
        per_label.push_back({{"label", la.label},
                             {"mean_coverage", la.mean_coverage},
                             {"bounds", to_json(la.bounds)}});
      }
      j["per_label"] = per_label;
    }
    return j;
  }
};

namespace detail {

inline ScoreVector draw_scores(const Distribution& dist, long count, std::mt19937_64& eng) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) values.push_back(dist.sample(eng));
  return ScoreVector(std::move(values));
}

inline double coverage_at(const Distribution& p, double cutoff) {
  if (cutoff == kPlusInf) return 1.0;
  if (cutoff == kMinusInf) return 0.0;
  return p.cdf(cutoff);
}

// Nearest-rank quantile of an already sorted vector.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto n = static_cast<long>(sorted.size());
  long idx = static_cast<long>(std::ceil(q * static_cast<double>(n)));
  if (idx < 1) idx = 1;
  if (idx > n) idx = n;
  return sorted[static_cast<std::size_t>(idx - 1)];
}

// Run fn(trial) for trial in [0, trials) on `workers` threads, detached from the
// schedule: results land in per-trial slots and every trial derives its own
// randomness from (master_seed, trial), so the output is identical at any
// worker count.
template <typename Fn>
void for_each_trial(long trials, int workers, Fn&& fn) {
  if (workers < 1) workers = 1;
  if (workers == 1 || trials == 1) {
    for (long t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (long t = w; t < trials; t += workers) fn(t);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace detail

// Deterministic Monte Carlo coverage experiment. Per-trial coverage is the
// exact probability P.cdf(cutoff) -- P is known here, so there is no reason to
// add test-sampling noise on top of calibration noise.
inline TrialReport run_coverage_experiment(const TrialConfig& config, int workers = 1) {
  config.validate();

  TrialReport report;
  report.config = config.to_json();
  report.records.resize(static_cast<std::size_t>(config.trials));

  if (config.method == Method::LabelConditional) {
    std::vector<WindowTable> tables;
    tables.reserve(config.labels.size());
    for (const auto& l : config.labels) tables.push_back(window_table(l.m, l.N, config.beta));

    std::vector<std::vector<double>> label_cov(config.labels.size());
    for (auto& v : label_cov) v.resize(static_cast<std::size_t>(config.trials));

    detail::for_each_trial(config.trials, workers, [&](long t) {
      auto eng = make_engine(config.master_seed, static_cast<std::uint64_t>(t));
      double cov_sum = 0.0, thr_sum = 0.0;
      long thr_count = 0;
      bool all_trivial = true;
      for (std::size_t li = 0; li < config.labels.size(); ++li) {
        const auto& l = config.labels[li];
        ScoreVector real = detail::draw_scores(*l.p_dist, l.m, eng);
        ScoreVector synth = detail::draw_scores(*l.q_dist, l.N, eng);
        const double cutoff = spi_threshold(real, synth, config.alpha, tables[li]).cutoff;
        const double cov = detail::coverage_at(*l.p_dist, cutoff);
        label_cov[li][static_cast<std::size_t>(t)] = cov;
        cov_sum += cov;
        if (std::isfinite(cutoff)) {
          thr_sum += cutoff;
          ++thr_count;
        }
        if (cutoff != kPlusInf) all_trivial = false;
      }
      TrialRecord& rec = report.records[static_cast<std::size_t>(t)];
      rec.trial = t;
      rec.coverage = cov_sum / static_cast<double>(config.labels.size());
      rec.threshold = thr_count > 0 ? thr_sum / static_cast<double>(thr_count)
                                    : std::numeric_limits<double>::quiet_NaN();
      rec.trivial = all_trivial;
    });

    for (std::size_t li = 0; li < config.labels.size(); ++li) {
      const auto& l = config.labels[li];
      double sum = 0.0;
      for (double c : label_cov[li]) sum += c;
      report.label_aggregates.push_back(
          {l.label, sum / static_cast<double>(config.trials),
           worst_case_bounds(l.m, l.N, config.alpha, config.beta)});
    }
  } else {
    // The window table depends only on (m, N, beta); build it once and share.
    std::optional<WindowTable> table;
    if (config.method == Method::Spi || config.method == Method::SpiAffine) {
      table = window_table(config.m, config.N, config.beta);
    } else if (config.method == Method::SpiSubset) {
      table = window_table(config.m, config.subset->n * config.subset->k, config.beta);
    }
    if (table) report.bounds = worst_case_bounds(*table, config.alpha);

    detail::for_each_trial(config.trials, workers, [&](long t) {
      auto eng = make_engine(config.master_seed, static_cast<std::uint64_t>(t));
      ScoreVector real = detail::draw_scores(*config.p_dist, config.m, eng);
      ScoreVector synth = detail::draw_scores(*config.q_dist, config.N, eng);

      double cutoff = 0.0;
      switch (config.method) {
        case Method::OnlyReal:
          cutoff = split_conformal_threshold(real, config.alpha).cutoff;
          break;
        case Method::OnlySynth:
          cutoff = split_conformal_threshold(synth, config.alpha).cutoff;
          break;
        case Method::Spi:
          cutoff = spi_threshold(real, synth, config.alpha, *table).cutoff;
          break;
        case Method::SpiAffine: {
          ScoreVector adjusted = apply(affine_adjust_fit(real, synth), synth);
          cutoff = spi_threshold(real, adjusted, config.alpha, *table).cutoff;
          break;
        }
        case Method::SpiSubset: {
          GroupedScores grouped;
          const auto& vals = synth.values();
          for (long l = 0; l < config.subset->L; ++l) {
            std::vector<double> group(vals.begin() + l * config.subset->n,
                                      vals.begin() + (l + 1) * config.subset->n);
            grouped.groups.push_back({"g" + std::to_string(l), ScoreVector(std::move(group))});
          }
          auto selected = select_subset_indices(real, grouped, config.subset->k);
          cutoff = spi_threshold(real, pool_selected(grouped, selected), config.alpha, *table).cutoff;
          break;
        }
        case Method::LabelConditional:
          break;  // handled above
      }

      report.records[static_cast<std::size_t>(t)] =
          TrialRecord{t, cutoff, detail::coverage_at(*config.p_dist, cutoff), cutoff == kPlusInf};
    });
  }

  // Aggregate sequentially in trial order so the report is schedule-independent.
  double cov_sum = 0.0, thr_sum = 0.0;
  long thr_count = 0, trivial_count = 0;
  for (const auto& r : report.records) {
    cov_sum += r.coverage;
    if (std::isfinite(r.threshold)) {
      thr_sum += r.threshold;
      ++thr_count;
    }
    if (r.trivial) ++trivial_count;
  }
  const double n = static_cast<double>(config.trials);
  report.mean_coverage = cov_sum / n;
  report.coverage_se = std::sqrt(report.mean_coverage * (1.0 - report.mean_coverage) / n);
  report.mean_threshold =
      thr_count > 0 ? thr_sum / static_cast<double>(thr_count) : std::numeric_limits<double>::quiet_NaN();
  report.fraction_trivial = static_cast<double>(trivial_count) / n;

  std::vector<double> sorted_cov;
  sorted_cov.reserve(report.records.size());
  for (const auto& r : report.records) sorted_cov.push_back(r.coverage);
  std::sort(sorted_cov.begin(), sorted_cov.end());
  report.coverage_min = sorted_cov.front();
  report.coverage_q25 = detail::sorted_quantile(sorted_cov, 0.25);
  report.coverage_median = detail::sorted_quantile(sorted_cov, 0.5);
  report.coverage_q75 = detail::sorted_quantile(sorted_cov, 0.75);
  report.coverage_max = sorted_cov.back();
  return report;
}

// Worst-case bound sweep over a parameter grid; one row per combination.
inline std::vector<CoverageBounds> run_bound_sweep(const std::vector<long>& m_values,
                                                   const std::vector<double>& beta_values,
                                                   const std::vector<double>& alpha_values,
                                                   long N) {
  if (m_values.empty() || beta_values.empty() || alpha_values.empty()) {
    throw ConfigError("run_bound_sweep: all grids must be nonempty");
  }
  std::vector<CoverageBounds> rows;
  rows.reserve(m_values.size() * beta_values.size() * alpha_values.size());
  for (long m : m_values) {
    for (double beta : beta_values) {
      WindowTable table = window_table(m, N, beta);
      for (double alpha : alpha_values) rows.push_back(worst_case_bounds(table, alpha));
    }
  }
  return rows;
}

inline std::string bound_sweep_csv(const std::vector<CoverageBounds>& rows) {
  std::string out = "m,N,alpha,beta,lower,upper\n";
  for (const auto& b : rows) {
    out += std::to_string(b.m) + ',' + std::to_string(b.N) + ',' + format_full(b.alpha) + ',' +
           format_full(b.beta) + ',' + format_full(b.lower) + ',' + format_full(b.upper) + '\n';
  }
  return out;
}

struct WindowContainmentReport {
  long m = 0;
  long N = 0;
  double beta = 0.0;
  long trials = 0;
  std::vector<double> hit_frequency;  // per rank r in [m+1]
};

// Empirical check of the window-containment guarantee: with P = Q continuous,
// each real order statistic falls between its window ranks with probability
// >= 1 - beta. The guaranteed event is on the rank R_r of S_(r) among the
// synthetic scores, R- <= R_r <= R+, i.e. S~_(R- - 1) < S_(r) <= S~_(R+). The
// closed interval [S~_(R-), S~_(R+)] loses the point mass at rank R- and its
// probability can drop below 1 - beta (0.58797 for rank 3 at m = 15, N = 200,
// beta = 0.4, by exact computation).
inline WindowContainmentReport run_window_containment_check(long m, long N, double beta, const DistPtr& dist, long trials,
                                     std::uint64_t master_seed, int workers = 1) {
  if (trials < 1) throw ConfigError("run_window_containment_check: trials must be >= 1");
  WindowTable table = window_table(m, N, beta);

  std::vector<std::vector<std::uint8_t>> hits(static_cast<std::size_t>(m + 1));
  for (auto& h : hits) h.resize(static_cast<std::size_t>(trials));

  detail::for_each_trial(trials, workers, [&](long t) {
    auto eng = make_engine(master_seed, static_cast<std::uint64_t>(t));
    ScoreVector real = detail::draw_scores(*dist, m + 1, eng);
    ScoreVector synth = detail::draw_scores(*dist, N, eng);
    for (long r = 1; r <= m + 1; ++r) {
      const auto& [lo, hi] = table.row(r);
      const double s = real.order_stat(r);
      const bool hit = synth.order_stat(lo - 1) < s && s <= synth.order_stat(hi);
      hits[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(t)] = hit ? 1 : 0;
    }
  });

  WindowContainmentReport report{m, N, beta, trials, {}};
  report.hit_frequency.reserve(static_cast<std::size_t>(m + 1));
  for (const auto& h : hits) {
    long count = 0;
    for (std::uint8_t v : h) count += v;
    report.hit_frequency.push_back(static_cast<double>(count) / static_cast<double>(trials));
  }
  return report;
}

// Compare the direct-construction membership rule against the fast cutoff on a
// candidate grid; returns how many candidates the two sides classify
// differently (zero under continuity).
inline long count_equivalence_disagreements(const ScoreVector& real, const ScoreVector& synth,
                                            double alpha, const WindowTable& table,
                                            const std::vector<double>& candidates) {
  const PredictionThreshold fast = spi_threshold(real, synth, alpha, table);
  long disagreements = 0;
  for (double c : candidates) {
    const bool direct = spi_member_direct(c, real, synth, alpha, table);
    if (direct != fast.contains(c)) ++disagreements;
  }
  return disagreements;
}

// Grid of every pooled score nudged down/up by eps, plus points beyond both
// extremes. Avoids landing exactly on a synthetic score, where the two
// constructions are allowed to differ.
inline std::vector<double> equivalence_grid(const ScoreVector& real, const ScoreVector& synth) {
  const double lo = std::min(real.min(), synth.min());
  const double hi = std::max(real.max(), synth.max());
  const double eps = 1e-9 * std::max(1.0, hi - lo);
  std::vector<double> grid;
  grid.reserve(2 * static_cast<std::size_t>(real.size() + synth.size()) + 2);
  grid.push_back(lo - 1.0);
  for (const auto* scores : {&real, &synth}) {
    for (double v : scores->sorted()) {
      grid.push_back(v - eps);
      grid.push_back(v + eps);
    }
  }
  grid.push_back(hi + 1.0);
  return grid;
}

struct EquivalenceReport {
  long instances = 0;
  long disagreements = 0;
};

// Randomized fast-form equivalence check over (m, N, alpha, beta) instances
// with continuous scores.
inline EquivalenceReport run_equivalence_check(long instances, std::uint64_t master_seed,
                                               int workers = 1) {
  if (instances < 1) throw ConfigError("run_equivalence_check: instances must be >= 1");
  std::vector<long> per_instance(static_cast<std::size_t>(instances));

  detail::for_each_trial(instances, workers, [&](long i) {
    auto eng = make_engine(master_seed, static_cast<std::uint64_t>(i));
    const long m = uniform_int_in(eng, 2, 30);
    const long N = uniform_int_in(eng, 10, 2000);
    const double alpha = uniform_in(eng, 0.01, 0.5);
    const double beta = uniform_in(eng, 0.05, 0.95);
    NormalDist standard(0.0, 1.0);
    ScoreVector real = detail::draw_scores(standard, m, eng);
    ScoreVector synth = detail::draw_scores(standard, N, eng);
    WindowTable table = window_table(m, N, beta);
    per_instance[static_cast<std::size_t>(i)] =
        count_equivalence_disagreements(real, synth, alpha, table, equivalence_grid(real, synth));
  });

  EquivalenceReport report{instances, 0};
  for (long d : per_instance) report.disagreements += d;
  return report;
}

}  // namespace spi
