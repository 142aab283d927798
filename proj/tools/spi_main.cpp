// Command-line front door for the SPI calibration library: worst-case bounds,
// calibration from score CSVs, beta selection, subset selection, and the
// deterministic Monte Carlo harness.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spi/spi.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitContract = 1;
constexpr int kExitNoSolution = 2;
constexpr int kExitIo = 3;

std::string human(double x) {
  if (x == spi::kPlusInf) return "+inf";
  if (x == spi::kMinusInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

struct CalibrateOptions {
  std::string real_path;
  std::string synth_path;
  double alpha = 0.1;
  double beta = 0.4;
  bool label_conditional = false;
  bool only_real = false;
  bool json = false;
  bool windows = false;
  std::optional<double> jitter_delta;
  std::uint64_t seed = 0;
};

spi::ScoreVector maybe_jitter(const spi::ScoreVector& scores,
                              const std::optional<double>& jitter_delta, std::uint64_t seed,
                              std::uint64_t stream) {
  if (!jitter_delta) return scores;
  const double delta =
      *jitter_delta > 0.0 ? *jitter_delta : spi::default_jitter_delta(scores);
  auto eng = spi::make_engine(seed, stream);
  return spi::jitter(scores, delta, eng);
}

int run_calibrate_marginal(const CalibrateOptions& opt) {
  spi::ScoreVector real = maybe_jitter(spi::read_score_csv(opt.real_path), opt.jitter_delta,
                                       opt.seed, 1);
  spi::ScoreVector synth = maybe_jitter(spi::read_score_csv(opt.synth_path), opt.jitter_delta,
                                        opt.seed, 2);

  if (opt.only_real) {
    spi::PredictionThreshold t = spi::split_conformal_threshold(real, opt.alpha);
    if (opt.json) {
      nlohmann::json j{{"method", "only-real"}, {"threshold", spi::to_json(t)}, {"m", real.size()}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "method    only-real\n";
      std::cout << "m         " << real.size() << "\n";
      std::cout << "threshold " << human(t.cutoff) << (t.trivial() ? "  (trivial set)" : "")
                << "\n";
    }
    return kExitOk;
  }

  if (!real.distinct() || !synth.distinct()) {
    std::cerr << "error: scores contain ties; the guarantees assume a continuous score "
                 "distribution. Re-run with --jitter to add negligible Uniform[-delta,delta] "
                 "noise.\n";
    return kExitContract;
  }

  spi::WindowTable table = spi::window_table(real.size(), synth.size(), opt.beta);
  spi::PredictionThreshold t = spi::spi_threshold(real, synth, opt.alpha, table);
  spi::CoverageBounds b = spi::worst_case_bounds(table, opt.alpha);

  if (opt.json) {
    nlohmann::json j{{"method", "spi"},
                     {"threshold", spi::to_json(t)},
                     {"bounds", spi::to_json(b)}};
    if (opt.windows) j["window_table"] = spi::to_json(table);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "method    spi\n";
    std::cout << "m         " << real.size() << "\n";
    std::cout << "N         " << synth.size() << "\n";
    std::cout << "threshold " << human(t.cutoff) << (t.trivial() ? "  (trivial set)" : "")
              << "\n";
    std::cout << "bounds    [" << human(b.lower) << ", " << human(b.upper) << "]\n";
    if (opt.windows) {
      std::cout << "windows   r -> (R-, R+)\n";
      for (long r = 1; r <= table.m + 1; ++r) {
        const auto& [lo, hi] = table.row(r);
        std::cout << "          " << r << " -> (" << lo << ", " << hi << ")\n";
      }
    }
  }
  return kExitOk;
}

int run_calibrate_label_conditional(const CalibrateOptions& opt) {
  spi::LabeledScoreSet real = spi::read_labeled_csv(opt.real_path);
  spi::LabeledScoreSet synth = spi::read_labeled_csv(opt.synth_path);

  if (opt.jitter_delta) {
    auto jitter_set = [&](spi::LabeledScoreSet& set, std::uint64_t stream) {
      std::vector<double> raw;
      raw.reserve(set.entries.size());
      for (const auto& [l, s] : set.entries) raw.push_back(s);
      spi::ScoreVector jittered =
          maybe_jitter(spi::ScoreVector(raw), opt.jitter_delta, opt.seed, stream);
      for (std::size_t i = 0; i < set.entries.size(); ++i) {
        set.entries[i].second = jittered.values()[i];
      }
    };
    jitter_set(real, 1);
    jitter_set(synth, 2);
  }
  if (!real.all_scores().distinct() || !synth.all_scores().distinct()) {
    std::cerr << "error: scores contain ties; the guarantees assume a continuous score "
                 "distribution. Re-run with --jitter to add negligible Uniform[-delta,delta] "
                 "noise.\n";
    return kExitContract;
  }

  auto thresholds = spi::label_conditional_thresholds(real, synth, opt.alpha, opt.beta);
  if (opt.json) {
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [label, lt] : thresholds) {
      labels[label] = {{"threshold", spi::to_json(lt.threshold)},
                       {"bounds", spi::to_json(lt.bounds)},
                       {"m", lt.m_y},
                       {"N", lt.N_y},
                       {"synth_fallback", lt.synth_fallback},
                       {"no_real_scores", lt.no_real_scores},
                       {"trivial", lt.threshold.trivial()}};
    }
    std::cout << nlohmann::json{{"method", "label-conditional"}, {"labels", labels}}.dump(2)
              << "\n";
  } else {
    std::cout << "method label-conditional\n";
    for (const auto& [label, lt] : thresholds) {
      std::cout << label << ": threshold " << human(lt.threshold.cutoff) << "  m " << lt.m_y
                << "  N " << lt.N_y << "  bounds [" << human(lt.bounds.lower) << ", "
                << human(lt.bounds.upper) << "]";
      if (lt.synth_fallback) std::cout << "  (fallback: whole synthetic set)";
      if (lt.no_real_scores) std::cout << "  (no real scores for this label)";
      if (lt.threshold.trivial()) std::cout << "  (trivial set)";
      std::cout << "\n";
    }
  }
  return kExitOk;
}

std::vector<long> parse_longs(const std::vector<std::string>& items) {
  std::vector<long> out;
  for (const auto& s : items) out.push_back(std::stol(s));
  return out;
}

std::vector<double> parse_doubles(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : items) out.push_back(std::stod(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic-powered predictive inference"};
  app.require_subcommand(1);

  // --- bounds ---
  long b_m = 0, b_N = 0;
  double b_alpha = 0.1, b_beta = 0.4;
  bool b_json = false;
  auto* cmd_bounds = app.add_subcommand("bounds", "Worst-case coverage bounds for (m, N, alpha, beta)");
  cmd_bounds->add_option("--m", b_m, "real calibration set size")->required();
  cmd_bounds->add_option("--N", b_N, "synthetic calibration set size")->required();
  cmd_bounds->add_option("--alpha", b_alpha, "target miscoverage level")->required();
  cmd_bounds->add_option("--beta", b_beta, "window construction level (default 0.4)");
  cmd_bounds->add_flag("--json", b_json, "emit JSON");

  // --- calibrate ---
  CalibrateOptions cal;
  auto* cmd_calibrate = app.add_subcommand("calibrate", "Compute a prediction-set threshold from score CSVs");
  cmd_calibrate->add_option("--real", cal.real_path, "real scores CSV")->required();
  cmd_calibrate->add_option("--synth", cal.synth_path, "synthetic scores CSV")->required();
  cmd_calibrate->add_option("--alpha", cal.alpha, "target miscoverage level")->required();
  cmd_calibrate->add_option("--beta", cal.beta, "window construction level (default 0.4)");
  cmd_calibrate->add_flag("--label-conditional", cal.label_conditional,
                          "per-label calibration; CSVs use the label,score format");
  cmd_calibrate->add_flag("--only-real", cal.only_real,
                          "split conformal on the real scores only");
  double jitter_value = 0.0;
  auto* jitter_opt = cmd_calibrate->add_option(
      "--jitter", jitter_value, "jitter half-width; 0 selects 1e-9 x score range");
  cmd_calibrate->add_option("--seed", cal.seed, "seed for the jitter stream (default 0)");
  cmd_calibrate->add_flag("--json", cal.json, "emit JSON");
  cmd_calibrate->add_flag("--windows", cal.windows, "include window-table diagnostics");

  // --- select-beta ---
  long sb_m = 0, sb_N = 0;
  double sb_alpha = 0.1, sb_target = 0.8, sb_step = 0.01;
  auto* cmd_select_beta = app.add_subcommand("select-beta", "Smallest beta meeting a worst-case lower bound");
  cmd_select_beta->add_option("--m", sb_m)->required();
  cmd_select_beta->add_option("--N", sb_N)->required();
  cmd_select_beta->add_option("--alpha", sb_alpha)->required();
  cmd_select_beta->add_option("--target-lower", sb_target, "required worst-case lower bound")->required();
  cmd_select_beta->add_option("--step", sb_step, "grid step (default 0.01)");

  // --- simulate ---
  std::string sim_config_path, sim_out_path, sim_json_out_path;
  int sim_threads = 1;
  auto* cmd_simulate = app.add_subcommand("simulate", "Run a Monte Carlo coverage experiment from a JSON config");
  cmd_simulate->add_option("--config", sim_config_path, "JSON TrialConfig")->required();
  cmd_simulate->add_option("--out", sim_out_path, "per-trial CSV output path")->required();
  cmd_simulate->add_option("--json-out", sim_json_out_path,
                           "aggregate JSON output path (default: stdout)");
  cmd_simulate->add_option("--threads", sim_threads, "worker count (default 1)");

  // --- sweep ---
  std::vector<std::string> sw_m, sw_beta, sw_alpha;
  long sw_N = 1000;
  std::string sw_out;
  auto* cmd_sweep = app.add_subcommand("sweep", "Tabulate worst-case bounds over a parameter grid");
  cmd_sweep->add_option("--m-values", sw_m, "m grid")->required()->delimiter(',');
  cmd_sweep->add_option("--beta-values", sw_beta, "beta grid")->required()->delimiter(',');
  cmd_sweep->add_option("--alpha-values", sw_alpha, "alpha grid")->required()->delimiter(',');
  cmd_sweep->add_option("--N", sw_N, "synthetic calibration set size")->required();
  cmd_sweep->add_option("--out", sw_out, "CSV output path (default: stdout)");

  // --- subset ---
  std::string su_real, su_groups;
  long su_k = 1;
  bool su_json = false;
  auto* cmd_subset = app.add_subcommand("subset", "k-nearest synthetic subset selection");
  cmd_subset->add_option("--real", su_real, "real scores CSV")->required();
  cmd_subset->add_option("--groups", su_groups, "grouped synthetic scores CSV (group,score)")->required();
  cmd_subset->add_option("--k", su_k, "number of groups to select")->required();
  cmd_subset->add_flag("--json", su_json, "emit JSON");

  // --- equivalence ---
  long eq_instances = 1000;
  std::uint64_t eq_seed = 0;
  int eq_threads = 1;
  auto* cmd_equivalence = app.add_subcommand("equivalence",
                                             "Randomized fast-form vs direct-form equivalence check");
  cmd_equivalence->add_option("--instances", eq_instances, "instance count")->required();
  cmd_equivalence->add_option("--seed", eq_seed, "master seed (default 0)");
  cmd_equivalence->add_option("--threads", eq_threads, "worker count (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitContract;
  }

  try {
    if (*cmd_bounds) {
      spi::CoverageBounds b = spi::worst_case_bounds(b_m, b_N, b_alpha, b_beta);
      if (b_json) {
        std::cout << spi::to_json(b).dump(2) << "\n";
      } else {
        std::cout << "lower " << human(b.lower) << "\nupper " << human(b.upper) << "\n";
      }
    } else if (*cmd_calibrate) {
      if (*jitter_opt) cal.jitter_delta = jitter_value;
      return cal.label_conditional ? run_calibrate_label_conditional(cal)
                                   : run_calibrate_marginal(cal);
    } else if (*cmd_select_beta) {
      auto beta = spi::select_beta(sb_m, sb_N, sb_alpha, sb_target, sb_step);
      if (!beta) {
        std::cerr << "no beta on grid achieves target\n";
        return kExitNoSolution;
      }
      std::cout << "beta " << human(*beta) << "\n";
    } else if (*cmd_simulate) {
      nlohmann::json config_json;
      try {
        auto in = spi::detail::open_or_throw(sim_config_path);
        in >> config_json;
      } catch (const nlohmann::json::exception& e) {
        throw spi::IoError(sim_config_path + ": invalid JSON: " + e.what());
      }
      spi::TrialConfig config = spi::TrialConfig::from_json(config_json);
      spi::TrialReport report = spi::run_coverage_experiment(config, sim_threads);
      spi::write_text_file(sim_out_path, report.to_csv());
      const std::string aggregates = report.aggregates_json().dump(2) + "\n";
      if (sim_json_out_path.empty()) {
        std::cout << aggregates;
      } else {
        spi::write_text_file(sim_json_out_path, aggregates);
      }
    } else if (*cmd_sweep) {
      auto rows = spi::run_bound_sweep(parse_longs(sw_m), parse_doubles(sw_beta),
                                       parse_doubles(sw_alpha), sw_N);
      const std::string csv = spi::bound_sweep_csv(rows);
      if (sw_out.empty()) {
        std::cout << csv;
      } else {
        spi::write_text_file(sw_out, csv);
      }
    } else if (*cmd_subset) {
      spi::ScoreVector real = spi::read_score_csv(su_real);
      spi::GroupedScores grouped = spi::read_grouped_csv(su_groups);
      auto selected = spi::select_subset_indices(real, grouped, su_k);
      if (su_json) {
        nlohmann::json ids = nlohmann::json::array();
        for (std::size_t idx : selected) ids.push_back(grouped.groups[idx].id);
        std::cout << nlohmann::json{{"selected", ids},
                                    {"pooled_size",
                                     static_cast<long>(selected.size()) * grouped.group_size()}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << "selected";
        for (std::size_t idx : selected) std::cout << ' ' << grouped.groups[idx].id;
        std::cout << "\npooled_size " << static_cast<long>(selected.size()) * grouped.group_size()
                  << "\n";
      }
    } else if (*cmd_equivalence) {
      spi::EquivalenceReport report = spi::run_equivalence_check(eq_instances, eq_seed, eq_threads);
      std::cout << report.instances << " instances, " << report.disagreements
                << " disagreements\n";
    }
  } catch (const spi::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const spi::ConfigError& e) {
    if (*cmd_simulate) {
      std::cout << nlohmann::json{{"error", e.what()}, {"kind", "contract"}}.dump() << "\n";
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  }
  return kExitOk;
}
