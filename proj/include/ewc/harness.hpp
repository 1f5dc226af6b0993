#pragma once

// Experiment orchestration: run every requested policy over a shared
// dataset, account realized and expected regret against the true-preference
// oracle, evaluate the regret bound, locate the LinUCB/EWC crossover, and
// export CSV/SVG reports.

#include "ewc/clustering.hpp"
#include "ewc/core.hpp"
#include "ewc/hedge.hpp"
#include "ewc/offline.hpp"
#include "ewc/simulation.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ewc {

// Canonical policy names, in report order.
inline const std::vector<std::string>& known_policies() {
  static const std::vector<std::string> names{"ewc",        "linucb",         "ftl",
                                             "oracle_ftl", "oracle_cluster", "oracle_theta"};
  return names;
}

struct ExperimentConfig {
  // Data source: a dataset file, or a population to sample per seed.
  std::string dataset_path;
  bool has_population = false;
  PopulationSpec population;

  int n_test = 200;
  int n_train = 300;
  int t_test = 40;
  int t_train = 40;

  std::vector<std::string> policies = known_policies();
  int k = 6;
  double eta = 0.0;    // 0 → sqrt(8 ln K / T)
  double alpha = -1.0; // < 0 → sqrt(0.5 ln(2 T A / delta))
  double delta = 0.1;
  std::string clustering = "loss";  // "loss" | "l2"
  bool ewc_argmax = false;          // pick the modal expert instead of sampling
  SeparatorFitConfig fit;

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::string out_dir = "out";

  void validate() const;  // ConfigError on bad fields
};

ExperimentConfig experiment_config_from_json(const std::string& json_text);
ExperimentConfig read_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

// One policy's trajectory for one seed. Curves are indexed by round
// (0-based storage for round 1..T) and are cumulative over users and
// rounds. stream_digest fingerprints the (ctx, choice) sequence the policy
// consumed; equal digests across policies certify identical streams.
struct PolicyCurve {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<double> cumulative_loss;
  std::vector<double> cumulative_regret;  // vs. the true-preference oracle
  std::uint64_t stream_digest = 0;
};

// Per-seed bound evaluation and seed-level scalars used by the crossover
// analysis.
struct BoundRow {
  std::uint64_t seed = 0;
  int n_users = 0;
  int horizon = 0;
  int num_clusters = 0;
  double centroid_loss_rate = 0.0;  // empirical per-round best-centroid loss
  double hedge_term = 0.0;          // 2 N sqrt(T ln K)
  double centroid_term = 0.0;       // T N * centroid_loss_rate
  double bound = 0.0;
  double ewc_expected_regret = 0.0;  // final <p,l>-accounted regret
  bool holds = false;
  double oracle_ftl_rate = 0.0;  // (1/N) sum_i min{p_i, 1-p_i}
};

struct RegretReport {
  std::vector<std::string> policies;  // emitted curves, report order
  std::vector<std::uint64_t> seeds;
  int horizon = 0;
  int n_users = 0;
  int num_clusters = 0;
  std::vector<PolicyCurve> curves;  // one per (policy, seed), plus ewc_expected
  std::vector<BoundRow> bounds;     // one per seed (only when ewc runs)
  std::string config_json;
};

// Offline phase output for one seed.
struct TrainedModel {
  CentroidSet centroids;
  AssignmentMatrix assignment;
  int num_clusters = 0;
  std::string clustering;  // "loss" | "l2"
  std::uint64_t seed = 0;
};

// Fit per-user separators on the train split and cluster them.
TrainedModel train_model(const SyntheticDataset& dataset, const ExperimentConfig& config,
                         std::uint64_t seed);

// One EWC round for one user: sample (or argmax) an expert, recommend,
// observe, update. Mutates the hedge state.
struct EwcRoundResult {
  Route recommendation = Route::standard;
  double realized_loss = 0.0;
  double expected_loss = 0.0;  // <p, l> with the pre-update probabilities
};
EwcRoundResult ewc_policy_round(HedgeState& state, const CentroidSet& centroids,
                                const TravelContext& ctx, Route actual_choice,
                                std::mt19937_64& rng, bool argmax = false);

// 2 N sqrt(T ln K) + T N * centroid_loss_rate.
double theoretical_bound(int n_users, int horizon, int num_clusters, double centroid_loss_rate);

// Offline + online phases for every seed. Generates (or loads) the dataset,
// trains the model, replays the test split through all policies on
// identical context/choice streams.
RegretReport run_experiment(const ExperimentConfig& config);

struct CrossoverSummary {
  bool found = false;
  int round = 0;             // first round with LinUCB cum. regret <= EWC's
  double fitted_c = 0.0;     // per-user LinUCB regret coefficient C in C*sqrt(t)
  double predicted_threshold = 0.0;  // ((C-2)/centroid_loss_rate)^2; inf if C <= 2 or rate 0
  double centroid_loss_rate = 0.0;
  double oracle_ftl_rate = 0.0;
  double advantage_margin = 0.0;  // oracle_ftl_rate - 2 sqrt(ln K / T) - centroid_loss_rate
  bool advantage_condition = false;  // centroid rate <= oracle_ftl_rate - 2 sqrt(ln K / T)
};

// Median-curve crossover between LinUCB and EWC plus the advantage
// condition. Requires both curves in the report.
CrossoverSummary crossover_analysis(const RegretReport& report);

// Median across seeds, per round, of a policy's cumulative regret curve.
std::vector<double> median_regret_curve(const RegretReport& report, const std::string& policy);
double median_final_regret(const RegretReport& report, const std::string& policy);
double median_value(std::vector<double> values);

// Writes regret.csv, bounds.csv, config.json, regret.svg into directory
// (created if absent); every file is written to a temp name then renamed.
void export_report(const RegretReport& report, const std::string& directory);

// Fitted offline model persistence (JSON).
void write_model_json(const TrainedModel& model, const std::string& path);
TrainedModel read_model_json(const std::string& path);

// Rebuild the curves/bounds of a previously exported report directory,
// e.g. to re-render the SVG or recompute the crossover summary.
RegretReport read_report_csvs(const std::string& directory);

std::string render_regret_svg(const RegretReport& report);

}  // namespace ewc
