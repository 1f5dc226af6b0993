#include "ewc/harness.hpp"

#include "ewc/baselines.hpp"
#include "ewc/errors.hpp"
#include "ewc/offline.hpp"
#include "ewc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace ewc {

namespace {

bool is_known_policy(const std::string& name) {
  const auto& known = known_policies();
  return std::find(known.begin(), known.end(), name) != known.end();
}

// FNV-1a over the raw bytes of each consumed (tau, e, choice) triple.
struct StreamDigest {
  std::uint64_t hash = 0xCBF29CE484222325ull;

  void feed_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= p[i];
      hash *= 0x100000001B3ull;
    }
  }

  void feed(const TravelContext& ctx, Route choice) {
    feed_bytes(&ctx.tau, sizeof(double));
    feed_bytes(&ctx.e, sizeof(double));
    const int c = route_to_int(choice);
    feed_bytes(&c, sizeof(int));
  }
};

// Empirical component means when the dataset came from a file and the
// generating mixture is unknown; orientation is the sign of the mean
// propensity.
std::vector<PreferenceParams> cluster_means_from_dataset(const SyntheticDataset& ds) {
  std::map<int, std::pair<Vec3, long>> acc;
  auto feed = [&](const std::vector<SyntheticUser>& users) {
    for (const auto& u : users) {
      auto& slot = acc[u.cluster_id];
      if (slot.second == 0) slot.first = Vec3::Zero();
      slot.first += u.theta_true.vec();
      ++slot.second;
    }
  };
  feed(ds.train);
  feed(ds.test);
  if (acc.empty()) throw DataError("dataset carries no users to derive cluster means from");
  const int max_id = acc.rbegin()->first;
  if (acc.begin()->first < 0) throw DataError("negative cluster id in dataset");
  std::vector<PreferenceParams> means(static_cast<std::size_t>(max_id) + 1);
  for (const auto& [cid, slot] : acc)
    means[static_cast<std::size_t>(cid)] =
        PreferenceParams::from_vec(slot.first / static_cast<double>(slot.second));
  return means;
}

std::vector<UserHistory> train_histories(const SyntheticDataset& ds) {
  std::vector<UserHistory> out;
  out.reserve(ds.train.size());
  for (const auto& u : ds.train) out.push_back(u.history);
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset_path.empty() && !has_population)
    throw ConfigError("config needs a dataset path or a population spec");
  if (has_population) population.validate();
  if (policies.empty()) throw ConfigError("config needs at least one policy");
  for (const auto& p : policies)
    if (!is_known_policy(p)) throw ConfigError("unknown policy '" + p + "'");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (n_test < 1 || n_train < 1 || t_test < 1 || t_train < 1)
    throw ConfigError("user counts and horizons must be at least 1");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be 0 (auto) or positive");
  if (std::isnan(alpha)) throw ConfigError("alpha must be a number (< 0 selects the default)");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (clustering != "loss" && clustering != "l2")
    throw ConfigError("clustering must be 'loss' or 'l2'");
  if (seeds.empty()) throw ConfigError("config needs at least one seed");
  if (out_dir.empty()) throw ConfigError("output directory must be nonempty");
}

ExperimentConfig experiment_config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("experiment config is not valid JSON: ") + e.what());
  }
  static const char* allowed[] = {"dataset", "population", "n_test",  "n_train",  "t_test",
                                  "t_train", "policies",   "k",       "eta",      "alpha",
                                  "delta",   "clustering", "argmax",  "seeds",    "out"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(std::begin(allowed), std::end(allowed),
                     [&](const char* a) { return key == a; }) == std::end(allowed))
      throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    ExperimentConfig cfg;
    if (j.contains("dataset")) cfg.dataset_path = j["dataset"].get<std::string>();
    if (j.contains("population")) {
      cfg.has_population = true;
      cfg.population = population_spec_from_json(j["population"].dump());
    }
    if (j.contains("n_test")) cfg.n_test = j["n_test"].get<int>();
    if (j.contains("n_train")) cfg.n_train = j["n_train"].get<int>();
    if (j.contains("t_test")) cfg.t_test = j["t_test"].get<int>();
    if (j.contains("t_train")) cfg.t_train = j["t_train"].get<int>();
    if (j.contains("policies")) cfg.policies = j["policies"].get<std::vector<std::string>>();
    if (j.contains("k")) cfg.k = j["k"].get<int>();
    if (j.contains("eta") && !j["eta"].is_null()) cfg.eta = j["eta"].get<double>();
    if (j.contains("alpha") && !j["alpha"].is_null()) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("delta")) cfg.delta = j["delta"].get<double>();
    if (j.contains("clustering")) cfg.clustering = j["clustering"].get<std::string>();
    if (j.contains("argmax")) cfg.ewc_argmax = j["argmax"].get<bool>();
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config field error: ") + e.what());
  }
}

ExperimentConfig read_experiment_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return experiment_config_from_json(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  if (!config.dataset_path.empty()) j["dataset"] = config.dataset_path;
  if (config.has_population)
    j["population"] = nlohmann::json::parse(population_spec_to_json(config.population));
  j["n_test"] = config.n_test;
  j["n_train"] = config.n_train;
  j["t_test"] = config.t_test;
  j["t_train"] = config.t_train;
  j["policies"] = config.policies;
  j["k"] = config.k;
  if (config.eta > 0.0)
    j["eta"] = config.eta;
  else
    j["eta"] = nullptr;
  if (config.alpha >= 0.0)
    j["alpha"] = config.alpha;
  else
    j["alpha"] = nullptr;
  j["delta"] = config.delta;
  j["clustering"] = config.clustering;
  j["argmax"] = config.ewc_argmax;
  j["seeds"] = config.seeds;
  j["out"] = config.out_dir;
  return j.dump(2);
}

TrainedModel train_model(const SyntheticDataset& dataset, const ExperimentConfig& config,
                         std::uint64_t seed) {
  if (dataset.train.empty()) throw DataError("training requires a nonempty train split");
  if (config.k > static_cast<int>(dataset.train.size()))
    throw PreconditionError("k exceeds the number of training users");

  SeparatorFitConfig fit_cfg = config.fit;
  fit_cfg.seed = seed;
  const std::vector<UserHistory> histories = train_histories(dataset);
  const std::vector<PreferenceParams> params = fitted_params(fit_all_users(histories, fit_cfg));

  ClusteringResult clustered =
      config.clustering == "l2"
          ? kmeans_l2(params, config.k, seed)
          : kmeans_loss_guided(params, histories, config.k, seed);

  TrainedModel model;
  model.centroids = std::move(clustered.centroids);
  model.assignment = std::move(clustered.assignment);
  model.num_clusters = config.k;
  model.clustering = config.clustering;
  model.seed = seed;
  return model;
}

EwcRoundResult ewc_policy_round(HedgeState& state, const CentroidSet& centroids,
                                const TravelContext& ctx, Route actual_choice,
                                std::mt19937_64& rng, bool argmax) {
  if (state.num_experts() != static_cast<Eigen::Index>(centroids.size()))
    throw PreconditionError("hedge state and centroid set sizes differ");
  const Eigen::Index expert = argmax ? select_expert_argmax(state) : select_expert(state, rng);
  EwcRoundResult out;
  out.recommendation = predict_choice(centroids.centroids[static_cast<std::size_t>(expert)], ctx);
  const Eigen::VectorXd losses = expert_loss_vector(centroids.centroids, ctx, actual_choice);
  out.realized_loss = losses[expert];
  out.expected_loss = state.probs.dot(losses);
  state = update(state, losses);
  return out;
}

double theoretical_bound(int n_users, int horizon, int num_clusters, double centroid_loss_rate) {
  if (n_users < 1 || horizon < 1 || num_clusters < 1)
    throw PreconditionError("bound needs positive N, T, K");
  if (!(centroid_loss_rate >= 0.0))
    throw PreconditionError("bound needs a nonnegative centroid loss rate");
  const double hedge_term =
      2.0 * n_users *
      std::sqrt(static_cast<double>(horizon) * std::log(static_cast<double>(num_clusters)));
  return hedge_term + static_cast<double>(horizon) * n_users * centroid_loss_rate;
}

RegretReport run_experiment(const ExperimentConfig& config) {
  config.validate();

  SyntheticDataset loaded;
  bool have_loaded = false;
  if (!config.dataset_path.empty()) {
    loaded = read_dataset_csv(config.dataset_path);
    have_loaded = true;
    if (loaded.test.empty()) throw DataError("dataset has no test users");
    if (loaded.train.empty()) throw DataError("dataset has no train users");
  }

  const bool want_ewc =
      std::find(config.policies.begin(), config.policies.end(), "ewc") != config.policies.end();

  RegretReport report;
  report.policies = config.policies;
  report.seeds = config.seeds;
  report.config_json = experiment_config_to_json(config);

  for (const std::uint64_t seed : config.seeds) {
    const SyntheticDataset dataset =
        have_loaded ? loaded
                    : generate_dataset(config.population, config.n_test, config.n_train,
                                       config.t_test, config.t_train, seed);

    const int n_users = static_cast<int>(dataset.test.size());
    const int horizon = static_cast<int>(dataset.test.front().history.rounds());
    for (const auto& u : dataset.test)
      if (static_cast<int>(u.history.rounds()) != horizon)
        throw DataError("test users have unequal horizons");
    report.n_users = n_users;
    report.horizon = horizon;
    report.num_clusters = config.k;

    TrainedModel model;
    if (want_ewc) model = train_model(dataset, config, seed);

    // Oracle-cluster reference means: mixture means when generating,
    // empirical per-cluster means when the dataset came from a file.
    std::vector<PreferenceParams> component_means;
    if (std::find(config.policies.begin(), config.policies.end(), "oracle_cluster") !=
        config.policies.end()) {
      if (!have_loaded && config.has_population) {
        for (const auto& c : config.population.components)
          component_means.push_back(PreferenceParams::from_vec(c.mean));
      } else {
        component_means = cluster_means_from_dataset(dataset);
      }
    }

    const double eta = config.eta > 0.0 ? config.eta
                                        : default_learning_rate(config.k, horizon);
    const double alpha = config.alpha >= 0.0
                             ? config.alpha
                             : linucb_default_alpha(horizon, 2, config.delta);

    // Per-user policy states.
    std::vector<HedgeState> hedge_states;
    std::vector<std::mt19937_64> ewc_rngs;
    if (want_ewc) {
      hedge_states.assign(static_cast<std::size_t>(n_users), init_uniform(config.k, eta));
      ewc_rngs.reserve(static_cast<std::size_t>(n_users));
      for (int i = 0; i < n_users; ++i)
        ewc_rngs.push_back(make_engine(seed, static_cast<std::uint64_t>(i), /*salt=*/1));
    }
    std::vector<FtlState> ftl_states(static_cast<std::size_t>(n_users));
    std::vector<LinUcbState> linucb_states(static_cast<std::size_t>(n_users),
                                           linucb_init(alpha));
    // Running (standard, eco) counts for the hindsight-majority oracle.
    std::vector<std::pair<long, long>> oracle_counts(static_cast<std::size_t>(n_users), {0, 0});

    // Per-policy running losses and curves; the oracle is always tracked
    // because every regret column is relative to it.
    std::map<std::string, std::vector<double>> loss_curves;
    std::map<std::string, StreamDigest> digests;
    std::vector<std::string> tracked = config.policies;
    if (std::find(tracked.begin(), tracked.end(), "oracle_theta") == tracked.end())
      tracked.push_back("oracle_theta");
    for (const auto& p : tracked) loss_curves[p] = {};
    std::vector<double> expected_curve;  // <p,l> accounting for ewc

    std::map<std::string, double> running;
    for (const auto& p : tracked) running[p] = 0.0;
    double running_expected = 0.0;

    // Online phase: rounds outer, users inner; every policy consumes the
    // same (ctx, choice) pair at each (t, i).
    for (int t = 0; t < horizon; ++t) {
      for (int i = 0; i < n_users; ++i) {
        const auto& user = dataset.test[static_cast<std::size_t>(i)];
        const TravelContext& ctx = user.history.contexts[static_cast<std::size_t>(t)];
        const Route actual = user.history.choices[static_cast<std::size_t>(t)];
        const auto ui = static_cast<std::size_t>(i);

        for (const auto& p : tracked) {
          digests[p].feed(ctx, actual);
          if (p == "ewc") {
            const EwcRoundResult r = ewc_policy_round(hedge_states[ui], model.centroids, ctx,
                                                      actual, ewc_rngs[ui], config.ewc_argmax);
            running["ewc"] += r.realized_loss;
            running_expected += r.expected_loss;
          } else if (p == "linucb") {
            const Route rec = linucb_step(linucb_states[ui], ctx, actual);
            running["linucb"] += choice_loss(rec, actual);
          } else if (p == "ftl") {
            const Route rec = ftl_recommend(ftl_states[ui]);
            ftl_observe(ftl_states[ui], actual);
            running["ftl"] += choice_loss(rec, actual);
          } else if (p == "oracle_ftl") {
            // Hindsight-majority mistakes on the prefix through round t:
            // the minority count, which grows by 0 or 1 per observation.
            auto& cnt = oracle_counts[ui];
            const long before = std::min(cnt.first, cnt.second);
            if (actual == Route::standard)
              ++cnt.first;
            else
              ++cnt.second;
            running["oracle_ftl"] += static_cast<double>(std::min(cnt.first, cnt.second) - before);
          } else if (p == "oracle_cluster") {
            const auto cid = static_cast<std::size_t>(user.cluster_id);
            if (cid >= component_means.size())
              throw DataError("user cluster id outside the component set");
            const Route rec = oracle_cluster_recommend(component_means[cid], ctx);
            running["oracle_cluster"] += choice_loss(rec, actual);
          } else if (p == "oracle_theta") {
            const Route rec = oracle_theta_recommend(user.theta_true, ctx);
            running["oracle_theta"] += choice_loss(rec, actual);
          }
        }
      }
      for (const auto& p : tracked) loss_curves[p].push_back(running[p]);
      if (want_ewc) expected_curve.push_back(running_expected);
    }

    // All policies saw the same stream.
    for (const auto& p : tracked)
      if (digests[p].hash != digests[tracked.front()].hash)
        throw PreconditionError("policy context/choice streams diverged");

    const std::vector<double>& oracle_curve = loss_curves["oracle_theta"];
    auto emit_curve = [&](const std::string& name, const std::vector<double>& losses) {
      PolicyCurve c;
      c.policy = name;
      c.seed = seed;
      c.cumulative_loss = losses;
      c.cumulative_regret.resize(losses.size());
      for (std::size_t r = 0; r < losses.size(); ++r)
        c.cumulative_regret[r] = losses[r] - oracle_curve[r];
      c.stream_digest = digests[tracked.front()].hash;
      report.curves.push_back(std::move(c));
    };
    for (const auto& p : config.policies) emit_curve(p, loss_curves[p]);
    if (want_ewc) emit_curve("ewc_expected", expected_curve);

    // Seed-level scalars: the bound row and the oracle-FTL rate.
    double ftl_rate = 0.0;
    for (const auto& u : dataset.test) ftl_rate += oracle_ftl_mistakes(u.history);
    ftl_rate /= static_cast<double>(n_users) * horizon;

    if (want_ewc) {
      BoundRow row;
      row.seed = seed;
      row.n_users = n_users;
      row.horizon = horizon;
      row.num_clusters = config.k;
      row.centroid_loss_rate = empirical_centroid_loss(dataset, model.centroids);
      row.hedge_term = 2.0 * n_users * std::sqrt(horizon * std::log(static_cast<double>(config.k)));
      row.centroid_term = static_cast<double>(horizon) * n_users * row.centroid_loss_rate;
      row.bound = row.hedge_term + row.centroid_term;
      row.ewc_expected_regret = expected_curve.back() - oracle_curve.back();
      row.holds = row.ewc_expected_regret <= row.bound;
      row.oracle_ftl_rate = ftl_rate;
      report.bounds.push_back(row);
    }
  }

  return report;
}

double median_value(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> median_regret_curve(const RegretReport& report, const std::string& policy) {
  std::vector<const PolicyCurve*> curves;
  for (const auto& c : report.curves)
    if (c.policy == policy) curves.push_back(&c);
  if (curves.empty()) throw PreconditionError("no curves recorded for policy '" + policy + "'");
  const std::size_t horizon = curves.front()->cumulative_regret.size();
  std::vector<double> out(horizon);
  for (std::size_t r = 0; r < horizon; ++r) {
    std::vector<double> at_round;
    at_round.reserve(curves.size());
    for (const auto* c : curves) at_round.push_back(c->cumulative_regret[r]);
    out[r] = median_value(std::move(at_round));
  }
  return out;
}

double median_final_regret(const RegretReport& report, const std::string& policy) {
  return median_regret_curve(report, policy).back();
}

CrossoverSummary crossover_analysis(const RegretReport& report) {
  const std::vector<double> ewc = median_regret_curve(report, "ewc");
  const std::vector<double> lin = median_regret_curve(report, "linucb");
  if (ewc.size() != lin.size()) throw PreconditionError("curve horizons differ");
  if (report.bounds.empty())
    throw PreconditionError("crossover analysis needs bound rows (run with the ewc policy)");

  CrossoverSummary s;
  for (std::size_t r = 0; r < lin.size(); ++r) {
    if (lin[r] <= ewc[r]) {
      s.found = true;
      s.round = static_cast<int>(r) + 1;
      break;
    }
  }

  // Per-user LinUCB regret coefficient: least-squares fit of the median
  // curve against C * N * sqrt(t).
  const auto n_users = static_cast<double>(report.bounds.front().n_users);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t r = 0; r < lin.size(); ++r) {
    const double sqrt_t = std::sqrt(static_cast<double>(r + 1));
    num += lin[r] * sqrt_t;
    den += static_cast<double>(r + 1);
  }
  s.fitted_c = den > 0.0 ? num / (n_users * den) : 0.0;

  std::vector<double> rates;
  std::vector<double> ftl_rates;
  for (const auto& b : report.bounds) {
    rates.push_back(b.centroid_loss_rate);
    ftl_rates.push_back(b.oracle_ftl_rate);
  }
  s.centroid_loss_rate = median_value(rates);
  s.oracle_ftl_rate = median_value(ftl_rates);

  if (s.fitted_c > 2.0 && s.centroid_loss_rate > 0.0) {
    const double ratio = (s.fitted_c - 2.0) / s.centroid_loss_rate;
    s.predicted_threshold = ratio * ratio;
  } else {
    s.predicted_threshold = std::numeric_limits<double>::infinity();
  }

  const int horizon = report.bounds.front().horizon;
  const int k = report.bounds.front().num_clusters;
  const double slack =
      2.0 * std::sqrt(std::log(static_cast<double>(k)) / static_cast<double>(horizon));
  s.advantage_margin = s.oracle_ftl_rate - slack - s.centroid_loss_rate;
  s.advantage_condition = s.advantage_margin >= 0.0;
  return s;
}

}  // namespace ewc
