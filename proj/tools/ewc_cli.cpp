// Command-line harness around the library: dataset generation, offline
// training, full experiment runs, cluster-count sweeps, and report
// re-rendering. Flags override config-file values, which override defaults.

#include "ewc/baselines.hpp"
#include "ewc/errors.hpp"
#include "ewc/harness.hpp"
#include "ewc/simulation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace {

struct Overrides {
  std::string config_path;
  std::string seed_list;
  std::string out_dir;
  std::string policy_list;
  int k = -1;
  double eta = -1.0;
  double alpha = -2.0;  // sentinel distinct from "-1 means default"
};

void attach_common_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "experiment config JSON");
  cmd->add_option("--seed", ov.seed_list, "comma-separated seed list");
  cmd->add_option("--out", ov.out_dir, "output directory");
  cmd->add_option("--policies", ov.policy_list, "comma-separated policy names");
  cmd->add_option("--k", ov.k, "number of clusters / experts");
  cmd->add_option("--eta", ov.eta, "hedge learning rate (0 = auto)");
  cmd->add_option("--alpha", ov.alpha, "linucb exploration width (negative = auto)");
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  for (const auto& tok : split_list(csv)) {
    try {
      std::size_t pos = 0;
      seeds.push_back(std::stoull(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ewc::ConfigError("bad seed '" + tok + "' in --seed");
    }
  }
  if (seeds.empty()) throw ewc::ConfigError("--seed list is empty");
  return seeds;
}

// Config file first (when given), then flag overrides on top.
ewc::ExperimentConfig resolve_config(const Overrides& ov) {
  ewc::ExperimentConfig cfg;
  if (!ov.config_path.empty()) cfg = ewc::read_experiment_config(ov.config_path);
  if (!ov.seed_list.empty()) cfg.seeds = parse_seeds(ov.seed_list);
  if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
  if (!ov.policy_list.empty()) cfg.policies = split_list(ov.policy_list);
  if (ov.k > 0) cfg.k = ov.k;
  if (ov.eta >= 0.0) cfg.eta = ov.eta;
  if (ov.alpha > -1.5) cfg.alpha = ov.alpha;
  cfg.validate();
  return cfg;
}

bool has_policy(const ewc::RegretReport& report, const std::string& name) {
  for (const auto& c : report.curves)
    if (c.policy == name) return true;
  return false;
}

void print_summary(const ewc::RegretReport& report) {
  std::printf("final median cumulative regret vs oracle_theta (%zu seed%s, T=%d):\n",
              report.seeds.size(), report.seeds.size() == 1 ? "" : "s", report.horizon);
  for (const auto& p : report.policies)
    std::printf("  %-16s %10.2f\n", p.c_str(), ewc::median_final_regret(report, p));
  if (has_policy(report, "ewc_expected"))
    std::printf("  %-16s %10.2f\n", "ewc_expected",
                ewc::median_final_regret(report, "ewc_expected"));

  if (!report.bounds.empty()) {
    int held = 0;
    for (const auto& b : report.bounds) held += b.holds ? 1 : 0;
    const auto& b0 = report.bounds.front();
    std::printf("regret bound 2N*sqrt(T ln K) + T*N*l_hat: held in %d/%zu seeds "
                "(hedge term %.2f, median centroid rate %.4f)\n",
                held, report.bounds.size(), b0.hedge_term,
                ewc::median_value([&] {
                  std::vector<double> v;
                  for (const auto& b : report.bounds) v.push_back(b.centroid_loss_rate);
                  return v;
                }()));
  }

  if (has_policy(report, "ewc") && has_policy(report, "linucb")) {
    const double ewc_final = ewc::median_final_regret(report, "ewc");
    const double lin_final = ewc::median_final_regret(report, "linucb");
    if (lin_final > 0.0)
      std::printf("ewc vs linucb: %.2f%% lower median final regret "
                  "(reference figure: 27.57%%)\n",
                  (lin_final - ewc_final) / lin_final * 100.0);
    if (!report.bounds.empty()) {
      const ewc::CrossoverSummary cx = ewc::crossover_analysis(report);
      if (cx.found)
        std::printf("linucb overtakes ewc at round %d", cx.round);
      else
        std::printf("crossover: none within horizon");
      std::printf(" (fitted C=%.3f, predicted threshold T=%s)\n", cx.fitted_c,
                  std::isfinite(cx.predicted_threshold)
                      ? std::to_string(cx.predicted_threshold).c_str()
                      : "inf");
      std::printf("advantage condition l_hat <= oracle-ftl rate - 2*sqrt(ln K / T): %s "
                  "(margin %.4f)\n",
                  cx.advantage_condition ? "holds" : "fails", cx.advantage_margin);
    }
  }
}

int cmd_generate(const Overrides& ov) {
  const ewc::ExperimentConfig cfg = resolve_config(ov);
  if (!cfg.has_population)
    throw ewc::ConfigError("generate needs a config with a 'population' section");
  const ewc::SyntheticDataset ds =
      ewc::generate_dataset(cfg.population, cfg.n_test, cfg.n_train, cfg.t_test, cfg.t_train,
                            cfg.seeds.front());
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = (std::filesystem::path(cfg.out_dir) / "dataset.csv").string();
  ewc::write_dataset_csv(ds, path);
  std::printf("wrote %s: %zu train users x %d rounds, %zu test users x %d rounds\n",
              path.c_str(), ds.train.size(), cfg.t_train, ds.test.size(), cfg.t_test);
  return 0;
}

int cmd_train(const Overrides& ov) {
  const ewc::ExperimentConfig cfg = resolve_config(ov);
  const std::uint64_t seed = cfg.seeds.front();
  const ewc::SyntheticDataset ds =
      cfg.dataset_path.empty()
          ? ewc::generate_dataset(cfg.population, cfg.n_test, cfg.n_train, cfg.t_test,
                                  cfg.t_train, seed)
          : ewc::read_dataset_csv(cfg.dataset_path);
  const ewc::TrainedModel model = ewc::train_model(ds, cfg, seed);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = (std::filesystem::path(cfg.out_dir) / "model.json").string();
  ewc::write_model_json(model, path);
  std::printf("wrote %s: %d %s-clustered centroids from %zu train users (seed %llu)\n",
              path.c_str(), model.num_clusters, model.clustering.c_str(), ds.train.size(),
              static_cast<unsigned long long>(seed));
  return 0;
}

int cmd_run(const Overrides& ov) {
  const ewc::ExperimentConfig cfg = resolve_config(ov);
  const ewc::RegretReport report = ewc::run_experiment(cfg);
  ewc::export_report(report, cfg.out_dir);
  std::printf("wrote %s/{regret.csv,bounds.csv,config.json,regret.svg}\n", cfg.out_dir.c_str());
  print_summary(report);
  return 0;
}

int cmd_sweep_k(const Overrides& ov) {
  ewc::ExperimentConfig cfg = resolve_config(ov);
  const int k_max = cfg.k;
  std::string csv = "k,median_ewc_final_regret,median_centroid_loss_rate,median_bound\n";
  std::printf("%4s %24s %16s %12s\n", "k", "median ewc final regret", "centroid rate", "bound");
  for (int k = 1; k <= k_max; ++k) {
    ewc::ExperimentConfig step = cfg;
    step.k = k;
    step.policies = {"ewc"};
    const ewc::RegretReport report = ewc::run_experiment(step);
    const double final_regret = ewc::median_final_regret(report, "ewc");
    std::vector<double> rates;
    std::vector<double> bounds;
    for (const auto& b : report.bounds) {
      rates.push_back(b.centroid_loss_rate);
      bounds.push_back(b.bound);
    }
    const double rate = ewc::median_value(rates);
    const double bound = ewc::median_value(bounds);
    char row[160];
    std::snprintf(row, sizeof(row), "%d,%.17g,%.17g,%.17g\n", k, final_regret, rate, bound);
    csv += row;
    std::printf("%4d %24.2f %16.4f %12.2f\n", k, final_regret, rate, bound);
  }
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = (std::filesystem::path(cfg.out_dir) / "sweep.csv").string();
  const std::string tmp = path + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw ewc::IoError("cannot open '" + tmp + "' for writing");
    std::fwrite(csv.data(), 1, csv.size(), f);
    std::fclose(f);
  }
  std::filesystem::rename(tmp, path);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_report(const Overrides& ov) {
  const std::string dir = ov.out_dir.empty() ? "out" : ov.out_dir;
  const ewc::RegretReport report = ewc::read_report_csvs(dir);
  const std::string svg_path = (std::filesystem::path(dir) / "regret.svg").string();
  const std::string svg = ewc::render_regret_svg(report);
  const std::string tmp = svg_path + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw ewc::IoError("cannot open '" + tmp + "' for writing");
    std::fwrite(svg.data(), 1, svg.size(), f);
    std::fclose(f);
  }
  std::filesystem::rename(tmp, svg_path);
  std::printf("re-rendered %s\n", svg_path.c_str());
  print_summary(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"expert-with-clustering route-choice experiment harness"};
  app.require_subcommand(1);

  Overrides ov;
  CLI::App* generate = app.add_subcommand("generate", "sample a population into dataset.csv");
  CLI::App* train = app.add_subcommand("train", "fit separators and cluster into model.json");
  CLI::App* run = app.add_subcommand("run", "offline + online experiment with reports");
  CLI::App* sweep = app.add_subcommand("sweep-k", "run ewc for k = 1..K, write sweep.csv");
  CLI::App* report = app.add_subcommand("report", "re-render summary/plot from an output dir");
  for (CLI::App* cmd : {generate, train, run, sweep, report}) attach_common_flags(cmd, ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(ov);
    if (train->parsed()) return cmd_train(ov);
    if (run->parsed()) return cmd_run(ov);
    if (sweep->parsed()) return cmd_sweep_k(ov);
    if (report->parsed()) return cmd_report(ov);
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const ewc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ewc::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const ewc::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const ewc::PreconditionError& e) {
    std::fprintf(stderr, "precondition error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
