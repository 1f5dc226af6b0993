#include "ewc/simulation.hpp"

#include "ewc/errors.hpp"
#include "ewc/rng.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

namespace ewc {

namespace {

constexpr double kWeightTol = 1e-9;
constexpr double kPsdTol = 1e-9;

// A = V sqrt(max(lambda, 0)) V^T so that A A^T = cov; exact for PSD inputs
// and tolerant of tiny negative eigenvalues from rounding. cov = 0 gives
// A = 0, i.e. a point mass at the mean.
Eigen::Matrix3d covariance_factor(const Eigen::Matrix3d& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Vec3 lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

struct MixtureTables {
  Eigen::VectorXd weights;
  std::vector<Vec3> means;
  std::vector<Eigen::Matrix3d> factors;
};

MixtureTables build_tables(const PopulationSpec& spec) {
  MixtureTables tab;
  const auto k = static_cast<Eigen::Index>(spec.components.size());
  tab.weights.resize(k);
  tab.means.reserve(spec.components.size());
  tab.factors.reserve(spec.components.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& c = spec.components[static_cast<std::size_t>(i)];
    tab.weights[i] = c.weight;
    tab.means.push_back(c.mean);
    tab.factors.push_back(covariance_factor(c.cov));
  }
  return tab;
}

PopulationSample draw_sample(const MixtureTables& tab, std::mt19937_64& rng) {
  const Eigen::Index k = categorical(rng, tab.weights);
  Vec3 z{gaussian(rng), gaussian(rng), gaussian(rng)};
  PopulationSample out;
  out.component = static_cast<int>(k);
  out.raw = tab.means[static_cast<std::size_t>(k)] + tab.factors[static_cast<std::size_t>(k)] * z;
  out.params = PreferenceParams::from_vec(out.raw);
  return out;
}

void check_range(const ValueRange& r, const char* name) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi))
    throw ConfigError(std::string(name) + " range must be finite");
  if (r.lo <= 0.0) throw ConfigError(std::string(name) + " range lower bound must be positive");
  if (r.lo > r.hi) throw ConfigError(std::string(name) + " range has lo > hi");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("dataset line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

int parse_int(const std::string& s, int line_no) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("dataset line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
}

constexpr const char* kDatasetHeader = "user_id,split,cluster_id,b,s,o,round,tau,e,choice";

void append_user_rows(std::string& out, const SyntheticUser& u, const char* split) {
  for (std::size_t t = 0; t < u.history.rounds(); ++t) {
    out += std::to_string(u.user_id);
    out += ',';
    out += split;
    out += ',';
    out += std::to_string(u.cluster_id);
    out += ',';
    out += format_double(u.theta_true.bias);
    out += ',';
    out += format_double(u.theta_true.slope);
    out += ',';
    out += format_double(u.theta_true.orientation);
    out += ',';
    out += std::to_string(t + 1);
    out += ',';
    out += format_double(u.history.contexts[t].tau);
    out += ',';
    out += format_double(u.history.contexts[t].e);
    out += ',';
    out += std::to_string(route_to_int(u.history.choices[t]));
    out += '\n';
  }
}

Eigen::Matrix3d json_to_matrix3(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be a 3x3 array");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 3)
      throw ConfigError(std::string(what) + " must be a 3x3 array");
    for (int c = 0; c < 3; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

ValueRange json_to_range(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(std::string(what) + " must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void PopulationSpec::validate() const {
  if (components.empty()) throw ConfigError("population needs at least one mixture component");
  double total = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    const std::string tag = "component " + std::to_string(k);
    if (!(c.weight > 0.0) || c.weight > 1.0)
      throw ConfigError(tag + ": weight must lie in (0, 1]");
    total += c.weight;
    if (!c.mean.allFinite()) throw ConfigError(tag + ": mean must be finite");
    if (!c.cov.allFinite()) throw ConfigError(tag + ": covariance must be finite");
    if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > kPsdTol)
      throw ConfigError(tag + ": covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c.cov);
    if (es.eigenvalues().minCoeff() < -kPsdTol)
      throw ConfigError(tag + ": covariance must be positive semidefinite");
  }
  if (std::abs(total - 1.0) > kWeightTol)
    throw ConfigError("mixture weights must sum to 1 (got " + format_double(total) + ")");
  check_range(tau_range, "tau");
  check_range(e_range, "e");
  if (!(noise_temperature >= 0.0) || !std::isfinite(noise_temperature))
    throw ConfigError("noise temperature must be a nonnegative number");
}

PopulationSample sample_one(const PopulationSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  return draw_sample(build_tables(spec), rng);
}

std::vector<PopulationSample> sample_population(const PopulationSpec& spec, int count,
                                                std::mt19937_64& rng) {
  spec.validate();
  if (count < 0) throw PreconditionError("sample count must be nonnegative");
  const MixtureTables tab = build_tables(spec);
  std::vector<PopulationSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(draw_sample(tab, rng));
  return out;
}

TravelContext sample_context(const PopulationSpec& spec, std::mt19937_64& rng) {
  TravelContext ctx;
  ctx.tau = uniform_range(rng, spec.tau_range.lo, spec.tau_range.hi);
  ctx.e = uniform_range(rng, spec.e_range.lo, spec.e_range.hi);
  return ctx;
}

Route generate_choice(const PreferenceParams& theta, const TravelContext& ctx,
                      double temperature, std::mt19937_64& rng) {
  if (temperature < 0.0) throw PreconditionError("choice temperature must be nonnegative");
  if (temperature == 0.0) return predict_choice(theta, ctx);
  const double margin = decision_margin(theta, ctx);
  const double p_eco = 1.0 / (1.0 + std::exp(-margin / temperature));
  return uniform_unit(rng) < p_eco ? Route::eco : Route::standard;
}

SyntheticDataset generate_dataset(const PopulationSpec& spec, int n_test, int n_train,
                                  int t_test, int t_train, std::uint64_t master_seed) {
  spec.validate();
  if (n_test < 1 || n_train < 1 || t_test < 1 || t_train < 1)
    throw PreconditionError("dataset sizes and horizons must be at least 1");

  const MixtureTables tab = build_tables(spec);
  SyntheticDataset ds;
  ds.train.reserve(static_cast<std::size_t>(n_train));
  ds.test.reserve(static_cast<std::size_t>(n_test));

  // Train users occupy the first seed indices (and user ids), test users
  // follow, so resizing one split leaves the other split's draws intact.
  auto make_user = [&](int global_index, int rounds) {
    std::mt19937_64 rng = make_engine(master_seed, static_cast<std::uint64_t>(global_index));
    SyntheticUser u;
    u.user_id = global_index;
    const PopulationSample s = draw_sample(tab, rng);
    u.cluster_id = s.component;
    u.theta_true = s.params;
    u.history.contexts.reserve(static_cast<std::size_t>(rounds));
    u.history.choices.reserve(static_cast<std::size_t>(rounds));
    for (int t = 0; t < rounds; ++t) {
      const TravelContext ctx = sample_context(spec, rng);
      u.history.contexts.push_back(ctx);
      u.history.choices.push_back(generate_choice(u.theta_true, ctx, spec.noise_temperature, rng));
    }
    return u;
  };

  for (int i = 0; i < n_train; ++i) ds.train.push_back(make_user(i, t_train));
  for (int i = 0; i < n_test; ++i) ds.test.push_back(make_user(n_train + i, t_test));
  return ds;
}

double empirical_centroid_loss(const SyntheticDataset& dataset, const CentroidSet& centroids) {
  if (centroids.size() == 0) throw PreconditionError("centroid loss needs at least one centroid");
  if (dataset.test.empty()) throw PreconditionError("centroid loss needs a nonempty test split");
  double total = 0.0;
  for (const auto& u : dataset.test) {
    u.history.validate();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centroids.centroids) {
      double mistakes = 0.0;
      for (std::size_t t = 0; t < u.history.rounds(); ++t)
        mistakes += choice_loss(predict_choice(c, u.history.contexts[t]), u.history.choices[t]);
      best = std::min(best, mistakes);
    }
    total += best / static_cast<double>(u.history.rounds());
  }
  return total / static_cast<double>(dataset.test.size());
}

std::string dataset_to_csv(const SyntheticDataset& dataset) {
  std::string out = kDatasetHeader;
  out += '\n';
  for (const auto& u : dataset.train) append_user_rows(out, u, "train");
  for (const auto& u : dataset.test) append_user_rows(out, u, "test");
  return out;
}

void write_dataset_csv(const SyntheticDataset& dataset, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << dataset_to_csv(dataset);
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

SyntheticDataset read_dataset_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(f, line)) throw DataError("dataset file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader)
    throw DataError("dataset header mismatch; expected '" + std::string(kDatasetHeader) + "'");

  struct Partial {
    SyntheticUser user;
    int next_round = 1;
    bool is_train = false;
  };
  std::vector<Partial> users;                // in order of first appearance
  std::map<std::pair<int, bool>, std::size_t> index;  // (user_id, is_train) -> slot

  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 10)
      throw DataError("dataset line " + std::to_string(line_no) + ": expected 10 fields, got " +
                      std::to_string(fields.size()));

    const int user_id = parse_int(fields[0], line_no);
    bool is_train = false;
    if (fields[1] == "train")
      is_train = true;
    else if (fields[1] != "test")
      throw DataError("dataset line " + std::to_string(line_no) + ": split must be train or test");
    const int cluster_id = parse_int(fields[2], line_no);
    PreferenceParams theta{parse_double(fields[3], line_no), parse_double(fields[4], line_no),
                           parse_double(fields[5], line_no)};
    if (!theta.valid())
      throw DataError("dataset line " + std::to_string(line_no) + ": invalid preference row");
    const int round = parse_int(fields[6], line_no);
    TravelContext ctx{parse_double(fields[7], line_no), parse_double(fields[8], line_no)};
    Route choice;
    try {
      choice = route_from_int(parse_int(fields[9], line_no));
    } catch (const std::invalid_argument& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }

    const auto key = std::make_pair(user_id, is_train);
    auto it = index.find(key);
    if (it == index.end()) {
      Partial p;
      p.user.user_id = user_id;
      p.user.cluster_id = cluster_id;
      p.user.theta_true = theta;
      p.is_train = is_train;
      it = index.emplace(key, users.size()).first;
      users.push_back(std::move(p));
    }
    Partial& p = users[it->second];
    if (cluster_id != p.user.cluster_id || theta.bias != p.user.theta_true.bias ||
        theta.slope != p.user.theta_true.slope ||
        theta.orientation != p.user.theta_true.orientation)
      throw DataError("dataset line " + std::to_string(line_no) +
                      ": user metadata changed mid-file");
    if (round != p.next_round)
      throw DataError("dataset line " + std::to_string(line_no) + ": expected round " +
                      std::to_string(p.next_round) + ", got " + std::to_string(round));
    ++p.next_round;
    p.user.history.contexts.push_back(ctx);
    p.user.history.choices.push_back(choice);
  }

  SyntheticDataset ds;
  for (auto& p : users) {
    p.user.history.validate();
    (p.is_train ? ds.train : ds.test).push_back(std::move(p.user));
  }
  if (ds.train.empty() && ds.test.empty())
    throw DataError("dataset file '" + path + "' has no data rows");
  return ds;
}

PopulationSpec population_spec_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("population spec is not valid JSON: ") + e.what());
  }
  try {
    PopulationSpec spec;
    if (!j.contains("components") || !j["components"].is_array() || j["components"].empty())
      throw ConfigError("population spec needs a nonempty 'components' array");
    for (const auto& jc : j["components"]) {
      GaussianComponent c;
      c.weight = jc.at("weight").get<double>();
      const auto& jm = jc.at("mean");
      if (!jm.is_array() || jm.size() != 3) throw ConfigError("component mean must have 3 entries");
      for (int i = 0; i < 3; ++i) c.mean[i] = jm[static_cast<std::size_t>(i)].get<double>();
      c.cov = json_to_matrix3(jc.at("cov"), "component cov");
      spec.components.push_back(c);
    }
    if (j.contains("context_ranges")) {
      const auto& jr = j["context_ranges"];
      if (jr.contains("tau")) spec.tau_range = json_to_range(jr["tau"], "tau");
      if (jr.contains("e")) spec.e_range = json_to_range(jr["e"], "e");
    }
    if (j.contains("noise_temperature")) spec.noise_temperature = j["noise_temperature"].get<double>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("population spec field error: ") + e.what());
  }
}

PopulationSpec read_population_spec(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return population_spec_from_json(ss.str());
}

std::string population_spec_to_json(const PopulationSpec& spec) {
  nlohmann::json j;
  j["components"] = nlohmann::json::array();
  for (const auto& c : spec.components) {
    nlohmann::json jc;
    jc["weight"] = c.weight;
    jc["mean"] = {c.mean[0], c.mean[1], c.mean[2]};
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({c.cov(r, 0), c.cov(r, 1), c.cov(r, 2)});
    jc["cov"] = rows;
    j["components"].push_back(jc);
  }
  j["context_ranges"] = {{"tau", {spec.tau_range.lo, spec.tau_range.hi}},
                         {"e", {spec.e_range.lo, spec.e_range.hi}}};
  j["noise_temperature"] = spec.noise_temperature;
  j["seed"] = spec.seed;
  return j.dump(2);
}

}  // namespace ewc
