#include "ewc/errors.hpp"
#include "ewc/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace ewc {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Replace-by-rename so a crashed writer never leaves a torn file behind.
void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
    f << content;
    f.flush();
    if (!f) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' onto '" + path.string() + "': " +
                        ec.message());
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split_fields(const std::string& line) {
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

double to_double(const std::string& s, const char* file, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string(file) + " line " + std::to_string(line_no) + ": bad number '" +
                    s + "'");
  }
}

constexpr const char* kRegretHeader =
    "policy,round,cumulative_loss,cumulative_regret_vs_oracle,seed";
constexpr const char* kBoundsHeader =
    "seed,n_users,horizon,k,centroid_loss_rate,hedge_term,centroid_term,bound,"
    "ewc_expected_regret,holds,oracle_ftl_rate";

std::string policy_color(const std::string& policy) {
  static const std::map<std::string, std::string> palette{
      {"ewc", "#1f77b4"},        {"linucb", "#d62728"},        {"ftl", "#2ca02c"},
      {"oracle_ftl", "#9467bd"}, {"oracle_cluster", "#ff7f0e"}, {"oracle_theta", "#7f7f7f"},
      {"ewc_expected", "#17becf"}};
  const auto it = palette.find(policy);
  return it == palette.end() ? std::string("#8c564b") : it->second;
}

// Round a positive span to a pleasant tick step (1/2/5 times a power of 10).
double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double step = 10.0;
  if (frac <= 1.0)
    step = 1.0;
  else if (frac <= 2.0)
    step = 2.0;
  else if (frac <= 5.0)
    step = 5.0;
  return step * mag;
}

}  // namespace

void export_report(const RegretReport& report, const std::string& directory) {
  const fs::path dir = directory;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + directory + "': " + ec.message());

  std::string regret = kRegretHeader;
  regret += '\n';
  for (const auto& c : report.curves) {
    for (std::size_t r = 0; r < c.cumulative_loss.size(); ++r) {
      regret += c.policy;
      regret += ',';
      regret += std::to_string(r + 1);
      regret += ',';
      regret += fmt(c.cumulative_loss[r]);
      regret += ',';
      regret += fmt(c.cumulative_regret[r]);
      regret += ',';
      regret += std::to_string(c.seed);
      regret += '\n';
    }
  }
  write_file_atomic(dir / "regret.csv", regret);

  std::string bounds = kBoundsHeader;
  bounds += '\n';
  for (const auto& b : report.bounds) {
    bounds += std::to_string(b.seed);
    bounds += ',';
    bounds += std::to_string(b.n_users);
    bounds += ',';
    bounds += std::to_string(b.horizon);
    bounds += ',';
    bounds += std::to_string(b.num_clusters);
    bounds += ',';
    bounds += fmt(b.centroid_loss_rate);
    bounds += ',';
    bounds += fmt(b.hedge_term);
    bounds += ',';
    bounds += fmt(b.centroid_term);
    bounds += ',';
    bounds += fmt(b.bound);
    bounds += ',';
    bounds += fmt(b.ewc_expected_regret);
    bounds += ',';
    bounds += b.holds ? "1" : "0";
    bounds += ',';
    bounds += fmt(b.oracle_ftl_rate);
    bounds += '\n';
  }
  write_file_atomic(dir / "bounds.csv", bounds);

  write_file_atomic(dir / "config.json",
                    report.config_json.empty() ? std::string("{}\n")
                                               : report.config_json + "\n");
  write_file_atomic(dir / "regret.svg", render_regret_svg(report));
}

std::string render_regret_svg(const RegretReport& report) {
  // One polyline per policy: median-across-seeds cumulative regret.
  std::vector<std::string> order;
  for (const auto& name : known_policies()) order.push_back(name);
  order.push_back("ewc_expected");
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (const auto& name : order) {
    bool present = false;
    for (const auto& c : report.curves)
      if (c.policy == name) present = true;
    if (present) series.emplace_back(name, median_regret_curve(report, name));
  }
  if (series.empty()) throw PreconditionError("report has no curves to plot");

  const std::size_t horizon = series.front().second.size();
  double y_min = 0.0;
  double y_max = 1.0;
  for (const auto& [name, curve] : series) {
    for (double v : curve) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }

  const double width = 960.0;
  const double height = 600.0;
  const double left = 80.0;
  const double right = width - 180.0;
  const double top = 48.0;
  const double bottom = height - 56.0;

  auto x_of = [&](std::size_t round) {
    if (horizon == 1) return (left + right) / 2.0;
    return left + (right - left) * static_cast<double>(round) /
                      static_cast<double>(horizon - 1);
  };
  auto y_of = [&](double v) {
    return bottom - (bottom - top) * (v - y_min) / (y_max - y_min);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt6(width) + " " +
         fmt6(height) + "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  svg += "<rect width=\"" + fmt6(width) + "\" height=\"" + fmt6(height) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt6((left + right) / 2.0) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">Median cumulative regret vs. "
         "true-preference oracle</text>\n";

  // Gridlines and y tick labels.
  const double step = nice_step(y_max - y_min, 6);
  for (double v = std::ceil(y_min / step) * step; v <= y_max + 1e-9; v += step) {
    const double y = y_of(v);
    svg += "<line x1=\"" + fmt6(left) + "\" y1=\"" + fmt6(y) + "\" x2=\"" + fmt6(right) +
           "\" y2=\"" + fmt6(y) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + fmt6(left - 8.0) + "\" y=\"" + fmt6(y + 4.0) +
           "\" text-anchor=\"end\">" + fmt6(v) + "</text>\n";
  }
  // X ticks at ~8 rounds.
  const std::size_t x_step = std::max<std::size_t>(1, horizon / 8);
  for (std::size_t r = 0; r < horizon; r += x_step) {
    const double x = x_of(r);
    svg += "<line x1=\"" + fmt6(x) + "\" y1=\"" + fmt6(bottom) + "\" x2=\"" + fmt6(x) +
           "\" y2=\"" + fmt6(bottom + 5.0) + "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + fmt6(x) + "\" y=\"" + fmt6(bottom + 20.0) +
           "\" text-anchor=\"middle\">" + std::to_string(r + 1) + "</text>\n";
  }
  svg += "<line x1=\"" + fmt6(left) + "\" y1=\"" + fmt6(bottom) + "\" x2=\"" + fmt6(right) +
         "\" y2=\"" + fmt6(bottom) + "\" stroke=\"#333333\"/>\n";
  svg += "<line x1=\"" + fmt6(left) + "\" y1=\"" + fmt6(top) + "\" x2=\"" + fmt6(left) +
         "\" y2=\"" + fmt6(bottom) + "\" stroke=\"#333333\"/>\n";
  svg += "<text x=\"" + fmt6((left + right) / 2.0) + "\" y=\"" + fmt6(height - 16.0) +
         "\" text-anchor=\"middle\">round</text>\n";

  for (const auto& [name, curve] : series) {
    std::string points;
    for (std::size_t r = 0; r < curve.size(); ++r) {
      points += fmt6(x_of(r));
      points += ',';
      points += fmt6(y_of(curve[r]));
      points += ' ';
    }
    svg += "<polyline fill=\"none\" stroke=\"" + policy_color(name) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
  }

  // Legend.
  double ly = top + 10.0;
  const double lx = right + 16.0;
  for (const auto& [name, curve] : series) {
    (void)curve;
    svg += "<rect x=\"" + fmt6(lx) + "\" y=\"" + fmt6(ly - 10.0) +
           "\" width=\"14\" height=\"14\" fill=\"" + policy_color(name) + "\"/>\n";
    svg += "<text x=\"" + fmt6(lx + 20.0) + "\" y=\"" + fmt6(ly + 2.0) + "\">" + name +
           "</text>\n";
    ly += 22.0;
  }
  svg += "</svg>\n";
  return svg;
}

void write_model_json(const TrainedModel& model, const std::string& path) {
  nlohmann::json j;
  j["k"] = model.num_clusters;
  j["clustering"] = model.clustering;
  j["seed"] = model.seed;
  j["centroids"] = nlohmann::json::array();
  for (const auto& c : model.centroids.centroids)
    j["centroids"].push_back({{"b", c.bias}, {"s", c.slope}, {"o", c.orientation}});
  write_file_atomic(path, j.dump(2) + "\n");
}

TrainedModel read_model_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    TrainedModel model;
    model.num_clusters = j.at("k").get<int>();
    model.clustering = j.at("clustering").get<std::string>();
    model.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jc : j.at("centroids")) {
      PreferenceParams p{jc.at("b").get<double>(), jc.at("s").get<double>(),
                         jc.at("o").get<double>()};
      if (!p.valid()) throw DataError("model file '" + path + "' holds an invalid centroid");
      model.centroids.centroids.push_back(p);
    }
    if (model.centroids.size() == 0) throw DataError("model file '" + path + "' has no centroids");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file '" + path + "' field error: " + e.what());
  }
}

RegretReport read_report_csvs(const std::string& directory) {
  const fs::path dir = directory;
  RegretReport report;

  const std::string regret = slurp(dir / "regret.csv");
  std::istringstream rs(regret);
  std::string line;
  if (!std::getline(rs, line)) throw DataError("regret.csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRegretHeader) throw DataError("regret.csv header mismatch");

  std::map<std::pair<std::string, std::uint64_t>, std::size_t> slot_of;
  int line_no = 1;
  while (std::getline(rs, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != 5)
      throw DataError("regret.csv line " + std::to_string(line_no) + ": expected 5 fields");
    const std::string& policy = f[0];
    const auto round = static_cast<std::size_t>(to_double(f[1], "regret.csv", line_no));
    const double loss = to_double(f[2], "regret.csv", line_no);
    const double reg = to_double(f[3], "regret.csv", line_no);
    const auto seed = static_cast<std::uint64_t>(to_double(f[4], "regret.csv", line_no));

    const auto key = std::make_pair(policy, seed);
    auto it = slot_of.find(key);
    if (it == slot_of.end()) {
      it = slot_of.emplace(key, report.curves.size()).first;
      PolicyCurve c;
      c.policy = policy;
      c.seed = seed;
      report.curves.push_back(std::move(c));
    }
    PolicyCurve& c = report.curves[it->second];
    if (round != c.cumulative_loss.size() + 1)
      throw DataError("regret.csv line " + std::to_string(line_no) + ": rounds out of order");
    c.cumulative_loss.push_back(loss);
    c.cumulative_regret.push_back(reg);
  }
  if (report.curves.empty()) throw DataError("regret.csv has no data rows");

  for (const auto& c : report.curves) {
    if (c.policy != "ewc_expected" &&
        std::find(report.policies.begin(), report.policies.end(), c.policy) ==
            report.policies.end())
      report.policies.push_back(c.policy);
    if (std::find(report.seeds.begin(), report.seeds.end(), c.seed) == report.seeds.end())
      report.seeds.push_back(c.seed);
  }
  report.horizon = static_cast<int>(report.curves.front().cumulative_loss.size());

  const fs::path bounds_path = dir / "bounds.csv";
  if (fs::exists(bounds_path)) {
    std::istringstream bs(slurp(bounds_path));
    if (!std::getline(bs, line)) throw DataError("bounds.csv is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kBoundsHeader) throw DataError("bounds.csv header mismatch");
    line_no = 1;
    while (std::getline(bs, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      const auto f = split_fields(line);
      if (f.size() != 11)
        throw DataError("bounds.csv line " + std::to_string(line_no) + ": expected 11 fields");
      BoundRow b;
      b.seed = static_cast<std::uint64_t>(to_double(f[0], "bounds.csv", line_no));
      b.n_users = static_cast<int>(to_double(f[1], "bounds.csv", line_no));
      b.horizon = static_cast<int>(to_double(f[2], "bounds.csv", line_no));
      b.num_clusters = static_cast<int>(to_double(f[3], "bounds.csv", line_no));
      b.centroid_loss_rate = to_double(f[4], "bounds.csv", line_no);
      b.hedge_term = to_double(f[5], "bounds.csv", line_no);
      b.centroid_term = to_double(f[6], "bounds.csv", line_no);
      b.bound = to_double(f[7], "bounds.csv", line_no);
      b.ewc_expected_regret = to_double(f[8], "bounds.csv", line_no);
      b.holds = f[9] == "1";
      b.oracle_ftl_rate = to_double(f[10], "bounds.csv", line_no);
      report.bounds.push_back(b);
    }
    if (!report.bounds.empty()) {
      report.n_users = report.bounds.front().n_users;
      report.num_clusters = report.bounds.front().num_clusters;
    }
  }

  const fs::path config_path = dir / "config.json";
  if (fs::exists(config_path)) report.config_json = slurp(config_path);

  return report;
}

}  // namespace ewc
