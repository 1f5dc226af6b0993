#pragma once

// Synthetic population: preference parameters drawn from a Gaussian
// mixture, uniform-box contexts, and (optionally noisy) choice generation.
// Also owns the dataset CSV format and the population-spec JSON format.

#include "ewc/clustering.hpp"
#include "ewc/core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace ewc {

struct GaussianComponent {
  double weight = 1.0;
  Vec3 mean = Vec3::Zero();            // (bias, slope, orientation propensity)
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
};

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct PopulationSpec {
  std::vector<GaussianComponent> components;
  ValueRange tau_range{1.0, 1.5};
  ValueRange e_range{0.5, 1.0};
  double noise_temperature = 0.0;
  std::uint64_t seed = 0;

  // Throws ConfigError on invalid weights, non-PSD covariances, or bad ranges.
  void validate() const;
};

struct PopulationSample {
  PreferenceParams params;
  int component = 0;
  Vec3 raw = Vec3::Zero();  // pre-sign-mapping Gaussian draw
};

struct SyntheticUser {
  int user_id = 0;
  int cluster_id = 0;
  PreferenceParams theta_true;
  UserHistory history;
};

struct SyntheticDataset {
  std::vector<SyntheticUser> train;
  std::vector<SyntheticUser> test;
};

// One parameter draw: component from the mixture weights, then a Gaussian
// in parameter space; the third coordinate maps to orientation by sign
// (zero maps to +1).
PopulationSample sample_one(const PopulationSpec& spec, std::mt19937_64& rng);

std::vector<PopulationSample> sample_population(const PopulationSpec& spec, int count,
                                                std::mt19937_64& rng);

TravelContext sample_context(const PopulationSpec& spec, std::mt19937_64& rng);

// temperature == 0 reproduces predict_choice exactly; otherwise the eco
// route is chosen with probability sigmoid(margin / temperature).
Route generate_choice(const PreferenceParams& theta, const TravelContext& ctx,
                      double temperature, std::mt19937_64& rng);

// Train and test users drawn from the same population. Every user gets an
// independent stream derived from master_seed + user index, so the dataset
// is reproducible user-by-user.
SyntheticDataset generate_dataset(const PopulationSpec& spec, int n_test, int n_train,
                                  int t_test, int t_train, std::uint64_t master_seed);

// Mean over test users of the per-round loss of each user's best centroid.
double empirical_centroid_loss(const SyntheticDataset& dataset, const CentroidSet& centroids);

// Dataset CSV: header user_id,split,cluster_id,b,s,o,round,tau,e,choice,
// one row per (user, round), '.' decimal separator, round-trip-exact doubles.
std::string dataset_to_csv(const SyntheticDataset& dataset);
void write_dataset_csv(const SyntheticDataset& dataset, const std::string& path);
SyntheticDataset read_dataset_csv(const std::string& path);

// Population spec JSON: components[{weight, mean[3], cov[3][3]}],
// context_ranges{tau[2], e[2]}, noise_temperature, seed.
PopulationSpec population_spec_from_json(const std::string& json_text);
PopulationSpec read_population_spec(const std::string& path);
std::string population_spec_to_json(const PopulationSpec& spec);

}  // namespace ewc
