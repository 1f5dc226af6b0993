#include "ewc/offline.hpp"

#include "ewc/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace ewc {

namespace {

constexpr double kFallbackBias = 1e6;

// +1 for the eco route, -1 for the standard route.
double hinge_label(Route choice) { return choice == Route::eco ? 1.0 : -1.0; }

Vec3 feature(const TravelContext& ctx) { return {ctx.tau, ctx.e, 1.0}; }

std::size_t training_errors(const PreferenceParams& params, const UserHistory& history) {
  std::size_t errors = 0;
  for (std::size_t t = 0; t < history.rounds(); ++t)
    if (predict_choice(params, history.contexts[t]) != history.choices[t]) ++errors;
  return errors;
}

}  // namespace

PreferenceParams canonicalize(double w1, double w2, double w0) {
  if (w1 == 0.0 && w2 == 0.0)
    throw std::invalid_argument("canonicalize needs a nonzero (w1, w2)");
  if (w1 == 0.0) {
    // Horizontal boundary: nudge the tau coefficient off zero, signed so the
    // resulting slope stays positive.
    w1 = w2 < 0.0 ? 1e-9 : -1e-9;
  }
  PreferenceParams params;
  params.orientation = w1 > 0.0 ? 1.0 : -1.0;
  params.slope = -w2 / w1;
  params.bias = -w0 / w1;
  return params;
}

FitResult fit_user_separator(const UserHistory& history, const SeparatorFitConfig& config) {
  history.validate();
  if (!(config.regularization > 0.0) || config.iterations < 1)
    throw std::invalid_argument("fit config needs regularization > 0 and iterations >= 1");

  const std::size_t n = history.rounds();
  bool any_standard = false;
  bool any_eco = false;
  for (Route c : history.choices) (c == Route::standard ? any_standard : any_eco) = true;

  if (!(any_standard && any_eco)) {
    // Single observed class: a boundary far outside the context box that
    // predicts that class everywhere.
    FitResult result;
    result.params = {any_standard ? kFallbackBias : -kFallbackBias, 0.0, 1.0};
    result.degenerate = true;
    return result;
  }

  const double lambda = config.regularization;
  std::mt19937_64 rng = make_engine(config.seed, 0, /*salt=*/0x0ff1ce);
  Vec3 w = Vec3::Zero();
  for (int t = 1; t <= config.iterations; ++t) {
    const std::size_t i = uniform_index(rng, n);
    const Vec3 phi = feature(history.contexts[i]);
    const double z = hinge_label(history.choices[i]);
    const double step = 1.0 / (lambda * static_cast<double>(t));
    const double margin = z * w.dot(phi);
    w *= 1.0 - 1.0 / static_cast<double>(t);
    if (margin < 1.0) w += step * z * phi;
  }

  if (w[0] == 0.0 && w[1] == 0.0) w[1] = -1e-9;  // let the polish loop recover

  FitResult result;
  result.params = canonicalize(w[0], w[1], w[2]);
  std::size_t errors = training_errors(result.params, history);
  if (errors == 0) return result;

  // Perceptron polish: converges to zero training errors whenever the
  // history is separable with margin; otherwise the best weights seen are
  // kept (pocket rule). Deterministic, fixed scan order.
  Vec3 best_w = w;
  std::size_t best_errors = errors;
  for (int epoch = 0; epoch < config.polish_max_epochs && best_errors > 0; ++epoch) {
    bool updated = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 phi = feature(history.contexts[i]);
      const double z = hinge_label(history.choices[i]);
      if (z * w.dot(phi) <= 0.0) {
        w += z * phi;
        updated = true;
      }
    }
    if ((w[0] != 0.0 || w[1] != 0.0)) {
      const std::size_t e = training_errors(canonicalize(w[0], w[1], w[2]), history);
      if (e < best_errors) {
        best_errors = e;
        best_w = w;
      }
    }
    if (!updated) break;
  }
  result.params = canonicalize(best_w[0], best_w[1], best_w[2]);
  return result;
}

std::vector<FitResult> fit_all_users(const std::vector<UserHistory>& dataset,
                                     const SeparatorFitConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("fit_all_users needs a nonempty dataset");
  std::vector<FitResult> fits;
  fits.reserve(dataset.size());
  for (const UserHistory& history : dataset) fits.push_back(fit_user_separator(history, config));
  return fits;
}

}  // namespace ewc
