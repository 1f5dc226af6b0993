#pragma once

// Offline preference fitting: one linear separator per training user,
// learned by Pegasos-style subgradient descent on the regularized hinge
// loss and mapped onto the (bias, slope, orientation) parameterization.

#include "ewc/core.hpp"

#include <cstdint>
#include <vector>

namespace ewc {

struct SeparatorFitConfig {
  double regularization = 1e-3;
  int iterations = 10000;       // subgradient steps, inverse-time step decay
  std::uint64_t seed = 0;
  int polish_max_epochs = 20000;  // perceptron passes if hinge descent leaves errors
};

struct FitResult {
  PreferenceParams params;
  bool degenerate = false;  // single-class history, params are the fallback
};

// Map a raw separating form w1*tau + w2*e + w0 (positive side = eco) onto
// PreferenceParams. w1 == 0 is perturbed by 1e-9 away from zero; (0, 0, w0)
// is rejected.
PreferenceParams canonicalize(double w1, double w2, double w0);

// Fit one user's decision boundary. Single-class histories return a
// far-off-the-box fallback boundary predicting the observed class
// everywhere, flagged degenerate. On separable histories the returned
// parameters reproduce every training label.
FitResult fit_user_separator(const UserHistory& history, const SeparatorFitConfig& config);

// Elementwise fit_user_separator, order preserved; degeneracy is flagged
// per user, never aborts the batch.
std::vector<FitResult> fit_all_users(const std::vector<UserHistory>& dataset,
                                     const SeparatorFitConfig& config);

inline std::vector<PreferenceParams> fitted_params(const std::vector<FitResult>& fits) {
  std::vector<PreferenceParams> params;
  params.reserve(fits.size());
  for (const FitResult& f : fits) params.push_back(f.params);
  return params;
}

}  // namespace ewc
