#pragma once

// Comparison policies: Follow-the-Leader, its hindsight oracle, disjoint
// per-arm LinUCB, and the two clairvoyant oracles (cluster mean / true
// preference). All tie-breaks resolve to the standard route.

#include "ewc/core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ewc {

struct FtlState {
  long count_standard = 0;
  long count_eco = 0;
};

// Majority choice so far; empty history or a tie picks the standard route.
inline Route ftl_recommend(const FtlState& state) {
  return state.count_eco > state.count_standard ? Route::eco : Route::standard;
}

inline void ftl_observe(FtlState& state, Route choice) {
  if (choice == Route::standard)
    ++state.count_standard;
  else
    ++state.count_eco;
}

// Mistakes of the hindsight-majority rule: T * min{p, 1 - p} where p is the
// empirical share of the standard route, which is exactly the minority count.
inline double oracle_ftl_mistakes(const UserHistory& history) {
  history.validate();
  long standard = 0;
  for (Route c : history.choices)
    if (c == Route::standard) ++standard;
  const long eco = static_cast<long>(history.rounds()) - standard;
  return static_cast<double>(std::min(standard, eco));
}

// Disjoint LinUCB over the two routes: per-arm ridge model (design matrix
// initialized to identity) with feature x(standard) = [1, 1] and
// x(eco) = [tau, e]; binary reward 1 iff the pulled arm matches the choice.
struct LinUcbArm {
  Eigen::Matrix2d design = Eigen::Matrix2d::Identity();
  Eigen::Vector2d response = Eigen::Vector2d::Zero();
};

struct LinUcbState {
  LinUcbArm standard;
  LinUcbArm eco;
  double alpha = 1.0;
};

// sqrt(0.5 ln(2 T A / delta)) with A the number of arms.
inline double linucb_default_alpha(Eigen::Index horizon, Eigen::Index num_arms = 2,
                                   double delta = 0.1) {
  if (horizon < 1 || num_arms < 1 || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("linucb alpha needs horizon/arms >= 1 and delta in (0,1)");
  return std::sqrt(0.5 * std::log(2.0 * static_cast<double>(horizon) *
                                  static_cast<double>(num_arms) / delta));
}

inline LinUcbState linucb_init(double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("linucb alpha must be nonnegative");
  LinUcbState state;
  state.alpha = alpha;
  return state;
}

namespace detail {
inline double linucb_ucb(const LinUcbArm& arm, const Eigen::Vector2d& x, double alpha) {
  const auto llt = arm.design.llt();
  const Eigen::Vector2d theta_hat = llt.solve(arm.response);
  const Eigen::Vector2d design_inv_x = llt.solve(x);
  return x.dot(theta_hat) + alpha * std::sqrt(x.dot(design_inv_x));
}
}  // namespace detail

// Recommends the arm with the larger upper confidence bound, then observes
// the user's choice and updates only the pulled arm (bandit feedback).
inline Route linucb_step(LinUcbState& state, const TravelContext& ctx, Route actual) {
  const Eigen::Vector2d x_standard(1.0, 1.0);
  const Eigen::Vector2d x_eco(ctx.tau, ctx.e);
  const double ucb_standard = detail::linucb_ucb(state.standard, x_standard, state.alpha);
  const double ucb_eco = detail::linucb_ucb(state.eco, x_eco, state.alpha);
  const Route rec = ucb_eco > ucb_standard ? Route::eco : Route::standard;

  const double reward = rec == actual ? 1.0 : 0.0;
  LinUcbArm& pulled = rec == Route::standard ? state.standard : state.eco;
  const Eigen::Vector2d& x = rec == Route::standard ? x_standard : x_eco;
  pulled.design += x * x.transpose();
  pulled.response += reward * x;
  return rec;
}

// Clairvoyant policies: prediction with the user's true cluster mean, or
// with the user's own true preference parameters.
inline Route oracle_cluster_recommend(const PreferenceParams& cluster_mean,
                                      const TravelContext& ctx) {
  return predict_choice(cluster_mean, ctx);
}

inline Route oracle_theta_recommend(const PreferenceParams& theta_true,
                                    const TravelContext& ctx) {
  return predict_choice(theta_true, ctx);
}

}  // namespace ewc
