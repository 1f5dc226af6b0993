#pragma once

// Domain types and the route-choice prediction rule shared by every policy.
// All types here are immutable values and all operations are pure functions.

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ewc {

using Vec3 = Eigen::Vector3d;

// The two route options offered each round. The eco route trades extra
// travel time for lower emissions.
enum class Route : int { standard = 1, eco = 2 };

inline int route_to_int(Route r) { return static_cast<int>(r); }

inline Route route_from_int(int v) {
  if (v != 1 && v != 2) throw std::invalid_argument("route value must be 1 or 2");
  return static_cast<Route>(v);
}

// Travel metrics of the eco route relative to the standard route; e.g.
// tau = 1.2, e = 0.9 reads as 120% travel time at 90% emissions. The
// standard route is the fixed reference [1, 1] and is never stored.
struct TravelContext {
  double tau = 1.0;
  double e = 1.0;
};

// A user's linear decision boundary tau = slope * e + bias in context space.
// orientation (+1 or -1) selects which side of the boundary maps to the eco
// route. Cluster centroids use the same representation.
struct PreferenceParams {
  double bias = 0.0;
  double slope = 0.0;
  double orientation = 1.0;

  Vec3 vec() const { return {bias, slope, orientation}; }

  static PreferenceParams from_vec(const Vec3& v) {
    return {v[0], v[1], v[2] < 0.0 ? -1.0 : 1.0};
  }

  bool valid() const {
    return std::isfinite(bias) && std::isfinite(slope) &&
           (orientation == 1.0 || orientation == -1.0);
  }
};

// Signed distance of a context from the decision boundary; positive means
// the eco side.
inline double decision_margin(const PreferenceParams& p, const TravelContext& ctx) {
  return p.orientation * (ctx.tau - p.slope * ctx.e - p.bias);
}

// Strictly positive margin picks the eco route; a boundary tie resolves to
// the standard route.
inline Route predict_choice(const PreferenceParams& p, const TravelContext& ctx) {
  return decision_margin(p, ctx) > 0.0 ? Route::eco : Route::standard;
}

// 0/1 prediction loss (the squared difference of the two route labels).
inline double choice_loss(Route predicted, Route actual) {
  return predicted == actual ? 0.0 : 1.0;
}

// One user's observed decision rounds, in round order.
struct UserHistory {
  std::vector<TravelContext> contexts;
  std::vector<Route> choices;

  std::size_t rounds() const { return contexts.size(); }

  void validate() const {
    if (contexts.empty() || contexts.size() != choices.size())
      throw std::invalid_argument("history needs equal-length, nonempty context/choice lists");
  }
};

// Per-expert 0/1 losses for one round, element k for centroid k.
inline Eigen::VectorXd expert_loss_vector(const std::vector<PreferenceParams>& centroids,
                                          const TravelContext& ctx, Route actual) {
  Eigen::VectorXd losses(static_cast<Eigen::Index>(centroids.size()));
  for (std::size_t k = 0; k < centroids.size(); ++k)
    losses[static_cast<Eigen::Index>(k)] = choice_loss(predict_choice(centroids[k], ctx), actual);
  return losses;
}

}  // namespace ewc
