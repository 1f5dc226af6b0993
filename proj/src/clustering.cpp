#include "ewc/clustering.hpp"

#include "ewc/errors.hpp"
#include "ewc/rng.hpp"

#include <limits>
#include <stdexcept>

namespace ewc {

namespace {

std::vector<Vec3> to_points(const std::vector<PreferenceParams>& params) {
  std::vector<Vec3> points;
  points.reserve(params.size());
  for (const PreferenceParams& p : params) points.push_back(p.vec());
  return points;
}

// k-means++ seeding in parameter space (used by both distance variants).
std::vector<std::size_t> seed_kmeanspp(const std::vector<Vec3>& points, int k,
                                       std::mt19937_64& rng) {
  std::vector<std::size_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  chosen.push_back(uniform_index(rng, points.size()));
  std::vector<double> min_sq(points.size(), std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = (points[i] - points[chosen.back()]).squaredNorm();
      if (d < min_sq[i]) min_sq[i] = d;
      total += min_sq[i];
    }
    if (total <= 0.0) {
      chosen.push_back(uniform_index(rng, points.size()));
      continue;
    }
    double target = uniform_unit(rng) * total;
    std::size_t pick = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      target -= min_sq[i];
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    chosen.push_back(pick);
  }
  return chosen;
}

void check_inputs(std::size_t num_users, int k) {
  if (num_users == 0) throw std::invalid_argument("clustering needs at least one user");
  if (k < 1) throw std::invalid_argument("clustering needs at least one cluster");
  if (static_cast<std::size_t>(k) > num_users)
    throw PreconditionError("cluster count exceeds number of users");
}

double orientation_sign(double mean_orientation) {
  return mean_orientation < 0.0 ? -1.0 : 1.0;
}

// Reassigns each empty cluster's centroid to the worst-fit point. Returns
// true if any cluster was reseeded.
template <typename SetCentroid>
bool reseed_empty(const std::vector<int>& counts, const std::vector<double>& dist_to_assigned,
                  std::vector<bool>& taken, SetCentroid&& set_centroid) {
  bool reseeded = false;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0) continue;
    double worst = -1.0;
    std::size_t worst_i = 0;
    for (std::size_t i = 0; i < dist_to_assigned.size(); ++i) {
      if (taken[i]) continue;
      if (dist_to_assigned[i] > worst) {
        worst = dist_to_assigned[i];
        worst_i = i;
      }
    }
    taken[worst_i] = true;
    set_centroid(k, worst_i);
    reseeded = true;
  }
  return reseeded;
}

}  // namespace

double loss_guided_distance(const UserHistory& history, const PreferenceParams& centroid) {
  history.validate();
  double mismatches = 0.0;
  for (std::size_t t = 0; t < history.rounds(); ++t)
    mismatches += choice_loss(predict_choice(centroid, history.contexts[t]), history.choices[t]);
  return mismatches;
}

ClusteringResult kmeans_loss_guided(const std::vector<PreferenceParams>& params,
                                    const std::vector<UserHistory>& histories,
                                    int num_clusters, std::uint64_t seed, int max_iters) {
  check_inputs(params.size(), num_clusters);
  if (histories.size() != params.size())
    throw std::invalid_argument("params and histories must be aligned");

  const std::size_t n = params.size();
  const auto k = static_cast<std::size_t>(num_clusters);
  std::mt19937_64 rng = make_engine(seed, 0, /*salt=*/0x5eed);
  const std::vector<Vec3> points = to_points(params);

  std::vector<PreferenceParams> centroids;
  centroids.reserve(k);
  for (std::size_t i : seed_kmeanspp(points, num_clusters, rng)) centroids.push_back(params[i]);

  ClusteringResult result;
  std::vector<int> assignment(n, -1);
  std::vector<double> assigned_dist(n, 0.0);
  for (int iter = 0; iter < max_iters; ++iter) {
    result.iterations = iter + 1;

    std::vector<int> next_assignment(n);
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = loss_guided_distance(histories[i], centroids[c]);
        if (d < best) {
          best = d;
          best_k = static_cast<int>(c);
        }
      }
      next_assignment[i] = best_k;
      assigned_dist[i] = best;
      ++counts[static_cast<std::size_t>(best_k)];
    }

    if (next_assignment == assignment) {
      result.converged = true;
      break;
    }
    assignment = next_assignment;

    std::vector<bool> taken(n, false);
    reseed_empty(counts, assigned_dist, taken, [&](std::size_t c, std::size_t i) {
      centroids[c] = params[i];
    });

    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // freshly reseeded this round
      Vec3 sum = Vec3::Zero();
      for (std::size_t i = 0; i < n; ++i)
        if (assignment[i] == static_cast<int>(c)) sum += points[i];
      const Vec3 mean = sum / static_cast<double>(counts[c]);
      centroids[c] = {mean[0], mean[1], orientation_sign(mean[2])};
    }
  }

  result.centroids.centroids = std::move(centroids);
  result.assignment.cluster_of = std::move(assignment);
  return result;
}

ClusteringResult kmeans_l2(const std::vector<PreferenceParams>& params, int num_clusters,
                           std::uint64_t seed, int max_iters) {
  check_inputs(params.size(), num_clusters);

  const std::size_t n = params.size();
  const auto k = static_cast<std::size_t>(num_clusters);
  std::mt19937_64 rng = make_engine(seed, 0, /*salt=*/0x5eed);
  const std::vector<Vec3> points = to_points(params);

  // Raw means in parameter space during iteration; the orientation sign rule
  // is applied only to the returned centroids.
  std::vector<Vec3> centroids;
  centroids.reserve(k);
  for (std::size_t i : seed_kmeanspp(points, num_clusters, rng)) centroids.push_back(points[i]);

  ClusteringResult result;
  std::vector<int> assignment(n, -1);
  std::vector<double> assigned_dist(n, 0.0);
  for (int iter = 0; iter < max_iters; ++iter) {
    result.iterations = iter + 1;

    std::vector<int> next_assignment(n);
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (points[i] - centroids[c]).squaredNorm();
        if (d < best) {
          best = d;
          best_k = static_cast<int>(c);
        }
      }
      next_assignment[i] = best_k;
      assigned_dist[i] = best;
      ++counts[static_cast<std::size_t>(best_k)];
    }

    if (next_assignment == assignment) {
      result.converged = true;
      break;
    }
    assignment = next_assignment;

    std::vector<bool> taken(n, false);
    reseed_empty(counts, assigned_dist, taken, [&](std::size_t c, std::size_t i) {
      centroids[c] = points[i];
    });

    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      Vec3 sum = Vec3::Zero();
      for (std::size_t i = 0; i < n; ++i)
        if (assignment[i] == static_cast<int>(c)) sum += points[i];
      centroids[c] = sum / static_cast<double>(counts[c]);
    }
  }

  result.centroids.centroids.reserve(k);
  for (const Vec3& c : centroids)
    result.centroids.centroids.push_back({c[0], c[1], orientation_sign(c[2])});
  result.assignment.cluster_of = std::move(assignment);
  return result;
}

}  // namespace ewc
