#pragma once

// K-Means over fitted preference parameters. The loss-guided variant
// replaces the L2 distance with the prediction loss a candidate centroid
// incurs on a user's history; the plain L2 variant is kept for ablation.
// Both use k-means++ seeding in parameter space, lowest-index tie-breaks,
// and reseed empty clusters at the worst-fit user.

#include "ewc/core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ewc {

// K cluster centroids, each usable directly as an expert's decision rule.
struct CentroidSet {
  std::vector<PreferenceParams> centroids;

  std::size_t size() const { return centroids.size(); }
};

// One cluster index per user (the compact form of the one-hot assignment).
struct AssignmentMatrix {
  std::vector<int> cluster_of;
};

struct ClusteringResult {
  CentroidSet centroids;
  AssignmentMatrix assignment;
  int iterations = 0;
  bool converged = false;  // assignments stabilized before the iteration cap
};

// Count of rounds where the centroid's prediction differs from the user's
// choice (the squared-error sum over 0/1 losses, no normalization).
double loss_guided_distance(const UserHistory& history, const PreferenceParams& centroid);

inline Eigen::VectorXd expert_loss_vector(const CentroidSet& centroids,
                                          const TravelContext& ctx, Route actual) {
  return expert_loss_vector(centroids.centroids, ctx, actual);
}

ClusteringResult kmeans_loss_guided(const std::vector<PreferenceParams>& params,
                                    const std::vector<UserHistory>& histories,
                                    int num_clusters, std::uint64_t seed,
                                    int max_iters = 100);

ClusteringResult kmeans_l2(const std::vector<PreferenceParams>& params, int num_clusters,
                           std::uint64_t seed, int max_iters = 100);

}  // namespace ewc
