#pragma once

// Prediction with expert advice: a probability vector over K experts,
// sampled expert selection, and the multiplicative-weights update
//   p'(k) = p(k) exp(-eta * l(k)) / sum_k' p(k') exp(-eta * l(k')).

#include "ewc/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <stdexcept>

namespace ewc {

struct HedgeState {
  Eigen::VectorXd probs;
  double eta = 0.0;
  Eigen::VectorXd cumulative_losses;

  Eigen::Index num_experts() const { return probs.size(); }
};

// sqrt(8 ln K / T); the single-expert case has nothing to tune, any
// positive rate is equivalent, so 1.0 is returned.
inline double default_learning_rate(Eigen::Index num_experts, Eigen::Index horizon) {
  if (num_experts < 1 || horizon < 1)
    throw std::invalid_argument("learning rate needs num_experts >= 1 and horizon >= 1");
  if (num_experts == 1) return 1.0;
  return std::sqrt(8.0 * std::log(static_cast<double>(num_experts)) /
                   static_cast<double>(horizon));
}

inline HedgeState init_uniform(Eigen::Index num_experts, double eta) {
  if (num_experts < 1) throw std::invalid_argument("hedge needs at least one expert");
  if (!(eta > 0.0)) throw std::invalid_argument("hedge learning rate must be positive");
  HedgeState state;
  state.probs = Eigen::VectorXd::Constant(num_experts, 1.0 / static_cast<double>(num_experts));
  state.eta = eta;
  state.cumulative_losses = Eigen::VectorXd::Zero(num_experts);
  return state;
}

// Expert index drawn from the current probability vector.
inline Eigen::Index select_expert(const HedgeState& state, std::mt19937_64& rng) {
  return categorical(rng, state.probs);
}

// Highest-probability expert, lowest index on ties. Ablation-only
// alternative to sampling.
inline Eigen::Index select_expert_argmax(const HedgeState& state) {
  Eigen::Index best = 0;
  state.probs.maxCoeff(&best);
  return best;
}

inline HedgeState update(const HedgeState& state, const Eigen::VectorXd& losses) {
  if (losses.size() != state.probs.size())
    throw std::invalid_argument("loss vector length must match the number of experts");
  if (!((losses.array() >= 0.0).all() && (losses.array() <= 1.0).all()))
    throw std::invalid_argument("hedge losses must lie in [0, 1]");
  HedgeState next;
  next.eta = state.eta;
  next.cumulative_losses = state.cumulative_losses + losses;
  const Eigen::ArrayXd reweighted =
      state.probs.array() * (-state.eta * losses.array()).exp();
  next.probs = (reweighted / reweighted.sum()).matrix();
  return next;
}

}  // namespace ewc
