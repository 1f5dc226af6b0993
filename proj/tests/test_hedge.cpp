#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ewc/hedge.hpp"
#include "ewc/rng.hpp"

#include <cmath>

using namespace ewc;

TEST_CASE("init_uniform spreads mass evenly") {
  const HedgeState six = init_uniform(6, 0.5);
  REQUIRE(six.probs.size() == 6);
  for (int k = 0; k < 6; ++k) CHECK(six.probs[k] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(six.cumulative_losses.isZero(0.0));

  CHECK(init_uniform(1, 1.0).probs[0] == 1.0);
  const HedgeState two = init_uniform(2, 1.0);
  CHECK(two.probs[0] == 0.5);
  CHECK(two.probs[1] == 0.5);

  CHECK_THROWS_AS(init_uniform(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(init_uniform(3, 0.0), std::invalid_argument);
}

TEST_CASE("default learning rate") {
  CHECK(default_learning_rate(6, 40) ==
        doctest::Approx(std::sqrt(8.0 * std::log(6.0) / 40.0)).epsilon(1e-15));
  CHECK(default_learning_rate(1, 40) == 1.0);
  CHECK_THROWS_AS(default_learning_rate(0, 40), std::invalid_argument);
  CHECK_THROWS_AS(default_learning_rate(2, 0), std::invalid_argument);
}

TEST_CASE("select_expert honors the probability vector") {
  const HedgeState sure = init_uniform(1, 1.0);
  std::mt19937_64 rng = make_engine(3);
  for (int i = 0; i < 50; ++i) CHECK(select_expert(sure, rng) == 0);

  // identical seeds give identical draw sequences
  HedgeState half = init_uniform(2, 1.0);
  std::mt19937_64 a = make_engine(7);
  std::mt19937_64 b = make_engine(7);
  for (int i = 0; i < 100; ++i) CHECK(select_expert(half, a) == select_expert(half, b));

  // [0.9, 0.1]: empirical frequency within +-0.01 over 1e5 draws
  HedgeState skew = init_uniform(2, 1.0);
  skew.probs << 0.9, 0.1;
  std::mt19937_64 c = make_engine(8);
  int first = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    if (select_expert(skew, c) == 0) ++first;
  CHECK(std::abs(static_cast<double>(first) / draws - 0.9) < 0.01);
}

TEST_CASE("argmax selection picks the heaviest expert, lowest index on ties") {
  HedgeState s = init_uniform(3, 1.0);
  s.probs << 0.2, 0.5, 0.3;
  CHECK(select_expert_argmax(s) == 1);
  s.probs << 0.4, 0.4, 0.2;
  CHECK(select_expert_argmax(s) == 0);
}

TEST_CASE("update applies the exponential reweighting exactly") {
  HedgeState s = init_uniform(2, 1.0);
  Eigen::VectorXd losses(2);
  losses << 0.0, 1.0;
  const HedgeState next = update(s, losses);
  // [0.5, 0.5 e^-1] normalized
  const double z = 1.0 + std::exp(-1.0);
  CHECK(next.probs[0] == doctest::Approx(1.0 / z).epsilon(1e-12));
  CHECK(next.probs[1] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-12));
  CHECK(next.probs[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(next.probs[1] == doctest::Approx(0.2689).epsilon(1e-4));
  CHECK(next.cumulative_losses[0] == 0.0);
  CHECK(next.cumulative_losses[1] == 1.0);
}

TEST_CASE("equal losses leave the distribution unchanged") {
  HedgeState s = init_uniform(4, 0.7);
  s.probs << 0.1, 0.2, 0.3, 0.4;
  const HedgeState next = update(s, Eigen::VectorXd::Constant(4, 0.6));
  for (int k = 0; k < 4; ++k) CHECK(next.probs[k] == doctest::Approx(s.probs[k]).epsilon(1e-14));

  const HedgeState uniform = init_uniform(6, 0.5);
  const HedgeState after = update(uniform, Eigen::VectorXd::Zero(6));
  for (int k = 0; k < 6; ++k)
    CHECK(after.probs[k] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("update rejects malformed loss vectors") {
  const HedgeState s = init_uniform(3, 1.0);
  CHECK_THROWS_AS(update(s, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  Eigen::VectorXd negative = Eigen::VectorXd::Zero(3);
  negative[1] = -0.1;
  CHECK_THROWS_AS(update(s, negative), std::invalid_argument);
  Eigen::VectorXd big = Eigen::VectorXd::Zero(3);
  big[2] = 1.5;
  CHECK_THROWS_AS(update(s, big), std::invalid_argument);
}

TEST_CASE("updates preserve the simplex and the closed form") {
  std::mt19937_64 rng = make_engine(21);
  HedgeState s = init_uniform(5, 0.8);
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd losses(5);
    for (int k = 0; k < 5; ++k) losses[k] = uniform_unit(rng);
    s = update(s, losses);

    CHECK(s.probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.probs.minCoeff() >= 0.0);
    // from a uniform start, probs[k] is proportional to exp(-eta * L_k)
    for (int k = 1; k < 5; ++k) {
      const double expected =
          std::exp(-s.eta * (s.cumulative_losses[k] - s.cumulative_losses[0]));
      CHECK(s.probs[k] / s.probs[0] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("expected loss beats the regret bound on random matrices") {
  // exhaustive <p, l> accounting, no sampling noise
  std::mt19937_64 rng = make_engine(22);
  const int K = 6;
  const int T = 40;
  const double bound = 2.0 * std::sqrt(T * std::log(static_cast<double>(K)));
  for (int trial = 0; trial < 20; ++trial) {
    HedgeState s = init_uniform(K, default_learning_rate(K, T));
    Eigen::MatrixXd matrix(T, K);
    double expected = 0.0;
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd losses(K);
      for (int k = 0; k < K; ++k) losses[k] = uniform_unit(rng);
      matrix.row(t) = losses;
      expected += s.probs.dot(losses);
      s = update(s, losses);
    }
    const double best = matrix.colwise().sum().minCoeff();
    CHECK(expected - best <= bound);
  }
}
