#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ewc/core.hpp"
#include "ewc/rng.hpp"

using namespace ewc;

TEST_CASE("predict_choice follows the margin sign") {
  // +1*(1.2 - 0.9 - 0) = 0.3 > 0 -> eco
  CHECK(predict_choice({0.0, 1.0, 1.0}, {1.2, 0.9}) == Route::eco);
  // orientation flip makes the same margin negative
  CHECK(predict_choice({0.0, 1.0, -1.0}, {1.2, 0.9}) == Route::standard);
  // margin exactly zero fails the strict inequality
  CHECK(predict_choice({0.0, 1.0, 1.0}, {1.0, 1.0}) == Route::standard);
}

TEST_CASE("prediction depends only on the sign of the margin") {
  std::mt19937_64 rng = make_engine(11);
  for (int i = 0; i < 1000; ++i) {
    PreferenceParams p{uniform_range(rng, -1.0, 2.0), uniform_range(rng, -1.0, 2.0),
                       uniform_unit(rng) < 0.5 ? -1.0 : 1.0};
    TravelContext ctx{uniform_range(rng, 0.5, 2.0), uniform_range(rng, 0.1, 1.5)};
    const double m = decision_margin(p, ctx);
    CHECK(predict_choice(p, ctx) == (m > 0.0 ? Route::eco : Route::standard));
    // any positive rescaling of the margin leaves the classification alone
    for (double lambda : {0.5, 3.0, 100.0})
      CHECK((lambda * m > 0.0) == (m > 0.0));
  }
}

TEST_CASE("choice_loss is the 0/1 mismatch indicator") {
  CHECK(choice_loss(Route::eco, Route::eco) == 0.0);
  CHECK(choice_loss(Route::standard, Route::eco) == 1.0);
  CHECK(choice_loss(Route::eco, Route::standard) == 1.0);

  for (Route a : {Route::standard, Route::eco})
    for (Route b : {Route::standard, Route::eco}) {
      CHECK(choice_loss(a, b) == choice_loss(b, a));
      CHECK((choice_loss(a, b) == 0.0 || choice_loss(a, b) == 1.0));
    }
}

TEST_CASE("expert_loss_vector evaluates every centroid") {
  const TravelContext ctx{1.2, 0.9};

  // single centroid predicting eco, actual eco
  Eigen::VectorXd one = expert_loss_vector({{0.0, 1.0, 1.0}}, ctx, Route::eco);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 0.0);

  // opposite orientations on a non-boundary context: exactly one mistake
  Eigen::VectorXd pair =
      expert_loss_vector({{0.0, 1.0, 1.0}, {0.0, 1.0, -1.0}}, ctx, Route::eco);
  CHECK(pair[0] == 0.0);
  CHECK(pair[1] == 1.0);
  CHECK(pair.sum() == 1.0);

  // six centroids all predicting the actual choice
  std::vector<PreferenceParams> all_standard(6, PreferenceParams{10.0, 0.0, 1.0});
  Eigen::VectorXd zeros = expert_loss_vector(all_standard, ctx, Route::standard);
  REQUIRE(zeros.size() == 6);
  CHECK(zeros.maxCoeff() == 0.0);
}

TEST_CASE("expert_loss_vector entries are zero exactly on agreement") {
  std::mt19937_64 rng = make_engine(12);
  for (int i = 0; i < 200; ++i) {
    std::vector<PreferenceParams> centroids;
    for (int k = 0; k < 5; ++k)
      centroids.push_back({uniform_range(rng, -1.0, 2.0), uniform_range(rng, -1.0, 2.0),
                           uniform_unit(rng) < 0.5 ? -1.0 : 1.0});
    const TravelContext ctx{uniform_range(rng, 1.0, 1.5), uniform_range(rng, 0.5, 1.0)};
    const Route actual = uniform_unit(rng) < 0.5 ? Route::standard : Route::eco;
    const Eigen::VectorXd losses = expert_loss_vector(centroids, ctx, actual);
    for (int k = 0; k < 5; ++k)
      CHECK((losses[k] == 0.0) == (predict_choice(centroids[static_cast<std::size_t>(k)], ctx) ==
                                   actual));
  }
}

TEST_CASE("route conversions reject values outside {1, 2}") {
  CHECK(route_to_int(Route::standard) == 1);
  CHECK(route_to_int(Route::eco) == 2);
  CHECK(route_from_int(1) == Route::standard);
  CHECK(route_from_int(2) == Route::eco);
  CHECK_THROWS_AS(route_from_int(0), std::invalid_argument);
  CHECK_THROWS_AS(route_from_int(3), std::invalid_argument);
}

TEST_CASE("UserHistory validation") {
  UserHistory ok;
  ok.contexts = {{1.2, 0.9}};
  ok.choices = {Route::eco};
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.rounds() == 1);

  UserHistory empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

  UserHistory mismatched;
  mismatched.contexts = {{1.2, 0.9}, {1.1, 0.8}};
  mismatched.choices = {Route::eco};
  CHECK_THROWS_AS(mismatched.validate(), std::invalid_argument);
}

TEST_CASE("PreferenceParams round-trips through vectors") {
  const PreferenceParams p{0.25, -0.75, -1.0};
  CHECK(PreferenceParams::from_vec(p.vec()).bias == 0.25);
  CHECK(PreferenceParams::from_vec(p.vec()).slope == -0.75);
  CHECK(PreferenceParams::from_vec(p.vec()).orientation == -1.0);
  // from_vec maps any third coordinate onto a valid orientation
  CHECK(PreferenceParams::from_vec({0.0, 0.0, 0.3}).orientation == 1.0);
  CHECK(PreferenceParams::from_vec({0.0, 0.0, -0.3}).orientation == -1.0);
  CHECK(PreferenceParams::from_vec({0.0, 0.0, 0.0}).orientation == 1.0);
  CHECK(p.valid());
  CHECK_FALSE(PreferenceParams{0.0, 0.0, 0.5}.valid());
}
