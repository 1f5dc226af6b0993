#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ewc/offline.hpp"
#include "ewc/rng.hpp"

#include <cmath>

using namespace ewc;

namespace {

// Noise-free history from theta with every context at least `margin` away
// from the decision boundary.
UserHistory history_from(const PreferenceParams& theta, int rounds, double margin,
                         std::mt19937_64& rng) {
  UserHistory h;
  while (static_cast<int>(h.rounds()) < rounds) {
    TravelContext ctx{uniform_range(rng, 1.0, 1.5), uniform_range(rng, 0.5, 1.0)};
    if (std::abs(ctx.tau - theta.slope * ctx.e - theta.bias) < margin) continue;
    h.contexts.push_back(ctx);
    h.choices.push_back(predict_choice(theta, ctx));
  }
  return h;
}

std::size_t mistakes(const PreferenceParams& params, const UserHistory& h) {
  std::size_t n = 0;
  for (std::size_t t = 0; t < h.rounds(); ++t)
    if (predict_choice(params, h.contexts[t]) != h.choices[t]) ++n;
  return n;
}

}  // namespace

TEST_CASE("canonicalize maps raw separators onto (b, s, o)") {
  const PreferenceParams a = canonicalize(1.0, -1.0, 0.0);
  CHECK(a.bias == 0.0);
  CHECK(a.slope == 1.0);
  CHECK(a.orientation == 1.0);

  // scaling by -2 flips orientation only
  const PreferenceParams b = canonicalize(-2.0, 2.0, 0.0);
  CHECK(b.bias == 0.0);
  CHECK(b.slope == 1.0);
  CHECK(b.orientation == -1.0);

  // threshold on tau alone
  const PreferenceParams c = canonicalize(1.0, 0.0, -1.1);
  CHECK(c.bias == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(c.slope == 0.0);
  CHECK(c.orientation == 1.0);

  CHECK_THROWS_AS(canonicalize(0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("canonicalize handles a zero tau coefficient by perturbation") {
  // w1=0, w2=-1, w0=0.8: raw rule picks eco when e < 0.8
  const PreferenceParams p = canonicalize(0.0, -1.0, 0.8);
  CHECK(p.valid());
  CHECK(predict_choice(p, {1.2, 0.5}) == Route::eco);
  CHECK(predict_choice(p, {1.2, 1.0}) == Route::standard);

  // w1=0, w2=+1, w0=-0.8: eco when e > 0.8
  const PreferenceParams q = canonicalize(0.0, 1.0, -0.8);
  CHECK(predict_choice(q, {1.2, 1.0}) == Route::eco);
  CHECK(predict_choice(q, {1.2, 0.5}) == Route::standard);
}

TEST_CASE("canonicalized prediction matches the raw sign rule") {
  std::mt19937_64 rng = make_engine(31);
  int checked = 0;
  while (checked < 10000) {
    const double w1 = uniform_range(rng, -2.0, 2.0);
    const double w2 = uniform_range(rng, -2.0, 2.0);
    const double w0 = uniform_range(rng, -2.0, 2.0);
    if (w1 == 0.0) continue;
    const TravelContext ctx{uniform_range(rng, 0.5, 2.0), uniform_range(rng, 0.1, 1.5)};
    const double raw = w1 * ctx.tau + w2 * ctx.e + w0;
    if (std::abs(raw) < 1e-9) continue;  // skip numerically boundary-exact draws
    const Route expected = raw > 0.0 ? Route::eco : Route::standard;
    CHECK(predict_choice(canonicalize(w1, w2, w0), ctx) == expected);
    ++checked;
  }
}

TEST_CASE("separable histories are refit to full training accuracy") {
  std::mt19937_64 rng = make_engine(32);
  const PreferenceParams theta{0.85, 0.5, 1.0};  // boundary crosses the context box
  const UserHistory h = history_from(theta, 40, 1e-6, rng);
  const FitResult fit = fit_user_separator(h, {});
  CHECK_FALSE(fit.degenerate);
  CHECK(mistakes(fit.params, h) == 0);
}

TEST_CASE("one-class histories get the far-off fallback boundary") {
  UserHistory all_standard;
  std::mt19937_64 rng = make_engine(33);
  for (int t = 0; t < 12; ++t) {
    all_standard.contexts.push_back({uniform_range(rng, 1.0, 1.5), uniform_range(rng, 0.5, 1.0)});
    all_standard.choices.push_back(Route::standard);
  }
  const FitResult fit = fit_user_separator(all_standard, {});
  CHECK(fit.degenerate);
  CHECK(fit.params.orientation == 1.0);
  CHECK(fit.params.slope == 0.0);
  CHECK(fit.params.bias == 1e6);
  CHECK(mistakes(fit.params, all_standard) == 0);
  // far outside the box, so any sane context is classified the same way
  CHECK(predict_choice(fit.params, {1.25, 0.75}) == Route::standard);
}

TEST_CASE("a single eco round is reproduced") {
  UserHistory h;
  h.contexts = {{1.1, 0.8}};
  h.choices = {Route::eco};
  const FitResult fit = fit_user_separator(h, {});
  CHECK(fit.degenerate);  // one observed class
  CHECK(predict_choice(fit.params, {1.1, 0.8}) == Route::eco);
}

TEST_CASE("fit_all_users preserves order and flags degeneracy per user") {
  std::mt19937_64 rng = make_engine(34);
  std::vector<UserHistory> users;
  users.push_back(history_from({0.85, 0.5, 1.0}, 20, 1e-6, rng));  // mixed
  UserHistory eco_only;
  eco_only.contexts = {{1.2, 0.9}, {1.3, 0.6}};
  eco_only.choices = {Route::eco, Route::eco};
  users.push_back(eco_only);
  users.push_back(history_from({1.2, 0.1, -1.0}, 20, 1e-6, rng));

  const auto fits = fit_all_users(users, {});
  REQUIRE(fits.size() == 3);
  CHECK_FALSE(fits[0].degenerate);
  CHECK(fits[1].degenerate);
  for (std::size_t i = 0; i < users.size(); ++i) CHECK(mistakes(fits[i].params, users[i]) == 0);

  CHECK_THROWS_AS(fit_all_users({}, {}), std::invalid_argument);
  CHECK(fitted_params(fits).size() == 3);
  CHECK(fitted_params(fits)[1].bias == fits[1].params.bias);
}

TEST_CASE("round-trip over random preference draws") {
  std::mt19937_64 rng = make_engine(35);
  for (int trial = 0; trial < 100; ++trial) {
    const PreferenceParams theta{uniform_range(rng, 0.8, 1.6), uniform_range(rng, -0.5, 1.5),
                                 uniform_unit(rng) < 0.5 ? -1.0 : 1.0};
    const UserHistory h = history_from(theta, 40, 0.05, rng);
    const FitResult fit = fit_user_separator(h, {});
    CHECK(mistakes(fit.params, h) == 0);
  }
}

TEST_CASE("fitting is deterministic for a fixed seed") {
  std::mt19937_64 rng = make_engine(36);
  const UserHistory h = history_from({0.9, 0.4, -1.0}, 40, 1e-6, rng);
  SeparatorFitConfig cfg;
  cfg.seed = 17;
  const FitResult a = fit_user_separator(h, cfg);
  const FitResult b = fit_user_separator(h, cfg);
  CHECK(a.params.bias == b.params.bias);
  CHECK(a.params.slope == b.params.slope);
  CHECK(a.params.orientation == b.params.orientation);
}
