#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "dau/envs.hpp"
#include "dau/errors.hpp"
#include "dau/theory.hpp"

using namespace dau;
using namespace dau::theory;

namespace {

ContinuousDynamics decay_dynamics() {
  ContinuousDynamics d;
  d.name = "decay";
  d.state_dim = 1;
  d.actions = ActionSpace::discrete(1);
  d.drift = [](std::span<const double> s, const Action&, std::span<double> ds) { ds[0] = -s[0]; };
  d.reward_rate = [](std::span<const double>, const Action&) { return 0.0; };
  d.is_terminal = [](std::span<const double>) { return false; };
  return d;
}

}  // namespace

TEST_SUITE("theory") {
  TEST_CASE("fit_rate recovers exact power laws") {
    const std::vector<double> dt{0.1, 0.05, 0.02, 0.01};
    std::vector<double> err;
    for (double h : dt) err.push_back(3.0 * h * h);
    const RateFit fit = fit_rate(dt, err, 2.0);
    REQUIRE(fit.slope);
    CHECK(*fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(*fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(fit.slope_within_window());
    CHECK_FALSE(fit_rate(dt, err, 1.0).slope_within_window());

    CHECK_FALSE(fit_rate(dt, {1.0, 0.0, 1.0, 1.0}, 1.0).slope);
    CHECK_THROWS_AS(fit_rate({0.01, 0.1}, {1.0, 2.0}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(fit_rate({0.1, 0.01}, {1.0}, 1.0), InvalidArgument);
  }

  TEST_CASE("Euler error on exponential decay") {
    const std::vector<double> grid{0.1, 0.05, 0.025};
    const RateFit fit = trajectory_convergence(decay_dynamics(), [](std::span<const double>) {
      return Action::discrete(0);
    }, {1.0}, 1.0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      // Sup over observation instants of |e^{-t} - (1 - h)^{t/h}|.
      double sup = 0.0;
      const auto n = static_cast<int>(std::lround(1.0 / grid[i]));
      for (int k = 0; k <= n; ++k) sup = std::max(sup, std::abs(std::exp(-k * grid[i]) - std::pow(1.0 - grid[i], k)));
      CHECK(fit.error[i] == doctest::Approx(sup).epsilon(1e-6));
    }
    REQUIRE(fit.slope);
    CHECK(*fit.slope == doctest::Approx(1.0).epsilon(0.1));
  }

  TEST_CASE("LQR rollout values approach the closed form") {
    const double gamma = std::exp(-1.0);
    for (double s : {0.5, 1.0, -2.0}) {
      const LqrValues v = lqr_rollout_values(1.0, s, -s, gamma, 1e-3);
      const double exact = -s * s / 3.0;
      CHECK(v.v == doctest::Approx(exact).epsilon(5e-3));
      CHECK(v.q == doctest::Approx(v.v).epsilon(1e-12));
      // a = -k' s with k' = 2: A = (2/3) (k' - 1) s^2 per unit time.
      const LqrValues w = lqr_rollout_values(1.0, s, -2.0 * s, gamma, 1e-3);
      CHECK((w.q - w.v) / 1e-3 == doctest::Approx(2.0 / 3.0 * s * s).epsilon(2e-2));
    }
  }

  TEST_CASE("policy improvement on LQR gains") {
    const std::vector<double> states{-2.0, -0.5, 0.0, 0.7, 1.5};
    CHECK(policy_improvement(0.5, 1.0, std::exp(-1.0), states).holds);
    CHECK(policy_improvement(2.0, 1.0, std::exp(-1.0), states).holds);
    CHECK(policy_improvement(1.0, 1.0, std::exp(-1.0), states).holds);
  }

  TEST_CASE("sine learning by hand and the trichotomy regimes") {
    const SineLearning two = sine_value_learning(2.0, 1e-3, 1.0);
    CHECK(two.max_abs_change < 1e-2);
    const SineLearning one = sine_value_learning(1.0, 0.5, 1.0);
    // Two steps computed directly.
    double theta = 1.0;
    const double g = std::pow(0.8, 0.5);
    for (int k = 0; k < 2; ++k) {
      const double s = std::sin(0.5 * k), s1 = std::sin(0.5 * (k + 1));
      theta += 0.5 * (g * theta * s1 - theta * s) / 0.5 * s;
    }
    REQUIRE(one.theta.size() == 3);
    CHECK(one.theta[2] == doctest::Approx(theta).epsilon(1e-14));
    const SineLearning half = sine_value_learning(0.5, 1e-5, 1.0);
    CHECK(half.max_abs_theta > 1e3);
    CHECK_THROWS_AS(sine_value_learning(-1.0, 0.1, 1.0), InvalidArgument);
  }

  TEST_CASE("epsilon-greedy averaging shrinks with dt") {
    const auto pts = eps_greedy_averaging(1.0, {0.01, 0.0025}, 0.5, 16, {1.0, 0.0}, 3);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].cross_seed_std < pts[0].cross_seed_std);
  }

  TEST_CASE("reports serialize with the documented fields") {
    const Report r = run_check("policy_improvement");
    CHECK(r.passed);
    const auto j = nlohmann::json::parse(r.to_json());
    for (const char* key : {"name", "grid", "errors", "slope", "values", "verdict", "detail"})
      CHECK(j.contains(key));
    CHECK(j["verdict"] == "pass");
    CHECK(check_names().size() == 7);
    CHECK_THROWS_AS(run_check("no_such_check"), InvalidArgument);
  }
}
