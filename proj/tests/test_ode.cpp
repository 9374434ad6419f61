#include <doctest.h>

#include <cmath>

#include "dau/errors.hpp"
#include "dau/ode_core.hpp"

using namespace dau;

namespace {

ContinuousDynamics decay_dynamics() {
  ContinuousDynamics d;
  d.name = "decay";
  d.state_dim = 1;
  d.actions = ActionSpace::continuous({-1.0}, {1.0});
  d.drift = [](std::span<const double> s, const Action& a, std::span<double> ds) {
    ds[0] = -s[0] + a.values()[0];
  };
  d.reward_rate = [](std::span<const double> s, const Action&) { return -s[0] * s[0]; };
  d.is_terminal = [](std::span<const double> s) { return s[0] > 10.0; };
  return d;
}

}  // namespace

TEST_SUITE("ode") {
  TEST_CASE("effective discount and horizon") {
    CHECK(effective_discount(0.8, 0.01) == doctest::Approx(0.997771).epsilon(1e-6));
    CHECK(effective_discount(0.8, 0.0) == 1.0);
    CHECK_THROWS_AS(effective_discount(1.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(effective_discount(0.0, 0.1), InvalidArgument);
    CHECK(physical_time_horizon(0.8, 1e-5) == doctest::Approx(4.4814).epsilon(1e-4));
  }

  TEST_CASE("held-action integration of linear decay") {
    const auto d = decay_dynamics();
    const State s{1.0};
    const Action zero = Action::continuous({0.0});
    CHECK(integrate_held_action(d, s, zero, 0.1, 8)[0] == doctest::Approx(std::exp(-0.1)).epsilon(1e-10));
    CHECK(std::exp(-0.1) == doctest::Approx(0.904837).epsilon(1e-6));
    CHECK(integrate_held_action(d, s, zero, 0.1, 1, Integrator::euler)[0] == doctest::Approx(0.9));
    // Held input: fixed point moves to a = 0.5.
    CHECK(integrate_held_action(d, State{0.5}, Action::continuous({0.5}), 0.3, 4)[0] == 0.5);
  }

  TEST_CASE("half steps compose bitwise") {
    const auto d = decay_dynamics();
    const Action a = Action::continuous({0.3});
    const State once = integrate_held_action(d, State{0.7}, a, 0.02, 8);
    const State half = integrate_held_action(d, State{0.7}, a, 0.01, 4);
    const State twice = integrate_held_action(d, half, a, 0.01, 4);
    CHECK(once[0] == twice[0]);
  }

  TEST_CASE("blow-up reports the inner step") {
    ContinuousDynamics d = decay_dynamics();
    d.drift = [](std::span<const double> s, const Action&, std::span<double> ds) { ds[0] = s[0] * s[0] * s[0]; };
    try {
      integrate_held_action(d, State{10.0}, Action::continuous({0.0}), 10.0, 50);
      FAIL("expected a blow-up");
    } catch (const IntegrationBlowup& e) {
      CHECK(e.step() < 50);
    }
  }

  TEST_CASE("mdp step scales reward and guards terminal states") {
    const NearContinuousMdp mdp(decay_dynamics(), 0.05, 0.8);
    const StepResult r = mdp.step(State{2.0}, Action::continuous({0.0}));
    CHECK(r.reward_rate == -4.0);
    CHECK(r.reward == doctest::Approx(-0.2));
    CHECK_FALSE(r.done);
    CHECK(mdp.step_discount() == doctest::Approx(std::pow(0.8, 0.05)));
    CHECK_THROWS_AS(mdp.step(State{11.0}, Action::continuous({0.0})), ContractViolation);
  }

  TEST_CASE("discretized return truncates at termination") {
    Trajectory t;
    t.dt = 0.5;
    t.states.push_back({0.0});
    t.push(Action::discrete(0), 1.0, {0.0});
    t.push(Action::discrete(0), 2.0, {0.0});
    t.push(Action::discrete(0), 4.0, {0.0});
    const double g = std::pow(0.8, 0.5);
    CHECK(discretized_return(t, 0.8) == doctest::Approx(0.5 * (1.0 + 2.0 * g + 4.0 * g * g)));
    t.done_index = 1;
    CHECK(discretized_return(t, 0.8) == doctest::Approx(0.5 * (1.0 + 2.0 * g)));
  }
}
