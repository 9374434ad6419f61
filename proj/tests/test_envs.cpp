#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dau/envs.hpp"
#include "dau/errors.hpp"

using namespace dau;
using std::numbers::pi;

TEST_SUITE("envs") {
  TEST_CASE("angle wrapping") {
    CHECK(wrap_angle(1.5 * pi) == doctest::Approx(-0.5 * pi));
    CHECK(wrap_angle(pi) == doctest::Approx(pi));
    CHECK(wrap_angle(-pi) == doctest::Approx(pi));
    CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
  }

  TEST_CASE("pendulum conserves energy without torque") {
    const PendulumSpec spec;
    const auto dyn = pendulum_dynamics(spec);
    const double c = 3.0 * spec.g / (2.0 * spec.l);
    auto energy = [&](const State& s) { return 0.5 * s[1] * s[1] + c * std::cos(s[0]); };
    State s{2.0, 0.0};
    const double e0 = energy(s);
    for (int k = 0; k < 200; ++k) s = integrate_held_action(dyn, s, Action::continuous({0.0}), 0.01, 8);
    CHECK(std::abs(energy(s) - e0) < 1e-6);
  }

  TEST_CASE("pendulum reward and speed clamp") {
    const PendulumSpec spec;
    const double up[2] = {0.0, 0.0};
    CHECK(pendulum_reward_rate(spec, up, 0.0) == 0.0);
    const double down[2] = {pi, 1.0};
    CHECK(pendulum_reward_rate(spec, down, 2.0) == doctest::Approx(-(pi * pi + 0.1 + 0.004)));
    const NearContinuousMdp mdp(pendulum_dynamics(spec), 0.05, 0.8);
    const auto r = mdp.step(State{0.0, 7.99}, Action::continuous({2.0}));
    CHECK(r.next[1] <= spec.max_speed);
  }

  TEST_CASE("two-torque pendulum actions") {
    const auto d = pendulum_two_torque_dynamics();
    REQUIRE(d.actions.is_discrete());
    CHECK(d.actions.count() == 2);
    double lo[2], hi[2];
    const double s[2] = {pi, 0.0};
    d.drift(s, Action::discrete(0), lo);
    d.drift(s, Action::discrete(1), hi);
    CHECK(lo[1] == doctest::Approx(-6.0).epsilon(1e-9));
    CHECK(hi[1] == doctest::Approx(6.0).epsilon(1e-9));
  }

  TEST_CASE("cartpole bounds and reward") {
    const CartpoleSpec spec;
    const auto d = cartpole_dynamics(spec);
    const State in{0.0, 0.0, 0.01, 0.0};
    CHECK(d.reward_rate(in, Action::discrete(1)) == 1.0);
    CHECK_FALSE(d.is_terminal(in));
    CHECK(d.is_terminal(State{2.5, 0.0, 0.0, 0.0}));
    CHECK(d.is_terminal(State{0.0, 0.0, 0.3, 0.0}));
    double ds[4];
    d.drift(in, Action::discrete(1), ds);
    CHECK(ds[0] == 0.0);
    CHECK(ds[1] > 0.0);
  }

  TEST_CASE("lqr closed forms") {
    const double g = std::exp(-1.0);
    CHECK(lqr_value_oracle(1.0, 1.0, g) == doctest::Approx(-1.0 / 3.0));
    CHECK(lqr_advantage_oracle(1.0, 0.0, 1.0, g) == doctest::Approx(-2.0 / 3.0));
    for (double kp : {0.5, 2.0, 3.0})
      CHECK(lqr_advantage_oracle(1.5, -kp * 1.5, 1.0, g) == doctest::Approx(2.0 / 3.0 * (kp - 1.0) * 2.25));
    CHECK(lqr_advantage_oracle(0.7, -0.7, 1.0, g) == doctest::Approx(0.0));
    CHECK_THROWS_AS(lqr_value_oracle(1.0, 0.0, g), InvalidArgument);
    CHECK_THROWS_AS(lqr_value_oracle(1.0, 1.0, 1.5), InvalidArgument);
  }

  TEST_CASE("sine oscillator tracks sin(t)") {
    const auto d = sine_dynamics();
    Rng rng(1);
    State s = make_environment("sine").sample_initial(rng);
    CHECK(s[0] == 0.0);
    for (int k = 0; k < 100; ++k) s = integrate_held_action(d, s, Action::discrete(0), 0.01, 8);
    CHECK(s[0] == doctest::Approx(std::sin(1.0)).epsilon(1e-9));
  }

  TEST_CASE("registry") {
    for (const auto& name : environment_names()) {
      const Environment env = make_environment(name);
      Rng rng(3);
      CHECK(env.sample_initial(rng).size() == env.dynamics.state_dim);
      CHECK(env.episode_seconds > 0.0);
    }
    CHECK(environment_names().size() == 4);
    CHECK_THROWS_AS(make_environment("nosuch"), InvalidArgument);
    Rng rng(5);
    const State p = make_environment("pendulum").sample_initial(rng);
    CHECK(std::abs(p[1]) <= 1.0);
  }
}
