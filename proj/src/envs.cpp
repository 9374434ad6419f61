#include "dau/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dau/errors.hpp"

namespace dau {

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  // fmod maps +pi to -pi; the interval is half-open on the left.
  if (w == -std::numbers::pi) w = std::numbers::pi;
  return w;
}

void pendulum_derivative(const PendulumSpec& spec, std::span<const double> s, double torque,
                         std::span<double> ds) {
  const double u = std::clamp(torque, -spec.max_torque, spec.max_torque);
  ds[0] = s[1];
  ds[1] = 3.0 * spec.g / (2.0 * spec.l) * std::sin(s[0]) +
          3.0 / (spec.m * spec.l * spec.l) * u;
}

double pendulum_reward_rate(const PendulumSpec& spec, std::span<const double> s, double torque) {
  const double u = std::clamp(torque, -spec.max_torque, spec.max_torque);
  const double th = wrap_angle(s[0]);
  return -(th * th + 0.1 * s[1] * s[1] + 0.001 * u * u);
}

namespace {

void clamp_pendulum_speed(const PendulumSpec& spec, std::span<double> s) {
  s[1] = std::clamp(s[1], -spec.max_speed, spec.max_speed);
}

}  // namespace

ContinuousDynamics pendulum_dynamics(const PendulumSpec& spec) {
  ContinuousDynamics d;
  d.name = "pendulum";
  d.state_dim = 2;
  d.actions = ActionSpace::continuous({-spec.max_torque}, {spec.max_torque});
  d.drift = [spec](std::span<const double> s, const Action& a, std::span<double> ds) {
    pendulum_derivative(spec, s, a.values()[0], ds);
  };
  d.reward_rate = [spec](std::span<const double> s, const Action& a) {
    return pendulum_reward_rate(spec, s, a.values()[0]);
  };
  d.is_terminal = [](std::span<const double>) { return false; };
  d.project = [spec](std::span<double> s) { clamp_pendulum_speed(spec, s); };
  return d;
}

ContinuousDynamics pendulum_two_torque_dynamics(const PendulumSpec& spec) {
  ContinuousDynamics d;
  d.name = "pendulum2";
  d.state_dim = 2;
  d.actions = ActionSpace::discrete(2);
  auto torque = [spec](const Action& a) {
    return a.index() == 0 ? -spec.max_torque : spec.max_torque;
  };
  d.drift = [spec, torque](std::span<const double> s, const Action& a, std::span<double> ds) {
    pendulum_derivative(spec, s, torque(a), ds);
  };
  d.reward_rate = [spec, torque](std::span<const double> s, const Action& a) {
    return pendulum_reward_rate(spec, s, torque(a));
  };
  d.is_terminal = [](std::span<const double>) { return false; };
  d.project = [spec](std::span<double> s) { clamp_pendulum_speed(spec, s); };
  return d;
}

void cartpole_derivative(const CartpoleSpec& spec, std::span<const double> s, double force,
                         std::span<double> ds) {
  const double total_mass = spec.cart_mass + spec.pole_mass;
  const double polemass_length = spec.pole_mass * spec.half_length;
  const double sin_t = std::sin(s[2]);
  const double cos_t = std::cos(s[2]);
  const double temp = (force + polemass_length * s[3] * s[3] * sin_t) / total_mass;
  const double theta_acc =
      (spec.gravity * sin_t - cos_t * temp) /
      (spec.half_length * (4.0 / 3.0 - spec.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
  ds[0] = s[1];
  ds[1] = x_acc;
  ds[2] = s[3];
  ds[3] = theta_acc;
}

bool cartpole_out_of_bounds(const CartpoleSpec& spec, std::span<const double> s) {
  return std::abs(s[0]) > spec.x_limit || std::abs(s[2]) > spec.theta_limit;
}

ContinuousDynamics cartpole_dynamics(const CartpoleSpec& spec) {
  ContinuousDynamics d;
  d.name = "cartpole";
  d.state_dim = 4;
  d.actions = ActionSpace::discrete(2);
  d.drift = [spec](std::span<const double> s, const Action& a, std::span<double> ds) {
    if (a.index() > 1) throw InvalidArgument("cartpole action must be 0 or 1");
    cartpole_derivative(spec, s, a.index() == 1 ? spec.force : -spec.force, ds);
  };
  d.reward_rate = [spec](std::span<const double> s, const Action&) {
    return cartpole_out_of_bounds(spec, s) ? 0.0 : 1.0;
  };
  d.is_terminal = [spec](std::span<const double> s) { return cartpole_out_of_bounds(spec, s); };
  return d;
}

ContinuousDynamics lqr_dynamics(double action_bound) {
  ContinuousDynamics d;
  d.name = "lqr";
  d.state_dim = 1;
  d.actions = ActionSpace::continuous({-action_bound}, {action_bound});
  d.drift = [](std::span<const double>, const Action& a, std::span<double> ds) {
    ds[0] = a.values()[0];
  };
  d.reward_rate = [](std::span<const double> s, const Action&) { return -s[0] * s[0]; };
  d.is_terminal = [](std::span<const double>) { return false; };
  return d;
}

namespace {

void check_lqr_args(double k, double gamma) {
  if (!(k > 0.0)) throw InvalidArgument("lqr gain k must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
}

}  // namespace

double lqr_value_oracle(double s, double k, double gamma) {
  check_lqr_args(k, gamma);
  return -s * s / (2.0 * k - std::log(gamma));
}

double lqr_advantage_oracle(double s, double a, double k, double gamma) {
  check_lqr_args(k, gamma);
  const double v = lqr_value_oracle(s, k, gamma);
  const double dv_ds = -2.0 * s / (2.0 * k - std::log(gamma));
  return -s * s + std::log(gamma) * v + dv_ds * a;
}

ContinuousDynamics sine_dynamics() {
  ContinuousDynamics d;
  d.name = "sine";
  d.state_dim = 2;
  d.actions = ActionSpace::discrete(1);
  d.drift = [](std::span<const double> s, const Action&, std::span<double> ds) {
    ds[0] = s[1];
    ds[1] = -s[0];
  };
  d.reward_rate = [](std::span<const double>, const Action&) { return 0.0; };
  d.is_terminal = [](std::span<const double>) { return false; };
  return d;
}

Environment make_environment(std::string_view name) {
  Environment env;
  if (name == "pendulum") {
    env.dynamics = pendulum_dynamics();
    env.sample_initial = [](Rng& rng) {
      // theta in (-pi, pi], theta_dot in [-1, 1]
      std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
      std::uniform_real_distribution<double> speed(-1.0, 1.0);
      double th = angle(rng);
      if (th == -std::numbers::pi) th = std::numbers::pi;
      return State{th, speed(rng)};
    };
    env.episode_seconds = 10.0;
  } else if (name == "cartpole") {
    env.dynamics = cartpole_dynamics();
    env.sample_initial = [](Rng& rng) {
      std::uniform_real_distribution<double> u(-0.05, 0.05);
      State s(4);
      for (double& x : s) x = u(rng);
      return s;
    };
    env.episode_seconds = 20.0;
  } else if (name == "lqr") {
    env.dynamics = lqr_dynamics();
    env.sample_initial = [](Rng& rng) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      return State{u(rng)};
    };
    env.episode_seconds = 10.0;
  } else if (name == "sine") {
    env.dynamics = sine_dynamics();
    env.sample_initial = [](Rng&) { return State{0.0, 1.0}; };
    env.episode_seconds = 2.0 * std::numbers::pi;
  } else {
    throw InvalidArgument("unknown environment '" + std::string(name) + "'");
  }
  return env;
}

std::vector<std::string> environment_names() { return {"pendulum", "cartpole", "lqr", "sine"}; }

}  // namespace dau
