#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "dau/ode_core.hpp"
#include "dau/rng.hpp"

namespace dau {

struct PendulumSpec {
  double g = 10.0;
  double m = 1.0;
  double l = 1.0;
  double max_torque = 2.0;
  double max_speed = 8.0;
};

struct CartpoleSpec {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double force = 10.0;
  double gravity = 9.8;
  double x_limit = 2.4;
  double theta_limit = 12.0 * 3.14159265358979323846 / 180.0;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

// Pendulum swing-up, state (theta, theta_dot), theta = 0 upright.
void pendulum_derivative(const PendulumSpec& spec, std::span<const double> s, double torque,
                         std::span<double> ds);
double pendulum_reward_rate(const PendulumSpec& spec, std::span<const double> s, double torque);
ContinuousDynamics pendulum_dynamics(const PendulumSpec& spec = {});
/// Pendulum restricted to the two torques {-max_torque, +max_torque}.
ContinuousDynamics pendulum_two_torque_dynamics(const PendulumSpec& spec = {});

// Cart-pole, state (x, x_dot, theta, theta_dot); action 0 pushes left, 1 right.
void cartpole_derivative(const CartpoleSpec& spec, std::span<const double> s, double force,
                         std::span<double> ds);
bool cartpole_out_of_bounds(const CartpoleSpec& spec, std::span<const double> s);
ContinuousDynamics cartpole_dynamics(const CartpoleSpec& spec = {});

/// ds/dt = a, r(s, a) = -s^2.
ContinuousDynamics lqr_dynamics(double action_bound = 5.0);
/// Value of the linear policy a = -k s: -s^2 / (2k - ln gamma).
double lqr_value_oracle(double s, double k, double gamma);
/// -s^2 + ln(gamma) V(s) + V'(s) a for the policy a = -k s.
double lqr_advantage_oracle(double s, double a, double k, double gamma);

/// Autonomous oscillator whose first coordinate follows sin(t) from (0, 1).
ContinuousDynamics sine_dynamics();

/// A dynamics plus the episode protocol used by the harness.
struct Environment {
  ContinuousDynamics dynamics;
  std::function<State(Rng&)> sample_initial;
  /// Episode cap in physical seconds.
  double episode_seconds = 10.0;
  /// Mean-std input normalization for the networks.
  bool normalize_inputs = false;
};

/// Registry lookup: "pendulum", "cartpole", "lqr", "sine".
Environment make_environment(std::string_view name);
std::vector<std::string> environment_names();

}  // namespace dau
