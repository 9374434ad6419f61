#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dau/ode_core.hpp"

namespace dau::theory {

/// Log-log fit of error against step size.
struct RateFit {
  std::vector<double> dt;     ///< strictly decreasing
  std::vector<double> error;  ///< one per dt
  /// Least-squares slope and intercept of log(error) on log(dt); empty when
  /// any error is zero.
  std::optional<double> slope;
  std::optional<double> intercept;
  double slope_lo = 0.0;
  double slope_hi = 0.0;

  bool slope_within_window() const { return slope && *slope >= slope_lo && *slope <= slope_hi; }
};

/// Fits the order and sets the acceptance window expected_order +- window.
RateFit fit_rate(std::vector<double> dt, std::vector<double> error, double expected_order,
                 double window = 0.2);

/// Result of one named check, serializable to the metrics JSON schema.
struct Report {
  std::string name;
  std::optional<RateFit> fit;
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::pair<std::string, std::vector<double>>> series;
  bool passed = false;
  std::string detail;

  double value(const std::string& key) const;
  std::string to_json() const;
};

using Policy = std::function<Action(std::span<const double> state)>;

// ----------------------------------------------------------- discretization

/// Sup-norm distance, over observation instants k dt <= T, between the
/// single-Euler-step held-action trajectory and a fine closed-loop RK4
/// reference. The errors are fitted with expected order 1.
RateFit trajectory_convergence(const ContinuousDynamics& dyn, const Policy& policy,
                               const State& s0, double horizon, std::vector<double> dt_grid,
                               double reference_step = 1e-4);

// --------------------------------------------------------------------- LQR

/// Exact rollout values on the LQR discretization under a = -k s.
struct LqrValues {
  double q = 0.0;  ///< first action `a`, then the policy
  double v = 0.0;
};
LqrValues lqr_rollout_values(double k, double s, double a, double gamma, double dt);

/// |Q_dt - V_dt| against dt (expected order 1).
RateFit q_collapse(double k, double s, double a, double gamma, std::vector<double> dt_grid);
/// |V_dt - V| against dt (expected order 1).
RateFit value_convergence(double k, double s, double gamma, std::vector<double> dt_grid);
/// |(Q_dt - V_dt)/dt - A| against dt (expected order 1).
RateFit advantage_limit(double k, double s, double a, double gamma, std::vector<double> dt_grid);

struct ImprovementVerdict {
  bool advantage_nonnegative = false;  ///< A^{pi_k}(s, pi_k'(s)) >= 0 on the grid
  bool value_improves = false;         ///< V^{pi_k'} >= V^{pi_k} on the grid
  bool strictly_worse_somewhere = false;
  bool holds = false;
};
ImprovementVerdict policy_improvement(double k, double k_new, double gamma,
                                      const std::vector<double>& state_grid);

// ------------------------------------------------------------ exploration

struct AveragingPoint {
  double dt = 0.0;
  double mean_distance = 0.0;  ///< |mean_seeds s_T - averaged ODE s_T|
  double cross_seed_std = 0.0; ///< RMS distance of seeds from their mean at T
};

/// Epsilon-greedy on the two-torque pendulum (greedy action: +max torque,
/// noise: uniform over both torques) versus the averaged ODE
/// (1 - eps) F(s, pi(s)) + eps E_a F(s, a).
std::vector<AveragingPoint> eps_greedy_averaging(double epsilon, const std::vector<double>& dt_grid,
                                                 double horizon, std::size_t n_seeds,
                                                 const State& s0, std::uint64_t seed);

// ------------------------------------------------------ learning-rate scaling

/// Plain-gradient value learning along s_t = sin(t) with V(s) = theta s,
/// zero reward, learning rate alpha dt^beta.
struct SineLearning {
  std::vector<double> theta;  ///< theta at t = k dt, k = 0..steps
  double max_abs_theta = 0.0;
  double max_abs_change = 0.0;  ///< sup |theta_t - theta_0|
  bool overflowed = false;
};
SineLearning sine_value_learning(double beta, double dt, double horizon, double alpha = 1.0,
                                 double theta0 = 1.0, double gamma = 0.8);

// ---------------------------------------------------------------- registry

std::vector<std::string> check_names();
/// Runs a named check with its default parameters and pinned thresholds.
Report run_check(const std::string& name, std::uint64_t seed = 0);

// Individual checks with their default parameters.
Report check_trajectory_convergence();
Report check_q_collapse();
Report check_value_convergence();
Report check_advantage_limit();
Report check_policy_improvement();
Report check_eps_greedy_averaging(std::uint64_t seed = 0, std::size_t n_seeds = 256);
Report check_lr_trichotomy();

}  // namespace dau::theory
