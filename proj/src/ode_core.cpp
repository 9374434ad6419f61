#include "dau/ode_core.hpp"

#include <cmath>
#include <string>

#include "dau/errors.hpp"

namespace dau {

ActionSpace ActionSpace::discrete(std::size_t count) {
  if (count == 0) throw InvalidArgument("discrete action space needs at least one action");
  ActionSpace space;
  space.count_ = count;
  return space;
}

ActionSpace ActionSpace::continuous(std::vector<double> low, std::vector<double> high) {
  if (low.empty() || low.size() != high.size())
    throw InvalidArgument("continuous action bounds must be non-empty and equal length");
  for (std::size_t i = 0; i < low.size(); ++i)
    if (!(low[i] <= high[i])) throw InvalidArgument("action lower bound exceeds upper bound");
  ActionSpace space;
  space.discrete_ = false;
  space.low_ = std::move(low);
  space.high_ = std::move(high);
  return space;
}

double effective_discount(double gamma, double dt) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!(dt >= 0.0)) throw InvalidArgument("dt must be non-negative");
  return std::exp(dt * std::log(gamma));
}

double physical_time_horizon(double gamma, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  return dt / (1.0 - effective_discount(gamma, dt));
}

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

State integrate_held_action(const ContinuousDynamics& dyn, std::span<const double> s,
                            const Action& a, double dt, int substeps, Integrator method) {
  if (substeps < 1) throw InvalidArgument("substeps must be >= 1");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const std::size_t n = s.size();
  State y(s.begin(), s.end());
  const double h = dt / substeps;

  if (method == Integrator::euler) {
    State k(n);
    for (int step = 0; step < substeps; ++step) {
      dyn.drift(y, a, k);
      for (std::size_t i = 0; i < n; ++i) y[i] += h * k[i];
      if (!all_finite(y))
        throw IntegrationBlowup(step, "non-finite state at Euler substep " + std::to_string(step));
    }
    return y;
  }

  State k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int step = 0; step < substeps; ++step) {
    dyn.drift(y, a, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    dyn.drift(tmp, a, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    dyn.drift(tmp, a, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    dyn.drift(tmp, a, k4);
    for (std::size_t i = 0; i < n; ++i)
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!all_finite(y))
      throw IntegrationBlowup(step, "non-finite state at RK4 substep " + std::to_string(step));
  }
  return y;
}

NearContinuousMdp::NearContinuousMdp(ContinuousDynamics dynamics, double dt, double gamma,
                                     int substeps, Integrator method)
    : dyn_(std::move(dynamics)),
      dt_(dt),
      gamma_(gamma),
      substeps_(substeps),
      method_(method),
      step_discount_(0.0) {
  if (!(dt > 0.0)) throw InvalidArgument("mdp dt must be strictly positive");
  if (substeps < 1) throw InvalidArgument("substeps must be >= 1");
  step_discount_ = effective_discount(gamma, dt);
}

StepResult NearContinuousMdp::step(std::span<const double> s, const Action& a) const {
  if (dyn_.is_terminal && dyn_.is_terminal(s))
    throw ContractViolation("step called from a terminal state of '" + dyn_.name + "'");
  StepResult out;
  out.reward_rate = dyn_.reward_rate(s, a);
  out.reward = out.reward_rate * dt_;
  out.next = integrate_held_action(dyn_, s, a, dt_, substeps_, method_);
  if (dyn_.project) dyn_.project(out.next);
  out.done = dyn_.is_terminal ? dyn_.is_terminal(out.next) : false;
  return out;
}

void Trajectory::push(const Action& a, double reward_rate, State next) {
  if (states.empty()) throw ContractViolation("trajectory needs an initial state before push");
  actions.push_back(a);
  reward_rates.push_back(reward_rate);
  states.push_back(std::move(next));
}

double discretized_return(const Trajectory& traj, double gamma) {
  if (traj.actions.size() != traj.reward_rates.size() ||
      (!traj.states.empty() && traj.states.size() != traj.reward_rates.size() + 1))
    throw InvalidArgument("malformed trajectory: inconsistent lengths");
  std::size_t n = traj.reward_rates.size();
  if (traj.done_index) n = std::min(n, *traj.done_index + 1);
  const double step_discount = effective_discount(gamma, traj.dt);
  double total = 0.0;
  double weight = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += weight * traj.reward_rates[k] * traj.dt;
    weight *= step_discount;
  }
  return total;
}

}  // namespace dau
