#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dau {

using State = std::vector<double>;

class ActionSpace {
 public:
  static ActionSpace discrete(std::size_t count);
  static ActionSpace continuous(std::vector<double> low, std::vector<double> high);

  bool is_discrete() const noexcept { return discrete_; }
  /// Number of choices for a discrete space.
  std::size_t count() const noexcept { return count_; }
  /// Action vector length for a continuous space.
  std::size_t dim() const noexcept { return low_.size(); }
  const std::vector<double>& low() const noexcept { return low_; }
  const std::vector<double>& high() const noexcept { return high_; }

 private:
  bool discrete_ = true;
  std::size_t count_ = 0;
  std::vector<double> low_, high_;
};

/// Either a discrete index or a continuous vector.
class Action {
 public:
  static Action discrete(std::size_t index) {
    Action a;
    a.index_ = index;
    return a;
  }
  static Action continuous(std::vector<double> values) {
    Action a;
    a.discrete_ = false;
    a.values_ = std::move(values);
    return a;
  }

  bool is_discrete() const noexcept { return discrete_; }
  std::size_t index() const noexcept { return index_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  bool discrete_ = true;
  std::size_t index_ = 0;
  std::vector<double> values_;
};

/// A continuous-time control system ds/dt = F(s, a) with a reward rate.
struct ContinuousDynamics {
  std::string name;
  std::size_t state_dim = 0;
  ActionSpace actions = ActionSpace::discrete(1);
  /// Writes F(s, a) into `ds` (length state_dim).
  std::function<void(std::span<const double> s, const Action& a, std::span<double> ds)> drift;
  /// Reward per unit of physical time.
  std::function<double(std::span<const double> s, const Action& a)> reward_rate;
  std::function<bool(std::span<const double> s)> is_terminal;
  /// Optional state projection applied once after each environment step
  /// (e.g. velocity clamping). Not part of the ODE flow.
  std::function<void(std::span<double> s)> project;
};

enum class Integrator { rk4, euler };

/// gamma^dt, computed as exp(dt * ln gamma). dt = 0 gives 1.
double effective_discount(double gamma, double dt);

/// dt / (1 - gamma^dt): the horizon of the discounted sum in physical seconds.
double physical_time_horizon(double gamma, double dt);

/// Advances ds/dt = F(s, a) for `dt` physical seconds with `substeps` fixed
/// inner steps while holding `a`. Throws IntegrationBlowup on a non-finite
/// state, carrying the inner step index.
State integrate_held_action(const ContinuousDynamics& dyn, std::span<const double> s,
                            const Action& a, double dt, int substeps,
                            Integrator method = Integrator::rk4);

struct StepResult {
  State next;
  double reward_rate = 0.0;  ///< r(s, a)
  double reward = 0.0;       ///< r(s, a) * dt
  bool done = false;
};

class NearContinuousMdp {
 public:
  NearContinuousMdp(ContinuousDynamics dynamics, double dt, double gamma, int substeps = 8,
                    Integrator method = Integrator::rk4);

  const ContinuousDynamics& dynamics() const noexcept { return dyn_; }
  double dt() const noexcept { return dt_; }
  double gamma() const noexcept { return gamma_; }
  int substeps() const noexcept { return substeps_; }
  /// Per-step discount gamma^dt.
  double step_discount() const noexcept { return step_discount_; }

  StepResult step(std::span<const double> s, const Action& a) const;

 private:
  ContinuousDynamics dyn_;
  double dt_;
  double gamma_;
  int substeps_;
  Integrator method_;
  double step_discount_;
};

struct Trajectory {
  std::vector<State> states;
  std::vector<Action> actions;
  std::vector<double> reward_rates;
  double dt = 0.0;
  std::optional<std::size_t> done_index;

  /// Appends one transition. The first call must be preceded by one state.
  void push(const Action& a, double reward_rate, State next);
};

/// Sum_k gamma^{k dt} r_k dt, truncated after done_index when present.
double discretized_return(const Trajectory& traj, double gamma);

}  // namespace dau
