#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dau/envs.hpp"
#include "dau/hyper.hpp"
#include "dau/nn.hpp"
#include "dau/replay.hpp"

namespace dau {

struct UpdateStats {
  double residual_mean = 0.0;  ///< mean (Q - target)/dt for DAU, mean TD error for baselines
  double grad_norm_value = 0.0;
  double grad_norm_advantage = 0.0;
  double grad_norm_policy = 0.0;
};

/// Common surface the harness drives. Acting takes one state per row and,
/// when `noise` is non-empty, one exploration noise vector per row.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string kind() const = 0;
  virtual std::vector<Action> act(const nn::Matrix& states,
                                  std::span<const std::vector<double>> noise = {}) const = 0;
  virtual UpdateStats update(const Batch& batch) = 0;
  /// State value used for phase-space grids: V for DAU, greedy Q for baselines.
  virtual nn::Vector state_value(const nn::Matrix& states) const = 0;
  /// Raw gradients of the last update, one vector per optimized network.
  virtual const std::vector<nn::Vector>& last_gradients() const = 0;

  virtual void save(std::ostream& out) const = 0;
  virtual void load(std::istream& in) = 0;

  const ResolvedRates& rates() const noexcept { return rates_; }
  void set_rates(const ResolvedRates& r) { rates_ = r; }
  double dt() const noexcept { return dt_; }

  /// Enables mean-std normalization of state inputs.
  void enable_input_normalization(std::size_t state_dim) { normalizer_.emplace(state_dim); }
  void observe_state(std::span<const double> s) {
    if (normalizer_) normalizer_->observe(s);
  }
  const std::optional<nn::InputNormalizer>& normalizer() const noexcept { return normalizer_; }

 protected:
  Agent(double dt, const ResolvedRates& rates);
  nn::Matrix prepare(const nn::Matrix& states) const;

  double dt_;
  ResolvedRates rates_;
  std::optional<nn::InputNormalizer> normalizer_;
};

/// Maps a tanh-bounded network output to an action box.
struct ActionScaling {
  nn::Vector center;
  nn::Vector half_width;

  static ActionScaling from(const ActionSpace& space);
  nn::Matrix apply(const nn::Matrix& unit) const;
};

/// DAU with a finite action set. The realized advantage
/// A(s, a) = Abar(s, a) - max_a' Abar(s, a') is zero at the greedy action.
class DauDiscreteAgent final : public Agent {
 public:
  DauDiscreteAgent(std::unique_ptr<nn::Function> value, std::unique_ptr<nn::Function> advantage,
                   double dt, const ResolvedRates& rates);

  std::string kind() const override { return "dau"; }
  std::vector<Action> act(const nn::Matrix& states,
                          std::span<const std::vector<double>> noise = {}) const override;
  UpdateStats update(const Batch& batch) override;
  nn::Vector state_value(const nn::Matrix& states) const override;
  const std::vector<nn::Vector>& last_gradients() const override { return grads_; }
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

  /// Realized advantages, one column per action; each row's max is exactly 0.
  nn::Matrix realized_advantages(const nn::Matrix& states) const;

  nn::Function& value_net() { return *value_; }
  nn::Function& advantage_net() { return *advantage_; }
  const nn::Function& value_net() const { return *value_; }
  const nn::Function& advantage_net() const { return *advantage_; }

 private:
  std::unique_ptr<nn::Function> value_, advantage_;
  nn::RmsProp opt_value_, opt_advantage_;
  std::vector<nn::Vector> grads_;
};

/// DAU with a box action space and a deterministic policy network.
/// A(s, a) = Abar(s, a) - Abar(s, pi(s)).
class DauContinuousAgent final : public Agent {
 public:
  DauContinuousAgent(std::unique_ptr<nn::Function> value, std::unique_ptr<nn::Function> advantage,
                     std::unique_ptr<nn::Function> policy, const ActionSpace& actions, double dt,
                     const ResolvedRates& rates);

  std::string kind() const override { return "dau"; }
  std::vector<Action> act(const nn::Matrix& states,
                          std::span<const std::vector<double>> noise = {}) const override;
  UpdateStats update(const Batch& batch) override;
  nn::Vector state_value(const nn::Matrix& states) const override;
  const std::vector<nn::Vector>& last_gradients() const override { return grads_; }
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

  nn::Matrix policy_actions(const nn::Matrix& states) const;
  /// Realized advantage A(s, a) for paired rows of states and actions.
  nn::Vector realized_advantage(const nn::Matrix& states, const nn::Matrix& actions) const;

  nn::Function& value_net() { return *value_; }
  nn::Function& advantage_net() { return *advantage_; }
  nn::Function& policy_net() { return *policy_; }

 private:
  std::unique_ptr<nn::Function> value_, advantage_, policy_;
  ActionSpace space_;
  ActionScaling scaling_;
  nn::RmsProp opt_value_, opt_advantage_, opt_policy_;
  std::vector<nn::Vector> grads_;
};

/// Q-learning baseline with a soft-updated target network.
class DqnAgent final : public Agent {
 public:
  DqnAgent(std::unique_ptr<nn::Function> q, double dt, const ResolvedRates& rates);

  std::string kind() const override { return "dqn"; }
  std::vector<Action> act(const nn::Matrix& states,
                          std::span<const std::vector<double>> noise = {}) const override;
  UpdateStats update(const Batch& batch) override;
  nn::Vector state_value(const nn::Matrix& states) const override;
  const std::vector<nn::Vector>& last_gradients() const override { return grads_; }
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

  nn::Function& q_net() { return *q_; }
  const nn::Function& target_net() const { return *target_; }

 private:
  std::unique_ptr<nn::Function> q_, target_;
  nn::RmsProp opt_q_;
  std::vector<nn::Vector> grads_;
};

/// Deterministic actor-critic baseline with soft-updated targets.
class DdpgAgent final : public Agent {
 public:
  DdpgAgent(std::unique_ptr<nn::Function> q, std::unique_ptr<nn::Function> policy,
            const ActionSpace& actions, double dt, const ResolvedRates& rates);

  std::string kind() const override { return "ddpg"; }
  std::vector<Action> act(const nn::Matrix& states,
                          std::span<const std::vector<double>> noise = {}) const override;
  UpdateStats update(const Batch& batch) override;
  nn::Vector state_value(const nn::Matrix& states) const override;
  const std::vector<nn::Vector>& last_gradients() const override { return grads_; }
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

  nn::Matrix policy_actions(const nn::Matrix& states) const;
  nn::Function& q_net() { return *q_; }
  nn::Function& policy_net() { return *policy_; }
  const nn::Function& target_q() const { return *target_q_; }
  const nn::Function& target_policy() const { return *target_policy_; }

 private:
  nn::Matrix target_policy_actions(const nn::Matrix& prepared_states) const;

  std::unique_ptr<nn::Function> q_, policy_, target_q_, target_policy_;
  ActionSpace space_;
  ActionScaling scaling_;
  nn::RmsProp opt_q_, opt_policy_;
  std::vector<nn::Vector> grads_;
};

/// theta' <- tau theta' + (1 - tau) theta
void soft_update(std::span<double> target, std::span<const double> source, double tau);

struct NetworkSpec {
  std::vector<std::size_t> hidden{256, 256};
  std::uint64_t seed = 0;
};

/// Builds an agent of kind "dau", "dqn" or "ddpg" with LayerNorm MLPs sized
/// for `env`. DQN needs discrete actions and DDPG continuous ones.
std::unique_ptr<Agent> make_agent(const std::string& kind, const ContinuousDynamics& env,
                                  const NetworkSpec& nets, const HyperConfig& hyper, double dt);

}  // namespace dau
