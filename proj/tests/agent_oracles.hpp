// Finite-difference oracles for every agent update. Each builds the scalar
// objective from plain forward passes of mirror networks, independent of
// the agents' own backward code.
#pragma once

#include <memory>
#include <random>
#include <vector>

#include "dau/agents.hpp"
#include "fd.hpp"

namespace oracle {

using dau::nn::Function;
using dau::nn::Matrix;
using dau::nn::Vector;

inline Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

inline Matrix scale_actions(const Matrix& unit, const dau::ActionSpace& space) {
  Matrix out = unit;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double lo = space.low()[static_cast<std::size_t>(j)], hi = space.high()[static_cast<std::size_t>(j)];
    out.col(j) = (out.col(j).array() * (0.5 * (hi - lo)) + 0.5 * (lo + hi)).matrix();
  }
  return out;
}

/// Random batch with states ~ N(0, 1), rewards ~ N(0, 1) and a few terminals.
inline dau::Batch random_batch(std::size_t n, std::size_t state_dim, const dau::ActionSpace& space,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<dau::Transition> items;
  for (std::size_t i = 0; i < n; ++i) {
    dau::Transition t;
    for (std::size_t d = 0; d < state_dim; ++d) {
      t.state.push_back(normal(rng));
      t.next_state.push_back(normal(rng));
    }
    if (space.is_discrete()) {
      t.action = dau::Action::discrete(std::uniform_int_distribution<std::size_t>(0, space.count() - 1)(rng));
    } else {
      std::vector<double> a;
      for (std::size_t d = 0; d < space.dim(); ++d)
        a.push_back(std::uniform_real_distribution<double>(space.low()[d], space.high()[d])(rng));
      t.action = dau::Action::continuous(a);
    }
    t.reward_rate = normal(rng);
    t.done = i % 5 == 4;
    items.push_back(std::move(t));
  }
  std::vector<const dau::Transition*> ptrs;
  for (const auto& t : items) ptrs.push_back(&t);
  return dau::make_batch(ptrs);
}

inline void jitter(Function& f, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& p : f.params()) p += u(rng);
}

struct GradCheck {
  std::vector<double> errors;  ///< relative error per optimized network
  double worst() const {
    double w = 0.0;
    for (double e : errors) w = std::max(w, e);
    return w;
  }
};

inline double rel(const Vector& analytic, const std::vector<double>& numeric) {
  return fd::relative_error({analytic.data(), numeric.size()}, numeric);
}

inline Vector terminal_mask(const dau::Batch& b) { return Vector::Ones(b.done.size()) - b.done; }

/// Discrete DAU: dJ/dtheta and (1/dt) dJ/dpsi with
/// J = sum_i (Q_i - target_i)^2 / (2 N dt), V(s') and the argmax held fixed.
inline GradCheck check_dau_discrete(const Function& value, const Function& advantage, double dt,
                                    const dau::ResolvedRates& rates, const dau::Batch& batch) {
  auto v = value.clone();
  auto a = advantage.clone();
  dau::DauDiscreteAgent agent(value.clone(), advantage.clone(), dt, rates);
  agent.update(batch);
  const auto& g = agent.last_gradients();

  const auto n = static_cast<Eigen::Index>(batch.size());
  const Vector target = rates.reward_scale * batch.reward_rates +
                        rates.discount * terminal_mask(batch).cwiseProduct(v->forward(batch.next_states).col(0));
  const Matrix a0 = a->forward(batch.states);
  std::vector<Eigen::Index> best(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) a0.row(i).maxCoeff(&best[static_cast<std::size_t>(i)]);

  auto objective = [&] {
    const Vector vs = v->forward(batch.states).col(0);
    const Matrix as = a->forward(batch.states);
    double j = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto act = static_cast<Eigen::Index>(batch.action_index[static_cast<std::size_t>(i)]);
      const double q = vs(i) + dt * (as(i, act) - as(i, best[static_cast<std::size_t>(i)]));
      j += (q - target(i)) * (q - target(i));
    }
    return j / (2.0 * static_cast<double>(n) * dt);
  };
  GradCheck out;
  out.errors.push_back(rel(g[0], fd::gradient(v->params(), objective)));
  auto ga = fd::gradient(a->params(), objective);
  for (double& x : ga) x /= dt;
  out.errors.push_back(rel(g[1], ga));
  return out;
}

/// Continuous DAU: as above with A = Abar(s, a) - Abar(s, pi(s)) and pi held
/// fixed; the policy gradient is d/dphi mean_i Abar(s_i, pi_phi(s_i)).
inline GradCheck check_dau_continuous(const Function& value, const Function& advantage,
                                      const Function& policy, const dau::ActionSpace& space, double dt,
                                      const dau::ResolvedRates& rates, const dau::Batch& batch) {
  auto v = value.clone();
  auto a = advantage.clone();
  auto p = policy.clone();
  dau::DauContinuousAgent agent(value.clone(), advantage.clone(), policy.clone(), space, dt, rates);
  agent.update(batch);
  const auto& g = agent.last_gradients();

  const auto n = static_cast<double>(batch.size());
  const Vector target = rates.reward_scale * batch.reward_rates +
                        rates.discount * terminal_mask(batch).cwiseProduct(v->forward(batch.next_states).col(0));
  const Matrix pi0 = scale_actions(p->forward(batch.states), space);
  auto objective = [&] {
    const Vector q = v->forward(batch.states).col(0) +
                     dt * (a->forward(hcat(batch.states, batch.actions)).col(0) -
                           a->forward(hcat(batch.states, pi0)).col(0));
    return (q - target).squaredNorm() / (2.0 * n * dt);
  };
  auto policy_objective = [&] {
    return a->forward(hcat(batch.states, scale_actions(p->forward(batch.states), space))).col(0).sum() / n;
  };
  GradCheck out;
  out.errors.push_back(rel(g[0], fd::gradient(v->params(), objective)));
  auto ga = fd::gradient(a->params(), objective);
  for (double& x : ga) x /= dt;
  out.errors.push_back(rel(g[1], ga));
  out.errors.push_back(rel(g[2], fd::gradient(p->params(), policy_objective)));
  return out;
}

/// DQN: J = sum_i (Q(s_i, a_i) - y_i)^2 / (2N), y from the target network.
inline GradCheck check_dqn(const Function& q_net, double dt, const dau::ResolvedRates& rates,
                           const dau::Batch& batch) {
  auto q = q_net.clone();
  dau::DqnAgent agent(q_net.clone(), dt, rates);
  agent.update(batch);
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Vector y = rates.reward_scale * batch.reward_rates +
                   rates.discount * terminal_mask(batch).cwiseProduct(q->forward(batch.next_states).rowwise().maxCoeff());
  auto objective = [&] {
    const Matrix qs = q->forward(batch.states);
    double j = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = qs(i, static_cast<Eigen::Index>(batch.action_index[static_cast<std::size_t>(i)])) - y(i);
      j += d * d;
    }
    return j / (2.0 * static_cast<double>(n));
  };
  GradCheck out;
  out.errors.push_back(rel(agent.last_gradients()[0], fd::gradient(q->params(), objective)));
  return out;
}

/// DDPG: critic as DQN with y from the target pair; actor ascends
/// mean_i Q(s_i, pi_phi(s_i)).
inline GradCheck check_ddpg(const Function& q_net, const Function& policy, const dau::ActionSpace& space,
                            double dt, const dau::ResolvedRates& rates, const dau::Batch& batch) {
  auto q = q_net.clone();
  auto p = policy.clone();
  dau::DdpgAgent agent(q_net.clone(), policy.clone(), space, dt, rates);
  agent.update(batch);
  const auto& g = agent.last_gradients();
  const auto n = static_cast<double>(batch.size());
  const Matrix next_pi = scale_actions(p->forward(batch.next_states), space);
  const Vector y = rates.reward_scale * batch.reward_rates +
                   rates.discount * terminal_mask(batch).cwiseProduct(q->forward(hcat(batch.next_states, next_pi)).col(0));
  auto objective = [&] {
    return (q->forward(hcat(batch.states, batch.actions)).col(0) - y).squaredNorm() / (2.0 * n);
  };
  auto policy_objective = [&] {
    return q->forward(hcat(batch.states, scale_actions(p->forward(batch.states), space))).col(0).sum() / n;
  };
  GradCheck out;
  out.errors.push_back(rel(g[0], fd::gradient(q->params(), objective)));
  out.errors.push_back(rel(g[1], fd::gradient(p->params(), policy_objective)));
  return out;
}

}  // namespace oracle
