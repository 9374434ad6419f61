#include "dau/agents.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "dau/binary_io.hpp"
#include "dau/errors.hpp"
#include "dau/exploration.hpp"

namespace dau {

using nn::ForwardCache;
using nn::Matrix;
using nn::Vector;

namespace {

Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite ") + what + " in update");
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

std::span<const double> row_span(const Matrix& m, Eigen::Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

void check_noise(std::span<const std::vector<double>> noise, Eigen::Index rows) {
  if (!noise.empty() && static_cast<Eigen::Index>(noise.size()) != rows)
    throw InvalidArgument("one noise vector per state row is required");
}

void save_net(std::ostream& out, const nn::Function& f) {
  const auto* mlp = dynamic_cast<const nn::Mlp*>(&f);
  if (!mlp) throw InvalidArgument("only MLP networks can be checkpointed");
  mlp->save(out);
}

void load_net(std::istream& in, nn::Function& f) {
  const nn::Mlp stored = nn::Mlp::load(in);
  if (stored.input_dim() != f.input_dim() || stored.output_dim() != f.output_dim() ||
      stored.param_count() != f.param_count())
    throw IoError("checkpointed network shape does not match the agent");
  const auto src = stored.params();
  std::copy(src.begin(), src.end(), f.params().begin());
}

void save_opt(std::ostream& out, const nn::RmsProp& opt) { io::write_doubles(out, opt.second_moment()); }
void load_opt(std::istream& in, nn::RmsProp& opt) { io::read_doubles_into(in, opt.second_moment()); }

void save_normalizer(std::ostream& out, const std::optional<nn::InputNormalizer>& n) {
  io::write_le<std::uint8_t>(out, n ? 1 : 0);
  if (!n) return;
  io::write_le<std::uint64_t>(out, n->count());
  io::write_doubles(out, as_span(n->mean()));
  io::write_doubles(out, as_span(n->sum_sq_dev()));
}

void load_normalizer(std::istream& in, std::optional<nn::InputNormalizer>& n, std::size_t dim) {
  if (io::read_le<std::uint8_t>(in) == 0) {
    n.reset();
    return;
  }
  const auto count = io::read_le<std::uint64_t>(in);
  Vector mean(static_cast<Eigen::Index>(dim)), m2(static_cast<Eigen::Index>(dim));
  io::read_doubles_into(in, {mean.data(), dim});
  io::read_doubles_into(in, {m2.data(), dim});
  n.emplace(dim);
  n->restore(count, std::move(mean), std::move(m2));
}

void write_header(std::ostream& out, const std::string& kind) { io::write_string(out, kind); }

void read_header(std::istream& in, const std::string& kind) {
  if (io::read_string(in, 64) != kind) throw IoError("checkpoint holds a different agent kind");
}

Vector grad_of(const nn::Gradients& g) { return g.params; }

}  // namespace

Agent::Agent(double dt, const ResolvedRates& rates) : dt_(dt), rates_(rates) {
  if (!(dt > 0.0)) throw InvalidArgument("agent dt must be positive");
}

Matrix Agent::prepare(const Matrix& states) const {
  return normalizer_ ? normalizer_->apply(states) : states;
}

ActionScaling ActionScaling::from(const ActionSpace& space) {
  if (space.is_discrete()) throw InvalidArgument("action scaling needs a continuous space");
  ActionScaling s;
  const auto n = static_cast<Eigen::Index>(space.dim());
  s.center.resize(n);
  s.half_width.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = space.low()[static_cast<std::size_t>(i)];
    const double hi = space.high()[static_cast<std::size_t>(i)];
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw InvalidArgument("policy needs finite bounds");
    s.center[i] = 0.5 * (lo + hi);
    s.half_width[i] = 0.5 * (hi - lo);
  }
  return s;
}

Matrix ActionScaling::apply(const Matrix& unit) const {
  Matrix out = (unit.array().rowwise() * half_width.transpose().array()).matrix();
  out.rowwise() += center.transpose();
  return out;
}

void soft_update(std::span<double> target, std::span<const double> source, double tau) {
  if (target.size() != source.size()) throw InvalidArgument("soft update shape mismatch");
  if (tau == 1.0) return;
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = tau * target[i] + (1.0 - tau) * source[i];
}

// ---------------------------------------------------------------- DAU discrete

DauDiscreteAgent::DauDiscreteAgent(std::unique_ptr<nn::Function> value,
                                   std::unique_ptr<nn::Function> advantage, double dt,
                                   const ResolvedRates& rates)
    : Agent(dt, rates),
      value_(std::move(value)),
      advantage_(std::move(advantage)),
      opt_value_(value_->param_count(), rates.rms_decay),
      opt_advantage_(advantage_->param_count(), rates.rms_decay) {
  if (value_->output_dim() != 1) throw InvalidArgument("value network must have one output");
  if (value_->input_dim() != advantage_->input_dim())
    throw InvalidArgument("value and advantage networks disagree on the state size");
}

std::vector<Action> DauDiscreteAgent::act(const Matrix& states,
                                          std::span<const std::vector<double>> noise) const {
  check_noise(noise, states.rows());
  const Matrix adv = advantage_->forward(prepare(states));
  std::vector<Action> out;
  out.reserve(static_cast<std::size_t>(states.rows()));
  for (Eigen::Index i = 0; i < adv.rows(); ++i) {
    const auto row = row_span(adv, i);
    out.push_back(Action::discrete(noise.empty() ? argmax(row)
                                                 : perturbed_argmax(row, noise[static_cast<std::size_t>(i)])));
  }
  return out;
}

namespace {

// Contrasts against column 0 are shift-exact; the realized advantage is then
// D_a - D_max, which is <= 0 with equality at the argmax.
struct DiscreteAdvantage {
  Matrix contrast;
  std::vector<std::size_t> best;
};

DiscreteAdvantage discrete_advantage(const nn::Function& net, const ForwardCache& cache) {
  DiscreteAdvantage d;
  d.contrast = net.contrast_to_column(cache, 0);
  d.best.resize(static_cast<std::size_t>(d.contrast.rows()));
  for (Eigen::Index i = 0; i < d.contrast.rows(); ++i)
    d.best[static_cast<std::size_t>(i)] = argmax(row_span(d.contrast, i));
  return d;
}

}  // namespace

Matrix DauDiscreteAgent::realized_advantages(const Matrix& states) const {
  ForwardCache cache;
  advantage_->forward(prepare(states), &cache);
  const DiscreteAdvantage d = discrete_advantage(*advantage_, cache);
  Matrix out = d.contrast;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double top = d.contrast(i, static_cast<Eigen::Index>(d.best[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = d.contrast(i, j) - top;
  }
  return out;
}

UpdateStats DauDiscreteAgent::update(const Batch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw InvalidArgument("empty batch");
  if (batch.action_index.size() != static_cast<std::size_t>(n))
    throw InvalidArgument("discrete DAU needs discrete actions");

  const Matrix s = prepare(batch.states);
  const Matrix s_next = prepare(batch.next_states);
  ForwardCache v_cache, a_cache;
  const Vector v = value_->forward(s, &v_cache).col(0);
  const Vector v_next = value_->forward(s_next).col(0);  // no gradient path
  advantage_->forward(s, &a_cache);
  const DiscreteAdvantage adv = discrete_advantage(*advantage_, a_cache);

  Vector residual(n);
  Matrix dy_adv = Matrix::Zero(n, static_cast<Eigen::Index>(advantage_->output_dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<Eigen::Index>(batch.action_index[static_cast<std::size_t>(i)]);
    const auto m = static_cast<Eigen::Index>(adv.best[static_cast<std::size_t>(i)]);
    if (a >= dy_adv.cols()) throw InvalidArgument("action index out of range");
    const double realized = adv.contrast(i, a) - adv.contrast(i, m);
    const double q = v[i] + dt_ * realized;
    const double target = batch.reward_rates[i] * rates_.reward_scale +
                          (1.0 - batch.done[i]) * rates_.discount * v_next[i];
    residual[i] = (q - target) / dt_;
    const double w = residual[i] / static_cast<double>(n);
    dy_adv(i, a) += w;
    dy_adv(i, m) -= w;
  }
  require_finite(residual, "residual");

  Vector g_value = grad_of(value_->backward(v_cache, residual / static_cast<double>(n)));
  Vector g_adv = grad_of(advantage_->backward(a_cache, dy_adv));
  require_finite(g_value, "value gradient");
  require_finite(g_adv, "advantage gradient");

  opt_value_.step(value_->params(), as_span(g_value), rates_.lr_value);
  opt_advantage_.step(advantage_->params(), as_span(g_adv), rates_.lr_advantage);

  UpdateStats stats;
  stats.residual_mean = residual.mean();
  stats.grad_norm_value = g_value.norm();
  stats.grad_norm_advantage = g_adv.norm();
  grads_ = {std::move(g_value), std::move(g_adv)};
  return stats;
}

Vector DauDiscreteAgent::state_value(const Matrix& states) const {
  return value_->forward(prepare(states)).col(0);
}

void DauDiscreteAgent::save(std::ostream& out) const {
  write_header(out, "dau-discrete");
  save_net(out, *value_);
  save_net(out, *advantage_);
  save_opt(out, opt_value_);
  save_opt(out, opt_advantage_);
  save_normalizer(out, normalizer_);
}

void DauDiscreteAgent::load(std::istream& in) {
  read_header(in, "dau-discrete");
  load_net(in, *value_);
  load_net(in, *advantage_);
  load_opt(in, opt_value_);
  load_opt(in, opt_advantage_);
  load_normalizer(in, normalizer_, value_->input_dim());
}

// -------------------------------------------------------------- DAU continuous

DauContinuousAgent::DauContinuousAgent(std::unique_ptr<nn::Function> value,
                                       std::unique_ptr<nn::Function> advantage,
                                       std::unique_ptr<nn::Function> policy,
                                       const ActionSpace& actions, double dt,
                                       const ResolvedRates& rates)
    : Agent(dt, rates),
      value_(std::move(value)),
      advantage_(std::move(advantage)),
      policy_(std::move(policy)),
      space_(actions),
      scaling_(ActionScaling::from(actions)),
      opt_value_(value_->param_count(), rates.rms_decay),
      opt_advantage_(advantage_->param_count(), rates.rms_decay),
      opt_policy_(policy_->param_count(), rates.rms_decay) {
  const std::size_t sd = value_->input_dim();
  if (value_->output_dim() != 1 || advantage_->output_dim() != 1)
    throw InvalidArgument("value and advantage networks must have one output");
  if (advantage_->input_dim() != sd + actions.dim() || policy_->input_dim() != sd ||
      policy_->output_dim() != actions.dim())
    throw InvalidArgument("network sizes do not match the state/action dimensions");
}

Matrix DauContinuousAgent::policy_actions(const Matrix& states) const {
  return scaling_.apply(policy_->forward(prepare(states)));
}

std::vector<Action> DauContinuousAgent::act(const Matrix& states,
                                            std::span<const std::vector<double>> noise) const {
  check_noise(noise, states.rows());
  const Matrix pi = policy_actions(states);
  std::vector<Action> out;
  out.reserve(static_cast<std::size_t>(states.rows()));
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    const auto row = row_span(pi, i);
    if (noise.empty())
      out.push_back(Action::continuous({row.begin(), row.end()}));
    else
      out.push_back(Action::continuous(
          continuous_explore(row, noise[static_cast<std::size_t>(i)], space_.low(), space_.high())));
  }
  return out;
}

Vector DauContinuousAgent::realized_advantage(const Matrix& states, const Matrix& actions) const {
  const Matrix s = prepare(states);
  const Matrix pi = scaling_.apply(policy_->forward(s));
  ForwardCache c_taken, c_policy;
  advantage_->forward(hcat(s, actions), &c_taken);
  advantage_->forward(hcat(s, pi), &c_policy);
  return advantage_->paired_contrast(c_taken, c_policy);
}

UpdateStats DauContinuousAgent::update(const Batch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw InvalidArgument("empty batch");
  if (batch.actions.cols() != static_cast<Eigen::Index>(space_.dim()))
    throw InvalidArgument("continuous DAU needs continuous actions of the policy's size");
  const double inv_n = 1.0 / static_cast<double>(n);

  const Matrix s = prepare(batch.states);
  const Matrix s_next = prepare(batch.next_states);
  ForwardCache v_cache, pi_cache, taken_cache, policy_cache;
  const Vector v = value_->forward(s, &v_cache).col(0);
  const Vector v_next = value_->forward(s_next).col(0);
  const Matrix pi = scaling_.apply(policy_->forward(s, &pi_cache));
  advantage_->forward(hcat(s, batch.actions), &taken_cache);
  advantage_->forward(hcat(s, pi), &policy_cache);
  const Vector realized = advantage_->paired_contrast(taken_cache, policy_cache);

  const Vector q = v + dt_ * realized;
  const Vector target = rates_.reward_scale * batch.reward_rates +
                        rates_.discount * (Vector::Ones(n) - batch.done).cwiseProduct(v_next);
  const Vector residual = (q - target) / dt_;
  require_finite(residual, "residual");
  const Vector w = residual * inv_n;

  Vector g_value = grad_of(value_->backward(v_cache, w));
  Vector g_adv = grad_of(advantage_->backward(taken_cache, w));
  g_adv -= advantage_->backward(policy_cache, w).params;

  // Policy ascends dAbar/da at a = pi(s); the residual does not reach phi.
  const nn::Gradients at_policy = advantage_->backward(policy_cache, Matrix::Constant(n, 1, inv_n));
  const Matrix dadv_da = at_policy.input.rightCols(static_cast<Eigen::Index>(space_.dim()));
  const Matrix dy_policy = (dadv_da.array().rowwise() * scaling_.half_width.transpose().array()).matrix();
  Vector g_policy = grad_of(policy_->backward(pi_cache, dy_policy));

  require_finite(g_value, "value gradient");
  require_finite(g_adv, "advantage gradient");
  require_finite(g_policy, "policy gradient");

  opt_value_.step(value_->params(), as_span(g_value), rates_.lr_value);
  opt_advantage_.step(advantage_->params(), as_span(g_adv), rates_.lr_advantage);
  const Vector ascent = -g_policy;
  opt_policy_.step(policy_->params(), as_span(ascent), rates_.lr_policy);

  UpdateStats stats;
  stats.residual_mean = residual.mean();
  stats.grad_norm_value = g_value.norm();
  stats.grad_norm_advantage = g_adv.norm();
  stats.grad_norm_policy = g_policy.norm();
  grads_ = {std::move(g_value), std::move(g_adv), std::move(g_policy)};
  return stats;
}

Vector DauContinuousAgent::state_value(const Matrix& states) const {
  return value_->forward(prepare(states)).col(0);
}

void DauContinuousAgent::save(std::ostream& out) const {
  write_header(out, "dau-continuous");
  save_net(out, *value_);
  save_net(out, *advantage_);
  save_net(out, *policy_);
  save_opt(out, opt_value_);
  save_opt(out, opt_advantage_);
  save_opt(out, opt_policy_);
  save_normalizer(out, normalizer_);
}

void DauContinuousAgent::load(std::istream& in) {
  read_header(in, "dau-continuous");
  load_net(in, *value_);
  load_net(in, *advantage_);
  load_net(in, *policy_);
  load_opt(in, opt_value_);
  load_opt(in, opt_advantage_);
  load_opt(in, opt_policy_);
  load_normalizer(in, normalizer_, value_->input_dim());
}

// ------------------------------------------------------------------------ DQN

DqnAgent::DqnAgent(std::unique_ptr<nn::Function> q, double dt, const ResolvedRates& rates)
    : Agent(dt, rates),
      q_(std::move(q)),
      target_(q_->clone()),
      opt_q_(q_->param_count(), rates.rms_decay) {}

std::vector<Action> DqnAgent::act(const Matrix& states,
                                  std::span<const std::vector<double>> noise) const {
  check_noise(noise, states.rows());
  const Matrix values = q_->forward(prepare(states));
  std::vector<Action> out;
  out.reserve(static_cast<std::size_t>(states.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const auto row = row_span(values, i);
    out.push_back(Action::discrete(noise.empty() ? argmax(row)
                                                 : perturbed_argmax(row, noise[static_cast<std::size_t>(i)])));
  }
  return out;
}

UpdateStats DqnAgent::update(const Batch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw InvalidArgument("empty batch");
  if (batch.action_index.size() != static_cast<std::size_t>(n))
    throw InvalidArgument("DQN needs discrete actions");

  const Matrix s = prepare(batch.states);
  ForwardCache cache;
  const Matrix q = q_->forward(s, &cache);
  const Matrix q_next = target_->forward(prepare(batch.next_states));

  Vector td(n);
  Matrix dy = Matrix::Zero(n, q.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<Eigen::Index>(batch.action_index[static_cast<std::size_t>(i)]);
    if (a >= q.cols()) throw InvalidArgument("action index out of range");
    const double target = batch.reward_rates[i] * rates_.reward_scale +
                          (1.0 - batch.done[i]) * rates_.discount * q_next.row(i).maxCoeff();
    td[i] = q(i, a) - target;
    dy(i, a) = td[i] / static_cast<double>(n);
  }
  require_finite(td, "TD error");
  Vector g = grad_of(q_->backward(cache, dy));
  require_finite(g, "Q gradient");

  opt_q_.step(q_->params(), as_span(g), rates_.lr_value);
  soft_update(target_->params(), q_->params(), rates_.tau);

  UpdateStats stats;
  stats.residual_mean = td.mean();
  stats.grad_norm_value = g.norm();
  grads_ = {std::move(g)};
  return stats;
}

Vector DqnAgent::state_value(const Matrix& states) const {
  return q_->forward(prepare(states)).rowwise().maxCoeff();
}

void DqnAgent::save(std::ostream& out) const {
  write_header(out, "dqn");
  save_net(out, *q_);
  save_net(out, *target_);
  save_opt(out, opt_q_);
  save_normalizer(out, normalizer_);
}

void DqnAgent::load(std::istream& in) {
  read_header(in, "dqn");
  load_net(in, *q_);
  load_net(in, *target_);
  load_opt(in, opt_q_);
  load_normalizer(in, normalizer_, q_->input_dim());
}

// ----------------------------------------------------------------------- DDPG

DdpgAgent::DdpgAgent(std::unique_ptr<nn::Function> q, std::unique_ptr<nn::Function> policy,
                     const ActionSpace& actions, double dt, const ResolvedRates& rates)
    : Agent(dt, rates),
      q_(std::move(q)),
      policy_(std::move(policy)),
      target_q_(q_->clone()),
      target_policy_(policy_->clone()),
      space_(actions),
      scaling_(ActionScaling::from(actions)),
      opt_q_(q_->param_count(), rates.rms_decay),
      opt_policy_(policy_->param_count(), rates.rms_decay) {
  if (q_->output_dim() != 1) throw InvalidArgument("critic must have one output");
  if (q_->input_dim() != policy_->input_dim() + actions.dim() || policy_->output_dim() != actions.dim())
    throw InvalidArgument("network sizes do not match the state/action dimensions");
}

Matrix DdpgAgent::policy_actions(const Matrix& states) const {
  return scaling_.apply(policy_->forward(prepare(states)));
}

Matrix DdpgAgent::target_policy_actions(const Matrix& prepared_states) const {
  return scaling_.apply(target_policy_->forward(prepared_states));
}

std::vector<Action> DdpgAgent::act(const Matrix& states,
                                   std::span<const std::vector<double>> noise) const {
  check_noise(noise, states.rows());
  const Matrix pi = policy_actions(states);
  std::vector<Action> out;
  out.reserve(static_cast<std::size_t>(states.rows()));
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    const auto row = row_span(pi, i);
    if (noise.empty())
      out.push_back(Action::continuous({row.begin(), row.end()}));
    else
      out.push_back(Action::continuous(
          continuous_explore(row, noise[static_cast<std::size_t>(i)], space_.low(), space_.high())));
  }
  return out;
}

UpdateStats DdpgAgent::update(const Batch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw InvalidArgument("empty batch");
  if (batch.actions.cols() != static_cast<Eigen::Index>(space_.dim()))
    throw InvalidArgument("DDPG needs continuous actions of the policy's size");
  const double inv_n = 1.0 / static_cast<double>(n);

  const Matrix s = prepare(batch.states);
  const Matrix s_next = prepare(batch.next_states);
  ForwardCache q_cache, pi_cache, q_pi_cache;
  const Vector q = q_->forward(hcat(s, batch.actions), &q_cache).col(0);
  const Vector q_next = target_q_->forward(hcat(s_next, target_policy_actions(s_next))).col(0);
  const Vector target = rates_.reward_scale * batch.reward_rates +
                        rates_.discount * (Vector::Ones(n) - batch.done).cwiseProduct(q_next);
  const Vector td = q - target;
  require_finite(td, "TD error");
  Vector g_q = grad_of(q_->backward(q_cache, td * inv_n));

  const Matrix pi = scaling_.apply(policy_->forward(s, &pi_cache));
  q_->forward(hcat(s, pi), &q_pi_cache);
  const nn::Gradients at_policy = q_->backward(q_pi_cache, Matrix::Constant(n, 1, inv_n));
  const Matrix dq_da = at_policy.input.rightCols(static_cast<Eigen::Index>(space_.dim()));
  const Matrix dy_policy = (dq_da.array().rowwise() * scaling_.half_width.transpose().array()).matrix();
  Vector g_policy = grad_of(policy_->backward(pi_cache, dy_policy));
  require_finite(g_q, "Q gradient");
  require_finite(g_policy, "policy gradient");

  opt_q_.step(q_->params(), as_span(g_q), rates_.lr_value);
  const Vector ascent = -g_policy;
  opt_policy_.step(policy_->params(), as_span(ascent), rates_.lr_policy);
  soft_update(target_q_->params(), q_->params(), rates_.tau);
  soft_update(target_policy_->params(), policy_->params(), rates_.tau);

  UpdateStats stats;
  stats.residual_mean = td.mean();
  stats.grad_norm_value = g_q.norm();
  stats.grad_norm_policy = g_policy.norm();
  grads_ = {std::move(g_q), std::move(g_policy)};
  return stats;
}

Vector DdpgAgent::state_value(const Matrix& states) const {
  const Matrix s = prepare(states);
  return q_->forward(hcat(s, scaling_.apply(policy_->forward(s)))).col(0);
}

void DdpgAgent::save(std::ostream& out) const {
  write_header(out, "ddpg");
  save_net(out, *q_);
  save_net(out, *policy_);
  save_net(out, *target_q_);
  save_net(out, *target_policy_);
  save_opt(out, opt_q_);
  save_opt(out, opt_policy_);
  save_normalizer(out, normalizer_);
}

void DdpgAgent::load(std::istream& in) {
  read_header(in, "ddpg");
  load_net(in, *q_);
  load_net(in, *policy_);
  load_net(in, *target_q_);
  load_net(in, *target_policy_);
  load_opt(in, opt_q_);
  load_opt(in, opt_policy_);
  load_normalizer(in, normalizer_, policy_->input_dim());
}

// -------------------------------------------------------------------- factory

std::unique_ptr<Agent> make_agent(const std::string& kind, const ContinuousDynamics& env,
                                  const NetworkSpec& nets, const HyperConfig& hyper, double dt) {
  const ResolvedRates rates = hyper_resolve(hyper, dt);
  const std::size_t sd = env.state_dim;
  auto sizes = [&](std::size_t in, std::size_t out) {
    std::vector<std::size_t> s{in};
    s.insert(s.end(), nets.hidden.begin(), nets.hidden.end());
    s.push_back(out);
    return s;
  };
  // Each network gets its own seed derived from the init stream.
  auto seed = [&](std::uint64_t k) { return splitmix64(nets.seed ^ splitmix64(k)); };
  using nn::Head;
  using nn::Mlp;

  const bool discrete = env.actions.is_discrete();
  if (kind == "dau") {
    auto value = std::make_unique<Mlp>(sizes(sd, 1), Head::identity, seed(1));
    if (discrete) {
      auto adv = std::make_unique<Mlp>(sizes(sd, env.actions.count()), Head::identity, seed(2));
      return std::make_unique<DauDiscreteAgent>(std::move(value), std::move(adv), dt, rates);
    }
    const std::size_t ad = env.actions.dim();
    auto adv = std::make_unique<Mlp>(sizes(sd + ad, 1), Head::identity, seed(2));
    auto policy = std::make_unique<Mlp>(sizes(sd, ad), Head::tanh, seed(3));
    return std::make_unique<DauContinuousAgent>(std::move(value), std::move(adv), std::move(policy),
                                                env.actions, dt, rates);
  }
  if (kind == "dqn") {
    if (!discrete) throw InvalidArgument("dqn needs a discrete-action environment");
    auto q = std::make_unique<Mlp>(sizes(sd, env.actions.count()), Head::identity, seed(4));
    return std::make_unique<DqnAgent>(std::move(q), dt, rates);
  }
  if (kind == "ddpg") {
    if (discrete) throw InvalidArgument("ddpg needs a continuous-action environment");
    const std::size_t ad = env.actions.dim();
    auto q = std::make_unique<Mlp>(sizes(sd + ad, 1), Head::identity, seed(5));
    auto policy = std::make_unique<Mlp>(sizes(sd, ad), Head::tanh, seed(6));
    return std::make_unique<DdpgAgent>(std::move(q), std::move(policy), env.actions, dt, rates);
  }
  throw InvalidArgument("unknown agent '" + kind + "' (expected dau, dqn or ddpg)");
}

}  // namespace dau
