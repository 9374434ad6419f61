#include <doctest.h>

#include <cmath>
#include <sstream>

#include "agent_oracles.hpp"
#include "dau/agents.hpp"
#include "dau/envs.hpp"
#include "dau/errors.hpp"

using namespace dau;
using nn::Matrix;
using nn::Mlp;
using nn::Vector;

namespace {

constexpr double kDt = 0.05;

ResolvedRates rates(double dt = kDt) { return hyper_resolve(HyperConfig{}, dt); }

const ActionSpace kTorque = ActionSpace::continuous({-2.0}, {2.0});

/// Abar(s, a) = -(a + s)^2 on a 1-D state and action; no parameters.
class QuadraticAdvantage final : public nn::Function {
 public:
  std::size_t input_dim() const override { return 2; }
  std::size_t output_dim() const override { return 1; }
  std::span<double> params() override { return {}; }
  std::span<const double> params() const override { return {}; }
  Matrix forward(const Matrix& x, nn::ForwardCache* cache) const override {
    if (cache) *cache = {this, {x}};
    return (-(x.col(0) + x.col(1)).array().square()).matrix();
  }
  nn::Gradients backward(const nn::ForwardCache& cache, const Matrix& dy) const override {
    const Matrix& x = cache.tensors[0];
    nn::Gradients g;
    g.input.resize(x.rows(), 2);
    const Vector d = (-2.0 * (x.col(0) + x.col(1))).cwiseProduct(dy.col(0));
    g.input.col(0) = d;
    g.input.col(1) = d;
    return g;
  }
  std::unique_ptr<nn::Function> clone() const override { return std::make_unique<QuadraticAdvantage>(); }
};

/// Constant Abar = c.
class ConstantAdvantage final : public nn::Function {
 public:
  std::size_t input_dim() const override { return 2; }
  std::size_t output_dim() const override { return 1; }
  std::span<double> params() override { return {}; }
  std::span<const double> params() const override { return {}; }
  Matrix forward(const Matrix& x, nn::ForwardCache* cache) const override {
    if (cache) *cache = {this, {x}};
    return Matrix::Constant(x.rows(), 1, 0.7);
  }
  nn::Gradients backward(const nn::ForwardCache& cache, const Matrix&) const override {
    return {Vector(), Matrix::Zero(cache.tensors[0].rows(), 2)};
  }
  std::unique_ptr<nn::Function> clone() const override { return std::make_unique<ConstantAdvantage>(); }
};

std::unique_ptr<Mlp> mlp(std::vector<std::size_t> sizes, nn::Head head, std::uint64_t seed) {
  auto m = std::make_unique<Mlp>(std::move(sizes), head, seed);
  oracle::jitter(*m, seed + 100);
  return m;
}

Matrix probe_states(Eigen::Index n, Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = normal(rng);
  return m;
}

}  // namespace

TEST_SUITE("agents") {
  TEST_CASE("update gradients match finite differences") {
    const auto discrete = ActionSpace::discrete(3);
    for (std::size_t batch : {1, 6}) {
      const auto bd = oracle::random_batch(batch, 2, discrete, 5 + batch);
      CHECK(oracle::check_dau_discrete(*mlp({2, 4, 1}, nn::Head::identity, 1),
                                       *mlp({2, 4, 3}, nn::Head::identity, 2), kDt, rates(), bd)
                .worst() < 1e-4);
      CHECK(oracle::check_dqn(*mlp({2, 4, 3}, nn::Head::identity, 3), kDt, rates(), bd).worst() < 1e-4);

      const auto bc = oracle::random_batch(batch, 2, kTorque, 9 + batch);
      const auto wide = ActionSpace::continuous({-2.0}, {2.0});
      CHECK(oracle::check_dau_continuous(*mlp({2, 4, 1}, nn::Head::identity, 4),
                                         *mlp({3, 4, 1}, nn::Head::identity, 5),
                                         *mlp({2, 4, 1}, nn::Head::tanh, 6), wide, kDt, rates(), bc)
                .worst() < 1e-4);
      CHECK(oracle::check_ddpg(*mlp({3, 4, 1}, nn::Head::identity, 7), *mlp({2, 4, 1}, nn::Head::tanh, 8),
                               wide, kDt, rates(), bc)
                .worst() < 1e-4);
    }
  }

  TEST_CASE("discrete DAU single transition by hand") {
    auto v = std::make_unique<nn::Linear>(1, 1, false);
    auto a = std::make_unique<nn::Linear>(1, 2, true);
    v->params()[0] = 0.4;
    // Layout: W (2x1) then b.
    a->params()[2] = 0.2;
    a->params()[3] = 0.5;
    const double dt = 0.1;
    const ResolvedRates r = rates(dt);
    DauDiscreteAgent agent(std::move(v), std::move(a), dt, r);
    Transition t{{1.0}, Action::discrete(0), -1.0, false, {0.5}};
    const Batch b = make_batch({&t});

    const double q = 0.4 + dt * (0.2 - 0.5);
    const double target = -1.0 * r.reward_scale + r.discount * 0.4 * 0.5;
    const double residual = (q - target) / dt;
    const UpdateStats st = agent.update(b);
    CHECK(st.residual_mean == doctest::Approx(residual).epsilon(1e-12));
    const auto& g = agent.last_gradients();
    CHECK(g[0](0) == doctest::Approx(residual).epsilon(1e-12));
    CHECK(g[1](0) == doctest::Approx(residual).epsilon(1e-12));
    CHECK(g[1](1) == doctest::Approx(-residual).epsilon(1e-12));
    CHECK(g[1](2) == doctest::Approx(residual).epsilon(1e-12));
    CHECK(g[1](3) == doctest::Approx(-residual).epsilon(1e-12));
    const double step = r.lr_value * residual / (std::sqrt((1.0 - r.rms_decay) * residual * residual) + nn::RmsProp::kEps);
    CHECK(agent.value_net().params()[0] == doctest::Approx(0.4 - step).epsilon(1e-12));

    // Finite-difference oracle on the same transition.
    auto v2 = std::make_unique<nn::Linear>(1, 1, false);
    auto a2 = std::make_unique<nn::Linear>(1, 2, true);
    v2->params()[0] = 0.4;
    a2->params()[2] = 0.2;
    a2->params()[3] = 0.5;
    CHECK(oracle::check_dau_discrete(*v2, *a2, dt, r, b).worst() < 1e-6);
  }

  TEST_CASE("argmax actions leave Q equal to V") {
    auto v = std::make_unique<nn::Linear>(1, 1, false);
    auto a = std::make_unique<nn::Linear>(1, 2, true);
    v->params()[0] = 0.3;
    a->params()[3] = 1.0;
    DauDiscreteAgent agent(std::move(v), std::move(a), kDt, rates());
    Matrix s(1, 1);
    s << 2.0;
    const Matrix adv = agent.realized_advantages(s);
    CHECK(adv(0, 1) == 0.0);
    CHECK(adv(0, 0) < 0.0);
  }

  TEST_CASE("perfect targets give zero gradients") {
    auto v = std::make_unique<nn::Linear>(1, 1, false);
    auto a = std::make_unique<nn::Linear>(1, 2, true);
    DauDiscreteAgent agent(std::move(v), std::move(a), kDt, rates());
    Transition t{{1.0}, Action::discrete(1), 0.0, false, {0.3}};
    agent.update(make_batch({&t}));
    for (const auto& g : agent.last_gradients()) CHECK(g.norm() == 0.0);
    CHECK(agent.value_net().params()[0] == 0.0);

    auto q = std::make_unique<nn::Linear>(1, 2, false);
    DqnAgent dqn(std::move(q), kDt, rates());
    dqn.update(make_batch({&t}));
    CHECK(dqn.last_gradients()[0].norm() == 0.0);
  }

  TEST_CASE("single-transition DQN update by hand") {
    auto q = std::make_unique<nn::Linear>(1, 2, true);
    // Q(s) = (0.5 s + 0.1, -0.2 s + 0.3)
    q->params()[0] = 0.5;
    q->params()[1] = -0.2;
    q->params()[2] = 0.1;
    q->params()[3] = 0.3;
    HyperConfig h;
    h.mode = ScalingMode::unscaled;
    const double dt = 0.001;
    const ResolvedRates r = hyper_resolve(h, dt);
    DqnAgent agent(std::move(q), dt, r);
    Transition t{{2.0}, Action::discrete(0), 3.0, false, {1.0}};
    agent.update(make_batch({&t}));
    const double target = 3.0 * 0.01 + std::pow(0.8, dt) * std::max(0.6, 0.1);
    const double td = (0.5 * 2.0 + 0.1) - target;
    const auto& g = agent.last_gradients()[0];
    CHECK(std::abs(g(0) - td * 2.0) < 1e-10);
    CHECK(std::abs(g(1)) < 1e-10);
    CHECK(std::abs(g(2) - td) < 1e-10);
    CHECK(std::abs(g(3)) < 1e-10);
  }

  TEST_CASE("tau = 1 freezes target networks") {
    ResolvedRates r = rates();
    r.tau = 1.0;
    DqnAgent dqn(mlp({2, 4, 2}, nn::Head::identity, 1), kDt, r);
    const std::vector<double> before(dqn.target_net().params().begin(), dqn.target_net().params().end());
    const auto b = oracle::random_batch(8, 2, ActionSpace::discrete(2), 3);
    for (int i = 0; i < 5; ++i) dqn.update(b);
    CHECK(std::equal(before.begin(), before.end(), dqn.target_net().params().begin()));

    DdpgAgent ddpg(mlp({3, 4, 1}, nn::Head::identity, 2), mlp({2, 4, 1}, nn::Head::tanh, 3), kTorque, kDt, r);
    const std::vector<double> tq(ddpg.target_q().params().begin(), ddpg.target_q().params().end());
    const std::vector<double> tp(ddpg.target_policy().params().begin(), ddpg.target_policy().params().end());
    const auto bc = oracle::random_batch(8, 2, kTorque, 4);
    for (int i = 0; i < 5; ++i) ddpg.update(bc);
    CHECK(std::equal(tq.begin(), tq.end(), ddpg.target_q().params().begin()));
    CHECK(std::equal(tp.begin(), tp.end(), ddpg.target_policy().params().begin()));
  }

  TEST_CASE("soft update") {
    std::vector<double> target{1.0, 2.0};
    const std::vector<double> source{3.0, 6.0};
    soft_update(target, source, 0.75);
    CHECK(target[0] == doctest::Approx(1.5));
    CHECK(target[1] == doctest::Approx(3.0));
    soft_update(target, source, 0.0);
    CHECK(target == source);
  }

  TEST_CASE("policy moves toward the quadratic optimum") {
    for (double s0 : {-0.8, -0.3, 0.4, 0.9}) {
      auto v = std::make_unique<nn::Linear>(1, 1, false);
      auto p = std::make_unique<nn::Linear>(1, 1, false);
      DauContinuousAgent agent(std::move(v), std::make_unique<QuadraticAdvantage>(), std::move(p), kTorque, kDt,
                               rates());
      Matrix s(1, 1);
      s << s0;
      const double before = std::abs(agent.policy_actions(s)(0, 0) + s0);
      Transition t{{s0}, Action::continuous({0.0}), 0.0, false, {s0}};
      for (int i = 0; i < 20; ++i) agent.update(make_batch({&t}));
      const double after = std::abs(agent.policy_actions(s)(0, 0) + s0);
      CHECK(after < before);
    }
  }

  TEST_CASE("advantage constant in the action gives no policy gradient") {
    const auto b = oracle::random_batch(5, 1, kTorque, 2);
    Batch one_d = b;
    one_d.states = b.states.leftCols(1);
    one_d.next_states = b.next_states.leftCols(1);
    DauContinuousAgent small(std::make_unique<nn::Linear>(1, 1, true), std::make_unique<ConstantAdvantage>(),
                             std::make_unique<nn::Linear>(1, 1, true), kTorque, kDt, rates());
    small.update(one_d);
    CHECK(small.last_gradients()[2].norm() == 0.0);
  }

  TEST_CASE("consistency holds exactly after training") {
    const auto space = ActionSpace::discrete(3);
    DauDiscreteAgent d(mlp({2, 8, 1}, nn::Head::identity, 1), mlp({2, 8, 3}, nn::Head::identity, 2), kDt, rates());
    DauContinuousAgent c(mlp({2, 8, 1}, nn::Head::identity, 3), mlp({3, 8, 1}, nn::Head::identity, 4),
                         mlp({2, 8, 1}, nn::Head::tanh, 5), kTorque, kDt, rates());
    for (int i = 0; i < 50; ++i) {
      d.update(oracle::random_batch(16, 2, space, 100 + i));
      c.update(oracle::random_batch(16, 2, kTorque, 200 + i));
    }
    const Matrix s = probe_states(30, 2, 9);
    const Matrix adv = d.realized_advantages(s);
    for (Eigen::Index i = 0; i < s.rows(); ++i) CHECK(adv.row(i).maxCoeff() == 0.0);
    CHECK((c.realized_advantage(s, c.policy_actions(s)).array() == 0.0).all());
  }

  TEST_CASE("non-finite signals abort before any parameter change") {
    DauDiscreteAgent agent(mlp({2, 4, 1}, nn::Head::identity, 1), mlp({2, 4, 2}, nn::Head::identity, 2), kDt, rates());
    auto b = oracle::random_batch(4, 2, ActionSpace::discrete(2), 1);
    b.reward_rates(1) = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> before(agent.value_net().params().begin(), agent.value_net().params().end());
    CHECK_THROWS_AS(agent.update(b), NumericError);
    CHECK(std::equal(before.begin(), before.end(), agent.value_net().params().begin()));
  }

  TEST_CASE("acting") {
    auto a = std::make_unique<nn::Linear>(1, 2, true);
    a->params()[2] = 0.3;
    a->params()[3] = 0.1;
    DauDiscreteAgent agent(std::make_unique<nn::Linear>(1, 1, false), std::move(a), kDt, rates());
    Matrix s(2, 1);
    s << 0.0, 1.0;
    CHECK(agent.act(s)[0].index() == 0);
    const std::vector<std::vector<double>> noise{{0.0, 0.5}, {0.0, 0.0}};
    const auto explored = agent.act(s, noise);
    CHECK(explored[0].index() == 1);
    CHECK(explored[1].index() == 0);
    const std::vector<std::vector<double>> short_noise{{0.0, 0.5}};
    CHECK_THROWS_AS(agent.act(s, short_noise), InvalidArgument);

    DdpgAgent ddpg(mlp({3, 4, 1}, nn::Head::identity, 2), mlp({2, 4, 1}, nn::Head::tanh, 3), kTorque, kDt, rates());
    const Matrix ps = probe_states(6, 2, 1);
    const auto greedy = ddpg.act(ps);
    for (const auto& act : greedy) CHECK(std::abs(act.values()[0]) <= 2.0);
    const std::vector<std::vector<double>> big(6, std::vector<double>{10.0});
    for (const auto& act : ddpg.act(ps, big)) CHECK(act.values()[0] == 2.0);
  }

  TEST_CASE("save and load restore behaviour") {
    for (const char* kind : {"dau", "ddpg"}) {
      const auto env = make_environment("pendulum");
      NetworkSpec nets{{8, 8}, 4};
      auto agent = make_agent(kind, env.dynamics, nets, HyperConfig{}, kDt);
      for (int i = 0; i < 3; ++i) agent->update(oracle::random_batch(8, 2, env.dynamics.actions, i));
      std::stringstream ss;
      agent->save(ss);
      auto fresh = make_agent(kind, env.dynamics, NetworkSpec{{8, 8}, 99}, HyperConfig{}, kDt);
      fresh->load(ss);
      const Matrix s = probe_states(5, 2, 3);
      CHECK((agent->state_value(s).array() == fresh->state_value(s).array()).all());
      // Identical optimizer state: one more update matches bitwise.
      const auto b = oracle::random_batch(8, 2, env.dynamics.actions, 50);
      agent->update(b);
      fresh->update(b);
      CHECK((agent->state_value(s).array() == fresh->state_value(s).array()).all());
    }
    const auto cart = make_environment("cartpole");
    auto dqn = make_agent("dqn", cart.dynamics, NetworkSpec{{8}, 1}, HyperConfig{}, kDt);
    std::stringstream ss;
    dqn->save(ss);
    auto dau = make_agent("dau", cart.dynamics, NetworkSpec{{8}, 1}, HyperConfig{}, kDt);
    CHECK_THROWS_AS(dau->load(ss), IoError);
  }

  TEST_CASE("factory rejects mismatched agents") {
    const auto pend = make_environment("pendulum");
    const auto cart = make_environment("cartpole");
    CHECK_THROWS_AS(make_agent("dqn", pend.dynamics, {}, HyperConfig{}, kDt), InvalidArgument);
    CHECK_THROWS_AS(make_agent("ddpg", cart.dynamics, {}, HyperConfig{}, kDt), InvalidArgument);
    CHECK_THROWS_AS(make_agent("sarsa", cart.dynamics, {}, HyperConfig{}, kDt), InvalidArgument);
    CHECK(make_agent("dau", cart.dynamics, NetworkSpec{{4}, 0}, HyperConfig{}, kDt)->kind() == "dau");
  }
}
