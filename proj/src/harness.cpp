#include "dau/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "dau/checkpoint.hpp"
#include "dau/errors.hpp"
#include "dau/exploration.hpp"
#include "dau/replay.hpp"

namespace dau {

namespace fs = std::filesystem;

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

nn::Matrix stack(const std::vector<State>& states, std::size_t dim) {
  nn::Matrix m(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = states[i][j];
  return m;
}

/// Runs f(i) for i in [0, n) on up to `workers` threads. Each index is
/// independent, so the result does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& f) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::size_t w = std::min(workers, n);
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::jthread> threads;
  threads.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += w) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  threads.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::size_t noise_dim(const ActionSpace& space) { return space.is_discrete() ? space.count() : space.dim(); }

std::size_t steps_in(double seconds, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seconds / dt)));
}

}  // namespace

std::string metrics_header() {
  return "physical_time,consumed_time,epoch,eval_scaled_return,eval_return_std,residual_mean,"
         "grad_norm_value,grad_norm_advantage,grad_norm_policy,updates,dt,seed,status";
}

std::string format_metrics_row(const MetricsRow& r) {
  std::string s;
  s += num(r.physical_time) + "," + num(r.consumed_time) + "," + std::to_string(r.epoch) + ",";
  s += num(r.eval_scaled_return) + "," + num(r.eval_return_std) + "," + num(r.residual_mean) + ",";
  s += num(r.grad_norm_value) + "," + num(r.grad_norm_advantage) + "," + num(r.grad_norm_policy) + ",";
  s += std::to_string(r.updates) + "," + num(r.dt) + "," + std::to_string(r.seed) + "," + r.status;
  return s;
}

EvalResult evaluate_policy(const Environment& env, const BatchPolicy& policy, double dt,
                           double gamma, int substeps, std::size_t episodes, double seconds,
                           std::uint64_t seed, std::uint64_t index) {
  if (episodes == 0) throw InvalidArgument("need at least one evaluation episode");
  const NearContinuousMdp mdp(env.dynamics, dt, gamma, substeps);
  Rng rng = make_stream(seed, Stream::eval, index);
  std::vector<State> states;
  for (std::size_t e = 0; e < episodes; ++e) states.push_back(env.sample_initial(rng));
  std::vector<double> returns(episodes, 0.0);
  std::vector<bool> alive(episodes, true);
  const std::size_t steps = steps_in(seconds, dt);
  double weight = 1.0;
  const std::size_t dim = env.dynamics.state_dim;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::vector<Action> actions = policy(stack(states, dim));
    bool any = false;
    for (std::size_t e = 0; e < episodes; ++e) {
      if (!alive[e]) continue;
      StepResult r = mdp.step(states[e], actions[e]);
      returns[e] += weight * r.reward;
      states[e] = std::move(r.next);
      if (r.done) alive[e] = false;
      any = any || alive[e];
    }
    if (!any) break;
    weight *= mdp.step_discount();
  }
  EvalResult out;
  out.returns = returns;
  for (double r : returns) out.mean += r / static_cast<double>(episodes);
  double ss = 0.0;
  for (double r : returns) ss += (r - out.mean) * (r - out.mean);
  out.stddev = episodes > 1 ? std::sqrt(ss / static_cast<double>(episodes - 1)) : 0.0;
  return out;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Environment env = make_environment(cfg.env);
  const ContinuousDynamics& dyn = env.dynamics;
  const NearContinuousMdp mdp(dyn, cfg.dt, cfg.gamma, cfg.substeps);

  NetworkSpec nets;
  nets.hidden = cfg.hidden;
  nets.seed = make_stream(cfg.seed, Stream::init)();
  std::unique_ptr<Agent> agent = make_agent(cfg.agent, dyn, nets, cfg.hyper(), cfg.dt);
  if (env.normalize_inputs) agent->enable_input_normalization(dyn.state_dim);

  const std::size_t P = cfg.parallel_envs;
  std::vector<Rng> env_rng;
  std::vector<OuProcess> ou;
  std::vector<State> states(P);
  std::vector<std::size_t> episode_steps(P, 0);
  for (std::size_t i = 0; i < P; ++i) {
    env_rng.push_back(make_stream(cfg.seed, Stream::env, i));
    ou.emplace_back(noise_dim(dyn.actions), cfg.dt, make_stream(cfg.seed, Stream::exploration, i),
                    cfg.ou_kappa, cfg.ou_sigma);
    states[i] = env.sample_initial(env_rng[i]);
  }
  Rng buffer_rng = make_stream(cfg.seed, Stream::buffer);
  ReplayBuffer buffer(cfg.buffer_capacity);

  const std::size_t episode_cap = steps_in(env.episode_seconds, cfg.dt);
  const double eval_seconds = cfg.eval_seconds > 0.0 ? cfg.eval_seconds : env.episode_seconds;
  const std::size_t epochs = cfg.epochs();

  const bool write = !cfg.out.empty();
  const fs::path dir(cfg.out);
  std::ofstream metrics, timing;
  if (write) {
    fs::create_directories(dir);
    write_file(dir / "config.json", cfg.to_json() + "\n");
    metrics.open(dir / "metrics.csv", std::ios::binary);
    timing.open(dir / "timing.csv", std::ios::binary);
    if (!metrics || !timing) throw IoError("cannot open output files in '" + cfg.out + "'");
    metrics << metrics_header() << "\n";
    timing << "physical_time,wall_time\n";
  }

  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  std::uint64_t env_steps = 0;
  std::uint64_t eval_index = 0;
  UpdateStats acc;
  std::uint64_t acc_n = 0;

  const BatchPolicy greedy = [&](const nn::Matrix& s) { return agent->act(s); };

  auto emit = [&](MetricsRow row) {
    row.dt = cfg.dt;
    row.seed = cfg.seed;
    row.updates = result.updates;
    if (write) {
      metrics << format_metrics_row(row) << "\n";
      metrics.flush();
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      timing << num(row.physical_time) << "," << num(wall) << "\n";
    }
    result.rows.push_back(std::move(row));
  };

  auto evaluate_row = [&](double grid_time, std::uint64_t epoch) {
    MetricsRow row;
    row.physical_time = grid_time;
    row.consumed_time = static_cast<double>(env_steps) * cfg.dt;
    row.epoch = epoch;
    const EvalResult ev = evaluate_policy(env, greedy, cfg.dt, cfg.gamma, cfg.substeps,
                                          cfg.eval_episodes, eval_seconds, cfg.seed, eval_index++);
    row.eval_scaled_return = ev.mean;
    row.eval_return_std = ev.stddev;
    if (acc_n > 0) {
      const double n = static_cast<double>(acc_n);
      row.residual_mean = acc.residual_mean / n;
      row.grad_norm_value = acc.grad_norm_value / n;
      row.grad_norm_advantage = acc.grad_norm_advantage / n;
      row.grad_norm_policy = acc.grad_norm_policy / n;
    }
    acc = {};
    acc_n = 0;
    emit(std::move(row));
  };

  std::vector<Transition> pending(P);
  std::vector<std::vector<double>> noise(P);
  std::uint64_t epoch = 0;
  try {
    evaluate_row(0.0, 0);
    double next_grid = cfg.eval_interval;
    for (epoch = 1; epoch <= epochs; ++epoch) {
      for (std::size_t step = 0; step < cfg.nb_steps; ++step) {
        for (std::size_t i = 0; i < P; ++i) noise[i] = ou[i].value();
        const std::vector<Action> actions = agent->act(stack(states, dyn.state_dim), noise);
        parallel_for(P, cfg.workers, [&](std::size_t i) {
          StepResult r = mdp.step(states[i], actions[i]);
          pending[i] = Transition{states[i], actions[i], r.reward_rate, r.done, std::move(r.next)};
        });
        for (std::size_t i = 0; i < P; ++i) {
          agent->observe_state(pending[i].state);
          states[i] = pending[i].next_state;
          const bool done = pending[i].done;
          buffer.push(std::move(pending[i]));
          ++env_steps;
          ++episode_steps[i];
          if (done || episode_steps[i] >= episode_cap) {
            states[i] = env.sample_initial(env_rng[i]);
            episode_steps[i] = 0;
            ou[i].reset();
          } else {
            ou[i].step();
          }
        }
      }
      for (std::size_t l = 0; l < cfg.nb_learn; ++l) {
        if (buffer.size() < std::min(cfg.batch, buffer.capacity())) break;
        const UpdateStats st = agent->update(buffer.sample(cfg.batch, buffer_rng));
        ++result.updates;
        acc.residual_mean += st.residual_mean;
        acc.grad_norm_value += st.grad_norm_value;
        acc.grad_norm_advantage += st.grad_norm_advantage;
        acc.grad_norm_policy += st.grad_norm_policy;
        ++acc_n;
      }
      const double consumed = static_cast<double>(env_steps) * cfg.dt;
      while (next_grid <= consumed * (1.0 + 1e-9)) {
        evaluate_row(next_grid, epoch);
        next_grid = cfg.eval_interval * static_cast<double>(eval_index);
      }
    }
    epoch = epochs;
  } catch (const NumericError& e) {
    result.diverged = true;
    result.message = e.what();
    MetricsRow row;
    row.physical_time = static_cast<double>(env_steps) * cfg.dt;
    row.consumed_time = row.physical_time;
    row.epoch = epoch;
    row.eval_scaled_return = std::nan("");
    row.eval_return_std = std::nan("");
    row.residual_mean = std::nan("");
    row.status = "nonfinite";
    emit(std::move(row));
  }
  result.total_physical_time = static_cast<double>(env_steps) * cfg.dt;

  if (write) {
    LoopState loop;
    loop.epochs_done = epoch;
    loop.env_steps = env_steps;
    loop.rng_states.push_back(rng_to_string(buffer_rng));
    for (const auto& r : env_rng) loop.rng_states.push_back(rng_to_string(r));
    for (const auto& o : ou) {
      loop.rng_states.push_back(rng_to_string(o.rng()));
      loop.ou_values.push_back(o.value());
    }
    save_checkpoint((dir / "checkpoint.bin").string(), cfg, *agent, loop);
  }
  return result;
}

std::string sweep_header() {
  return "dt,seed,physical_time,eval_scaled_return,eval_return_std,residual_mean,status";
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const std::vector<double>& dt_list,
                                 const std::vector<std::uint64_t>& seeds) {
  if (dt_list.empty() || seeds.empty()) throw InvalidArgument("sweep needs at least one dt and one seed");
  const fs::path root(base.out.empty() ? "sweep" : base.out);
  fs::create_directories(root);
  std::vector<SweepCell> cells;
  for (double dt : dt_list) {
    for (std::uint64_t seed : seeds) {
      SweepCell cell;
      cell.dt = dt;
      cell.seed = seed;
      ExperimentConfig cfg = base;
      cfg.dt = dt;
      cfg.seed = seed;
      cfg.out = (root / ("dt_" + short_num(dt) + "_seed_" + std::to_string(seed))).string();
      try {
        cell.result = run_experiment(cfg);
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  std::ostringstream csv;
  csv << sweep_header() << "\n";
  for (const auto& c : cells) {
    if (!c.ok) {
      std::string msg = c.error;
      for (char& ch : msg)
        if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
      csv << num(c.dt) << "," << c.seed << ",nan,nan,nan,nan,failed: " << msg << "\n";
      continue;
    }
    for (const auto& r : c.result.rows)
      csv << num(c.dt) << "," << c.seed << "," << num(r.physical_time) << ","
          << num(r.eval_scaled_return) << "," << num(r.eval_return_std) << ","
          << num(r.residual_mean) << "," << r.status << "\n";
  }
  write_file(root / "sweep.csv", csv.str());
  return cells;
}

std::vector<GridRow> value_phase_grid(const Agent& agent, const ContinuousDynamics& dyn,
                                      std::size_t resolution) {
  if (dyn.state_dim != 2) throw InvalidArgument("phase grid needs a two-dimensional state");
  if (resolution < 2) throw InvalidArgument("grid resolution must be at least 2");
  const double pi = std::numbers::pi;
  const auto n = static_cast<Eigen::Index>(resolution);
  nn::Matrix states(n * n, 2);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      states(j * n + i, 0) = -pi + 2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1);
      states(j * n + i, 1) = -8.0 + 16.0 * static_cast<double>(j) / static_cast<double>(n - 1);
    }
  }
  const nn::Vector v = agent.state_value(states);
  const std::vector<Action> a = agent.act(states);
  std::vector<GridRow> rows;
  rows.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index r = 0; r < n * n; ++r) {
    const Action& act = a[static_cast<std::size_t>(r)];
    const double action = act.is_discrete() ? static_cast<double>(act.index()) : act.values()[0];
    rows.push_back({states(r, 0), states(r, 1), v(r), action});
  }
  return rows;
}

std::vector<GridRow> export_value_grid(const std::string& checkpoint_path, const std::string& out_path,
                                       std::size_t resolution) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  if (ck.config.env != "pendulum") throw InvalidArgument("phase grid needs a pendulum checkpoint");
  const Environment env = make_environment(ck.config.env);
  std::vector<GridRow> rows = value_phase_grid(*ck.agent, env.dynamics, resolution);
  std::ostringstream csv;
  csv << "theta,theta_dot,value,action\n";
  for (const auto& r : rows)
    csv << num(r.theta) << "," << num(r.theta_dot) << "," << num(r.value) << "," << num(r.action) << "\n";
  write_file(out_path, csv.str());
  return rows;
}

}  // namespace dau
