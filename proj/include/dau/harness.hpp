#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dau/agents.hpp"
#include "dau/config.hpp"
#include "dau/envs.hpp"

namespace dau {

/// One evaluation row of metrics.csv.
struct MetricsRow {
  double physical_time = 0.0;  ///< evaluation grid point, a multiple of eval_interval
  double consumed_time = 0.0;  ///< interaction seconds actually consumed
  std::uint64_t epoch = 0;
  double eval_scaled_return = 0.0;
  double eval_return_std = 0.0;
  double residual_mean = 0.0;
  double grad_norm_value = 0.0;
  double grad_norm_advantage = 0.0;
  double grad_norm_policy = 0.0;
  std::uint64_t updates = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> returns;
};

using BatchPolicy = std::function<std::vector<Action>(const nn::Matrix& states)>;

/// Runs `episodes` noise-free episodes of `seconds` physical seconds from
/// initial states drawn on the evaluation stream (seed, index). Returns the
/// scaled returns sum_k gamma^{k dt} r_k dt.
EvalResult evaluate_policy(const Environment& env, const BatchPolicy& policy, double dt,
                           double gamma, int substeps, std::size_t episodes, double seconds,
                           std::uint64_t seed, std::uint64_t index);

struct RunResult {
  std::vector<MetricsRow> rows;
  bool diverged = false;
  std::string message;
  double total_physical_time = 0.0;
  std::uint64_t updates = 0;
};

/// Collect/learn loop. When `cfg.out` is non-empty writes metrics.csv,
/// timing.csv, config.json and checkpoint.bin there.
RunResult run_experiment(const ExperimentConfig& cfg);

struct SweepCell {
  double dt = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  RunResult result;
};

/// Runs every (dt, seed) pair into `base.out/dt_<dt>_seed_<seed>` and writes
/// the long-format aggregate `base.out/sweep.csv`. A failing cell is
/// recorded and the sweep goes on.
std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const std::vector<double>& dt_list,
                                 const std::vector<std::uint64_t>& seeds);
std::string sweep_header();

struct GridRow {
  double theta = 0.0;
  double theta_dot = 0.0;
  double value = 0.0;
  double action = 0.0;  ///< torque, or action index for discrete agents
};

/// V and greedy action on a resolution x resolution grid over
/// [-pi, pi] x [-8, 8]. Rows vary theta fastest.
std::vector<GridRow> value_phase_grid(const Agent& agent, const ContinuousDynamics& dyn,
                                      std::size_t resolution);
/// Loads a pendulum checkpoint and writes the grid CSV to `out_path`.
std::vector<GridRow> export_value_grid(const std::string& checkpoint_path,
                                       const std::string& out_path, std::size_t resolution);

}  // namespace dau
