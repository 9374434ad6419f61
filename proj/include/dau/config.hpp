#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dau/hyper.hpp"

namespace dau {

/// Everything needed to reproduce one training run.
struct ExperimentConfig {
  std::string env = "pendulum";
  std::string agent = "dau";
  ScalingMode mode = ScalingMode::scaled;
  double dt = 0.01;
  double gamma = 0.8;
  std::uint64_t seed = 0;
  std::size_t parallel_envs = 32;
  std::size_t nb_epochs = 10;
  /// When positive, overrides nb_epochs so that training consumes this many
  /// physical seconds (rounded to whole epochs).
  double train_seconds = 0.0;
  std::size_t nb_steps = 10;
  std::size_t nb_learn = 50;
  std::size_t batch = 256;
  std::size_t buffer_capacity = 1'000'000;
  double eval_interval = 10.0;  ///< physical seconds between evaluations
  std::size_t eval_episodes = 8;
  /// Evaluation episode length in physical seconds; 0 uses the environment cap.
  double eval_seconds = 0.0;
  std::string out = "run";
  std::vector<std::size_t> hidden{256, 256};
  std::optional<double> alpha_critic;  ///< default 0.1
  std::optional<double> alpha_policy;  ///< default 0.03, 0.02 on pendulum and cartpole
  std::optional<double> tau;           ///< default 0.9, 0 on pendulum and cartpole
  double dt_ref = 0.01;
  double beta = 1.0;
  double ou_kappa = 7.5;
  double ou_sigma = 1.5;
  int substeps = 8;
  std::size_t workers = 1;

  /// Assigns one key from its textual value. Throws InvalidArgument on an
  /// unknown key or malformed value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Base hyperparameters with environment-specific defaults applied.
  HyperConfig hyper() const;
  /// Epochs actually run, after applying train_seconds.
  std::size_t epochs() const;
  /// Physical seconds consumed per epoch across all parallel environments.
  double seconds_per_epoch() const;

  /// Rejects inconsistent settings.
  void validate() const;
  std::string to_json() const;
};

/// Parses flat `key = value` lines. Blank lines and lines starting with '#'
/// are ignored.
std::map<std::string, std::string> parse_key_values(const std::string& text);
void apply_key_values(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace dau
