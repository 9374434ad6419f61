#pragma once

#include <string>
#include <string_view>

namespace dau {

enum class ScalingMode { scaled, unscaled };

ScalingMode parse_scaling_mode(std::string_view s);
std::string to_string(ScalingMode m);

/// Base hyperparameters, independent of the time step.
struct HyperConfig {
  ScalingMode mode = ScalingMode::scaled;
  double alpha_critic = 0.1;   ///< V and A for DAU, Q for the baselines
  double alpha_policy = 0.03;  ///< policy network
  double dt_ref = 0.01;        ///< reference step used by the unscaled mode
  double gamma = 0.8;          ///< physical discount
  double beta = 1.0;           ///< learning rates scale as dt^beta
  double tau = 0.9;            ///< target soft-update factor (baselines)
};

/// Step-dependent quantities an agent actually uses.
struct ResolvedRates {
  double lr_value = 0.0;
  double lr_advantage = 0.0;
  double lr_policy = 0.0;
  double reward_scale = 0.0;  ///< multiplies reward rates
  double rms_decay = 0.0;     ///< RMSProp moving-average factor
  double discount = 0.0;      ///< per-step gamma^dt, in every mode
  double tau = 0.0;
};

ResolvedRates hyper_resolve(const HyperConfig& config, double dt);

}  // namespace dau
