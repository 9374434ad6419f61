#include "dau/hyper.hpp"

#include <cmath>

#include "dau/errors.hpp"
#include "dau/ode_core.hpp"

namespace dau {

ScalingMode parse_scaling_mode(std::string_view s) {
  if (s == "scaled") return ScalingMode::scaled;
  if (s == "unscaled") return ScalingMode::unscaled;
  throw InvalidArgument("mode must be 'scaled' or 'unscaled', got '" + std::string(s) + "'");
}

std::string to_string(ScalingMode m) { return m == ScalingMode::scaled ? "scaled" : "unscaled"; }

ResolvedRates hyper_resolve(const HyperConfig& config, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(config.beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  if (!(config.dt_ref > 0.0 && config.dt_ref < 1.0)) throw InvalidArgument("dt_ref must lie in (0, 1)");
  if (!(config.tau >= 0.0 && config.tau <= 1.0)) throw InvalidArgument("tau must lie in [0, 1]");

  const double step = config.mode == ScalingMode::scaled ? dt : config.dt_ref;
  if (!(step < 1.0)) throw InvalidArgument("scaled mode needs dt < 1 for the RMSProp decay");
  const double lr_scale = std::pow(step, config.beta);

  ResolvedRates r;
  r.lr_value = config.alpha_critic * lr_scale;
  r.lr_advantage = config.alpha_critic * lr_scale;
  r.lr_policy = config.alpha_policy * lr_scale;
  r.reward_scale = step;
  r.rms_decay = 1.0 - step;
  r.discount = effective_discount(config.gamma, dt);
  r.tau = config.tau;
  return r;
}

}  // namespace dau
