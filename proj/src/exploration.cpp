#include "dau/exploration.hpp"

#include <algorithm>
#include <cmath>

#include "dau/errors.hpp"

namespace dau {

OuTransition ou_transition(double kappa, double sigma, double dt) {
  if (!(kappa > 0.0)) throw InvalidArgument("OU stiffness must be positive");
  if (!(sigma >= 0.0)) throw InvalidArgument("OU scale must be non-negative");
  if (!(dt > 0.0)) throw InvalidArgument("OU dt must be positive");
  const double factor = std::exp(-kappa * dt);
  // 1 - exp(-2 kappa dt) via expm1 keeps precision at small dt.
  const double var = sigma * sigma * (-std::expm1(-2.0 * kappa * dt)) / (2.0 * kappa);
  return {factor, std::sqrt(var)};
}

OuProcess::OuProcess(std::size_t dim, double dt, Rng rng, double kappa, double sigma)
    : z_(dim, 0.0),
      dt_(dt),
      kappa_(kappa),
      sigma_(sigma),
      transition_(ou_transition(kappa, sigma, dt)),
      rng_(std::move(rng)) {
  if (dim == 0) throw InvalidArgument("OU process needs at least one dimension");
}

const std::vector<double>& OuProcess::step() {
  for (double& z : z_) z = transition_.factor * z + transition_.stddev * normal_(rng_);
  return z_;
}

void OuProcess::reset() {
  const double sd = std::sqrt(stationary_variance());
  for (double& z : z_) z = sd * normal_(rng_);
}

void OuProcess::set_value(std::vector<double> z) {
  if (z.size() != z_.size()) throw InvalidArgument("OU dimension mismatch");
  z_ = std::move(z);
}

std::vector<double> continuous_explore(std::span<const double> a_det, std::span<const double> z,
                                       std::span<const double> low, std::span<const double> high) {
  if (a_det.size() != z.size() || a_det.size() != low.size() || a_det.size() != high.size())
    throw InvalidArgument("exploration dimension mismatch");
  std::vector<double> out(a_det.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(a_det[i] + z[i], low[i], high[i]);
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax over an empty action set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::size_t perturbed_argmax(std::span<const double> adv, std::span<const double> z) {
  if (adv.empty()) throw InvalidArgument("perturbed argmax over an empty action set");
  if (adv.size() != z.size()) throw InvalidArgument("advantage and noise sizes differ");
  std::size_t best = 0;
  double best_value = adv[0] + z[0];
  for (std::size_t i = 1; i < adv.size(); ++i) {
    const double v = adv[i] + z[i];
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

Action epsilon_greedy(const Action& greedy, double epsilon, const std::function<Action(Rng&)>& noise,
                      Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon must lie in [0, 1]");
  // Always consume one uniform so the stream advances identically for every epsilon.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < epsilon) return noise(rng);
  return greedy;
}

}  // namespace dau
