#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dau/ode_core.hpp"
#include "dau/rng.hpp"

namespace dau {

/// Mean factor and innovation standard deviation of the exact OU transition
/// over `dt`: z' = factor * z + stddev * xi.
struct OuTransition {
  double factor;
  double stddev;
};
OuTransition ou_transition(double kappa, double sigma, double dt);

/// Ornstein-Uhlenbeck noise dz = -kappa z dt + sigma dB, sampled exactly at
/// multiples of dt. Owns its generator.
class OuProcess {
 public:
  static constexpr double kDefaultKappa = 7.5;
  static constexpr double kDefaultSigma = 1.5;

  OuProcess(std::size_t dim, double dt, Rng rng, double kappa = kDefaultKappa,
            double sigma = kDefaultSigma);

  /// Advances one step of length dt and returns the new noise vector.
  const std::vector<double>& step();
  /// Redraws z from the stationary law N(0, sigma^2 / (2 kappa)).
  void reset();

  const std::vector<double>& value() const noexcept { return z_; }
  void set_value(std::vector<double> z);
  double stationary_variance() const noexcept { return sigma_ * sigma_ / (2.0 * kappa_); }
  double kappa() const noexcept { return kappa_; }
  double sigma() const noexcept { return sigma_; }
  double dt() const noexcept { return dt_; }
  Rng& rng() noexcept { return rng_; }
  const Rng& rng() const noexcept { return rng_; }

 private:
  std::vector<double> z_;
  double dt_, kappa_, sigma_;
  OuTransition transition_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// clip(a_det + z) to the box [low, high].
std::vector<double> continuous_explore(std::span<const double> a_det, std::span<const double> z,
                                       std::span<const double> low, std::span<const double> high);

/// argmax_a (adv[a] + z[a]); ties go to the lowest index.
std::size_t perturbed_argmax(std::span<const double> adv, std::span<const double> z);

/// Plain argmax with lowest-index tie breaking.
std::size_t argmax(std::span<const double> values);

/// With probability epsilon returns a draw from `noise`, otherwise `greedy`.
Action epsilon_greedy(const Action& greedy, double epsilon, const std::function<Action(Rng&)>& noise,
                      Rng& rng);

}  // namespace dau
