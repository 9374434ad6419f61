#pragma once

#include <cstddef>
#include <vector>

#include "dau/nn.hpp"
#include "dau/ode_core.hpp"
#include "dau/rng.hpp"

namespace dau {

struct Transition {
  State state;
  Action action;
  double reward_rate = 0.0;  ///< r(s, a); agents apply the reward scale
  bool done = false;         ///< genuine termination only
  State next_state;
};

/// Column-stacked minibatch.
struct Batch {
  nn::Matrix states;
  nn::Matrix next_states;
  std::vector<std::size_t> action_index;  ///< discrete actions
  nn::Matrix actions;                     ///< continuous actions (rows)
  nn::Vector reward_rates;
  nn::Vector done;  ///< 1.0 on termination

  std::size_t size() const { return static_cast<std::size_t>(states.rows()); }
};

Batch make_batch(const std::vector<const Transition*>& items);

/// Fixed-capacity FIFO store with uniform sampling with replacement.
class ReplayBuffer {
 public:
  static constexpr std::size_t kDefaultCapacity = 1'000'000;

  explicit ReplayBuffer(std::size_t capacity = kDefaultCapacity);

  void push(Transition t);
  /// N indices drawn uniformly over current contents. Throws when empty.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  Batch sample(std::size_t n, Rng& rng) const;

  /// i-th element in insertion order, 0 = oldest still stored.
  const Transition& at(std::size_t i) const;
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  ///< slot overwritten next once full
  std::vector<Transition> data_;
};

}  // namespace dau
