#include "dau/replay.hpp"

#include "dau/errors.hpp"

namespace dau {

Batch make_batch(const std::vector<const Transition*>& items) {
  if (items.empty()) throw InvalidArgument("empty batch");
  const auto n = static_cast<Eigen::Index>(items.size());
  const auto state_dim = static_cast<Eigen::Index>(items.front()->state.size());
  const bool discrete = items.front()->action.is_discrete();
  const auto action_dim =
      static_cast<Eigen::Index>(discrete ? 0 : items.front()->action.values().size());

  Batch b;
  b.states.resize(n, state_dim);
  b.next_states.resize(n, state_dim);
  b.reward_rates.resize(n);
  b.done.resize(n);
  if (discrete)
    b.action_index.resize(items.size());
  else
    b.actions.resize(n, action_dim);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *items[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(t.state.size()) != state_dim ||
        static_cast<Eigen::Index>(t.next_state.size()) != state_dim ||
        t.action.is_discrete() != discrete)
      throw InvalidArgument("heterogeneous transitions in batch");
    for (Eigen::Index j = 0; j < state_dim; ++j) {
      b.states(i, j) = t.state[static_cast<std::size_t>(j)];
      b.next_states(i, j) = t.next_state[static_cast<std::size_t>(j)];
    }
    if (discrete) {
      b.action_index[static_cast<std::size_t>(i)] = t.action.index();
    } else {
      const auto a = t.action.values();
      if (static_cast<Eigen::Index>(a.size()) != action_dim)
        throw InvalidArgument("heterogeneous action sizes in batch");
      for (Eigen::Index j = 0; j < action_dim; ++j) b.actions(i, j) = a[static_cast<std::size_t>(j)];
    }
    b.reward_rates[i] = t.reward_rate;
    b.done[i] = t.done ? 1.0 : 0.0;
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw InvalidArgument("replay index out of range");
  return data_[(head_ + i) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (data_.empty()) throw ContractViolation("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  const auto idx = sample_indices(n, rng);
  std::vector<const Transition*> items;
  items.reserve(n);
  for (std::size_t i : idx) items.push_back(&data_[i]);
  return make_batch(items);
}

}  // namespace dau
