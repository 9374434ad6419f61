#include <doctest.h>

#include <cmath>

#include "dau/errors.hpp"
#include "dau/replay.hpp"

using namespace dau;

namespace {
Transition tr(double x) { return Transition{{x}, Action::discrete(0), x, false, {x + 1.0}}; }
}  // namespace

TEST_SUITE("replay") {
  TEST_CASE("fifo overwrite") {
    ReplayBuffer buf(3);
    for (int i = 0; i < 4; ++i) buf.push(tr(i));
    CHECK(buf.size() == 3);
    CHECK(buf.at(0).state[0] == 1.0);
    CHECK(buf.at(2).state[0] == 3.0);
    CHECK_THROWS(buf.at(3));
  }

  TEST_CASE("sampling") {
    ReplayBuffer empty(4);
    Rng rng(1);
    CHECK_THROWS_AS(empty.sample(2, rng), ContractViolation);

    ReplayBuffer one(4);
    one.push(tr(5.0));
    const Batch b = one.sample(6, rng);
    CHECK(b.size() == 6);
    CHECK((b.states.array() == 5.0).all());
    CHECK((b.next_states.array() == 6.0).all());
    CHECK(b.action_index.size() == 6);
  }

  TEST_CASE("uniform sampling frequencies") {
    const int k = 10, draws = 100000;
    ReplayBuffer buf(k);
    for (int i = 0; i < k; ++i) buf.push(tr(i));
    Rng rng(99);
    std::vector<int> counts(k, 0);
    for (auto i : buf.sample_indices(draws, rng)) ++counts[i];
    const double p = 1.0 / k;
    const double sigma = std::sqrt(draws * p * (1.0 - p));
    for (int c : counts) CHECK(std::abs(c - draws * p) < 3.0 * sigma);
  }

  TEST_CASE("continuous batches") {
    Transition t{{1.0, 2.0}, Action::continuous({0.5}), -1.0, true, {3.0, 4.0}};
    const Batch b = make_batch({&t, &t});
    CHECK(b.actions.cols() == 1);
    CHECK(b.actions(1, 0) == 0.5);
    CHECK(b.done(0) == 1.0);
    CHECK(b.reward_rates(1) == -1.0);
    CHECK(b.action_index.empty());
  }
}
