#include <doctest.h>

#include <stdexcept>

#include "uesr/comm_bus.hpp"

using namespace uesr;

namespace {

// Message of agent i at step t carries a unique value pattern.
std::vector<MessageVector> slice_for(int n, SchemeSplit split, int t) {
  std::vector<MessageVector> out;
  for (int i = 0; i < n; ++i) {
    MessageVector m{std::vector<double>(static_cast<std::size_t>(split.total())), split};
    for (int k = 0; k < split.total(); ++k) {
      m.values[static_cast<std::size_t>(k)] =
          k < split.reward_len ? static_cast<double>((t + i + k) % 2)
                               : (t * 10 + i + 1) / 1000.0;
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_SUITE("comm_bus") {

TEST_CASE("message validity") {
  const SchemeSplit split{5, 5};
  MessageVector m{std::vector<double>(10, 0.5), split};
  CHECK_FALSE(m.valid());  // reward part must be binary
  for (int k = 0; k < 5; ++k) m.values[static_cast<std::size_t>(k)] = k % 2;
  CHECK(m.valid());
  m.values[7] = 1.5;
  CHECK_FALSE(m.valid());
  m.values.pop_back();
  CHECK_FALSE(m.valid());
}

TEST_CASE("zero inboxes before the first messages") {
  MessageBuffer buf(2, {10, 0});
  CHECK(buf.policy_inbox(0, 0) == std::vector<double>(20, 0.0));
  CHECK(buf.uem_inbox(0, 0) == std::vector<double>(10, 0.0));
  buf.publish(0, slice_for(2, {10, 0}, 0));
  CHECK(buf.uem_inbox(1, 1) == std::vector<double>(10, 0.0));
}

TEST_CASE("one-step and two-step delays") {
  const SchemeSplit split{5, 5};
  MessageBuffer buf(2, split);
  for (int t = 0; t < 6; ++t) {
    if (t >= 1) {
      const auto prev = slice_for(2, split, t - 1);
      auto expect = prev[0].values;
      expect.insert(expect.end(), prev[1].values.begin(), prev[1].values.end());
      CHECK(buf.policy_inbox(0, t) == expect);
      CHECK(buf.policy_inbox(1, t) == expect);
    }
    if (t >= 2) {
      const auto old = slice_for(2, split, t - 2);
      CHECK(buf.uem_inbox(0, t) == old[1].values);
      CHECK(buf.uem_inbox(1, t) == old[0].values);
    }
    buf.publish(t, slice_for(2, split, t));
  }
}

TEST_CASE("three agents: uem inbox skips the reader") {
  const SchemeSplit split{0, 2};
  MessageBuffer buf(3, split);
  for (int t = 0; t < 3; ++t) buf.publish(t, slice_for(3, split, t));
  const auto s1 = slice_for(3, split, 1);
  std::vector<double> expect = s1[0].values;
  expect.insert(expect.end(), s1[2].values.begin(), s1[2].values.end());
  CHECK(buf.uem_inbox(1, 3) == expect);
  CHECK(buf.policy_inbox(1, 3).size() == 6);
}

TEST_CASE("publishing contract") {
  const SchemeSplit split{10, 0};
  MessageBuffer buf(2, split);
  buf.publish(0, slice_for(2, split, 0));
  CHECK_THROWS_AS(buf.publish(0, slice_for(2, split, 0)), std::logic_error);
  CHECK_THROWS_AS(buf.publish(2, slice_for(2, split, 2)), std::logic_error);
  CHECK_THROWS_AS(buf.publish(1, slice_for(1, split, 1)), std::invalid_argument);
  auto bad = slice_for(2, split, 1);
  bad[0].values[0] = 0.3;
  CHECK_THROWS_AS(buf.publish(1, bad), std::invalid_argument);
  CHECK(buf.next_step() == 1);
}

TEST_CASE("old slices are dropped, clear restarts at zero") {
  const SchemeSplit split{0, 10};
  MessageBuffer buf(2, split);
  for (int t = 0; t < 5; ++t) buf.publish(t, slice_for(2, split, t));
  CHECK_NOTHROW(buf.uem_inbox(0, 4));
  CHECK_THROWS_AS(buf.policy_inbox(0, 2), std::out_of_range);  // slice 1 is gone
  CHECK_THROWS_AS(buf.policy_inbox(0, 7), std::out_of_range);  // slice 6 not published
  buf.clear();
  CHECK(buf.next_step() == 0);
  CHECK(buf.policy_inbox(0, 0) == std::vector<double>(20, 0.0));
  CHECK_NOTHROW(buf.publish(0, slice_for(2, split, 0)));
}

TEST_CASE("publishing does not alter message contents") {
  const SchemeSplit split{5, 5};
  MessageBuffer buf(2, split);
  const auto msgs = slice_for(2, split, 0);
  const auto copy = msgs;
  buf.publish(0, msgs);
  CHECK(msgs == copy);
}

}  // TEST_SUITE
