#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace uesr {

inline constexpr int kDefaultMessageLength = 10;

// Lengths of the reward-driven (binary) and unexpectedness-encoded parts of a
// message; the reward part comes first.
struct SchemeSplit {
  int reward_len = 0;
  int ues_len = 0;

  int total() const { return reward_len + ues_len; }
  bool operator==(const SchemeSplit&) const = default;
};

struct MessageVector {
  std::vector<double> values;
  SchemeSplit split;

  // Reward part in {0,1}, UES part in [0,1], length matches the split.
  bool valid() const;
  bool operator==(const MessageVector&) const = default;
};

// Holds the last three broadcast time slices. A message published at step t
// is read by every policy at t+1 and by other agents' UEM at t+2.
class MessageBuffer {
 public:
  MessageBuffer(int n_agents, SchemeSplit split);

  // Slice t must be the next expected step; throws std::logic_error otherwise
  // and std::invalid_argument for malformed messages.
  void publish(std::int64_t t, std::span<const MessageVector> messages);

  // All agents' messages from t-1 (own included), agent order; length N*K.
  std::vector<double> policy_inbox(int agent, std::int64_t t) const;
  // Other agents' messages from t-2, agent order; length (N-1)*K.
  std::vector<double> uem_inbox(int agent, std::int64_t t) const;

  // Forget all slices; the next publish must be t = 0.
  void clear();

  std::int64_t next_step() const { return next_; }
  int n_agents() const { return n_agents_; }
  SchemeSplit split() const { return split_; }
  int message_length() const { return split_.total(); }

 private:
  // Slice for step t; nullptr if t < 0, std::out_of_range if not held.
  const std::vector<MessageVector>* slice(std::int64_t t) const;

  int n_agents_;
  SchemeSplit split_;
  std::int64_t next_ = 0;
  std::array<std::vector<MessageVector>, 3> ring_;
};

}  // namespace uesr
