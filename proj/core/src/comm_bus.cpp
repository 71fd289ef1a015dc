#include "uesr/comm_bus.hpp"

#include <stdexcept>

namespace uesr {

bool MessageVector::valid() const {
  if (static_cast<int>(values.size()) != split.total()) return false;
  for (int k = 0; k < split.total(); ++k) {
    const double v = values[static_cast<std::size_t>(k)];
    if (k < split.reward_len) {
      if (v != 0.0 && v != 1.0) return false;
    } else if (!(v >= 0.0 && v <= 1.0)) {
      return false;
    }
  }
  return true;
}

MessageBuffer::MessageBuffer(int n_agents, SchemeSplit split)
    : n_agents_(n_agents), split_(split) {
  if (n_agents <= 0 || split.reward_len < 0 || split.ues_len < 0) {
    throw std::invalid_argument("invalid message buffer shape");
  }
}

void MessageBuffer::publish(std::int64_t t,
                            std::span<const MessageVector> messages) {
  if (t != next_) {
    throw std::logic_error("messages must be published in step order");
  }
  if (static_cast<int>(messages.size()) != n_agents_) {
    throw std::invalid_argument("one message per agent required");
  }
  for (const MessageVector& m : messages) {
    if (m.split != split_ || !m.valid()) {
      throw std::invalid_argument("malformed message");
    }
  }
  ring_[static_cast<std::size_t>(t % 3)].assign(messages.begin(), messages.end());
  ++next_;
}

const std::vector<MessageVector>* MessageBuffer::slice(std::int64_t t) const {
  if (t < 0) return nullptr;
  if (t >= next_ || t < next_ - 3) {
    throw std::out_of_range("message slice not held by the buffer");
  }
  return &ring_[static_cast<std::size_t>(t % 3)];
}

std::vector<double> MessageBuffer::policy_inbox(int agent, std::int64_t t) const {
  (void)agent;  // every agent receives the full broadcast
  const std::size_t k = static_cast<std::size_t>(message_length());
  std::vector<double> out(static_cast<std::size_t>(n_agents_) * k, 0.0);
  if (const auto* s = slice(t - 1)) {
    for (std::size_t j = 0; j < s->size(); ++j) {
      std::copy((*s)[j].values.begin(), (*s)[j].values.end(),
                out.begin() + static_cast<std::ptrdiff_t>(j * k));
    }
  }
  return out;
}

std::vector<double> MessageBuffer::uem_inbox(int agent, std::int64_t t) const {
  const std::size_t k = static_cast<std::size_t>(message_length());
  std::vector<double> out(static_cast<std::size_t>(n_agents_ - 1) * k, 0.0);
  if (const auto* s = slice(t - 2)) {
    std::size_t pos = 0;
    for (std::size_t j = 0; j < s->size(); ++j) {
      if (static_cast<int>(j) == agent) continue;
      std::copy((*s)[j].values.begin(), (*s)[j].values.end(),
                out.begin() + static_cast<std::ptrdiff_t>(pos * k));
      ++pos;
    }
  }
  return out;
}

void MessageBuffer::clear() {
  next_ = 0;
  for (auto& s : ring_) s.clear();
}

}  // namespace uesr
