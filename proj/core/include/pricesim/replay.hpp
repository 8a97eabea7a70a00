#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pricesim/market.hpp"

namespace pricesim {

// One sampled action and its outcome. behavior_log_prob is the log-density of
// raw_action under the policy parameters that produced it, recorded at
// sampling time; the PPO ratio is taken against it.
struct Experience {
    double raw_action = 0.0;
    double price = 0.0;
    double reward = 0.0;
    double behavior_log_prob = 0.0;
    std::int64_t step = 0;

    bool operator==(const Experience&) const = default;
};

// Bounded experience buffer, oldest first. Inserting into a full buffer
// evicts the oldest entry, so the length never exceeds capacity regardless of
// how observe and update calls interleave. Whether updates also clear it is
// the update rule's business, not the buffer's.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(const Experience& experience);
    void clear();

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }
    bool full() const { return entries_.size() == capacity_; }

    const std::vector<Experience>& entries() const { return entries_; }

private:
    std::vector<Experience> entries_;
    std::size_t capacity_;
};

}  // namespace pricesim
