#include "pricesim/replay.hpp"

#include "pricesim/errors.hpp"

namespace pricesim {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw ConfigError("replay buffer capacity must be positive");
    }
    entries_.reserve(capacity);
}

void ReplayBuffer::push(const Experience& experience) {
    entries_.push_back(experience);
    while (entries_.size() > capacity_) {
        entries_.erase(entries_.begin());
    }
}

void ReplayBuffer::clear() {
    entries_.clear();
}

}  // namespace pricesim
