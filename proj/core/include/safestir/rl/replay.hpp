#pragma once

#include <vector>

#include "safestir/errors.hpp"
#include "safestir/rng.hpp"

namespace safestir::rl {

struct Transition {
    std::vector<double> state;
    std::vector<double> action;
    std::vector<double> next_state;
    double reward = 0.0;
    bool terminal = false;
};

/// Fixed-capacity ring with strict FIFO eviction.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {
        SAFESTIR_REQUIRE(capacity > 0, "replay capacity must be > 0");
    }

    void insert(Transition t) {
        if (ring_.size() < capacity_) {
            ring_.push_back(std::move(t));
        } else {
            ring_[cursor_] = std::move(t);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    size_t size() const { return ring_.size(); }
    size_t capacity() const { return capacity_; }

    /// i-th oldest surviving transition (0 = oldest).
    const Transition& oldest(size_t i) const {
        SAFESTIR_REQUIRE(i < ring_.size(), "replay index out of range");
        if (ring_.size() < capacity_) return ring_[i];
        return ring_[(cursor_ + i) % capacity_];
    }

    /// Raw slot access (sampling does not care about age order).
    const Transition& at(size_t i) const { return ring_[i]; }

    std::vector<size_t> sample_indices(size_t batch, Rng& rng) const {
        SAFESTIR_REQUIRE(ring_.size() >= batch, "replay smaller than batch");
        std::vector<size_t> idx(batch);
        for (auto& i : idx) i = rng.uniform_int(ring_.size());
        return idx;
    }

private:
    size_t capacity_;
    size_t cursor_ = 0;
    std::vector<Transition> ring_;
};

}  // namespace safestir::rl
