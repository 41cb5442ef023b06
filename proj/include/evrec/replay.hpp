#pragma once

#include <algorithm>
#include <memory>
#include <vector>

#include "evrec/common.hpp"
#include "evrec/features.hpp"
#include "evrec/policy.hpp"
#include "evrec/rng.hpp"

namespace evrec {

// One decision and its consequences. The reward is the discounted sum of the
// routed user's events (arrival bonus, waiting and driving penalties); the
// next state is the following decision of the same episode. Decisions are
// shared between consecutive transitions, hence the shared_ptr.
struct Transition {
    std::shared_ptr<const Decision> state;
    std::vector<Option> options;
    int action = -1;  // index into options
    double reward = 0.0;
    std::shared_ptr<const Decision> next;  // null: last decision of the episode
    std::vector<Option> next_options;

    bool terminal() const { return next == nullptr; }
};

// Fixed-capacity ring; once full, each push overwrites the oldest entry.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : cap_(capacity) {
        if (capacity < 1) throw ConfigError("replay buffer: capacity must be >= 1");
    }

    std::size_t size() const { return ring_.size(); }
    std::size_t capacity() const { return cap_; }
    long evictions() const { return evictions_; }
    bool ready(std::size_t batch) const { return size() >= batch; }
    const Transition& at(std::size_t i) const { return ring_.at(i); }

    void push(Transition t) {
        if (ring_.size() < cap_) {
            ring_.push_back(std::move(t));
            return;
        }
        ring_[head_] = std::move(t);
        head_ = (head_ + 1) % cap_;
        ++evictions_;
    }

    // Uniform without replacement (Floyd's algorithm), order shuffled.
    std::vector<const Transition*> sample(std::size_t batch, RngStream& rng) const {
        if (batch < 1) throw ConfigError("replay buffer: batch must be >= 1");
        if (batch > size()) throw ConfigError("replay buffer: batch exceeds buffer size");
        std::vector<std::size_t> idx;
        idx.reserve(batch);
        for (std::size_t j = size() - batch; j < size(); ++j) {
            const std::size_t pick = rng.next_below(j + 1);
            if (std::find(idx.begin(), idx.end(), pick) != idx.end())
                idx.push_back(j);
            else
                idx.push_back(pick);
        }
        rng.shuffle(idx);
        std::vector<const Transition*> out;
        out.reserve(batch);
        for (std::size_t i : idx) out.push_back(&ring_[i]);
        return out;
    }

  private:
    std::size_t cap_;
    std::size_t head_ = 0;  // oldest entry once the ring is full
    long evictions_ = 0;
    std::vector<Transition> ring_;
};

}  // namespace evrec
