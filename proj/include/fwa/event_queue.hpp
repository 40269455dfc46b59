#pragma once

#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "fwa/domain.hpp"
#include "fwa/errors.hpp"

namespace fwa {

/// Current time and the global tie-break counter. Shared by every event
/// queue that takes part in one simulation world so that (time, seq) keys
/// stay strictly increasing across phases.
struct SimClock {
  TimeUs now_us = 0;
  std::uint64_t next_seq = 0;
};

template <class Payload>
struct SimEvent {
  TimeUs time_us = 0;
  std::uint64_t seq = 0;
  Payload payload;
};

/// Min-queue on (time, seq).
template <class Payload>
class EventQueue {
 public:
  explicit EventQueue(SimClock& clock) : clock_(&clock) {}

  std::uint64_t schedule(TimeUs at_us, Payload payload) {
    if (at_us < clock_->now_us) {
      throw EngineAssertion("event scheduled in the past: t=" + std::to_string(at_us) +
                            " now=" + std::to_string(clock_->now_us));
    }
    const std::uint64_t seq = clock_->next_seq++;
    heap_.push(SimEvent<Payload>{at_us, seq, std::move(payload)});
    return seq;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  TimeUs next_time() const { return heap_.top().time_us; }

  /// Removes the earliest event and advances the clock to it.
  SimEvent<Payload> pop() {
    SimEvent<Payload> event = heap_.top();
    heap_.pop();
    clock_->now_us = event.time_us;
    return event;
  }

  TimeUs now() const { return clock_->now_us; }
  SimClock& clock() { return *clock_; }

 private:
  struct Later {
    bool operator()(const SimEvent<Payload>& a, const SimEvent<Payload>& b) const {
      return a.time_us != b.time_us ? a.time_us > b.time_us : a.seq > b.seq;
    }
  };

  SimClock* clock_;
  std::priority_queue<SimEvent<Payload>, std::vector<SimEvent<Payload>>, Later> heap_;
};

}  // namespace fwa
