#pragma once

#include "linesim/error.hpp"
#include "linesim/kernel/clock.hpp"

#include <cstdint>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace linesim {

// Min-queue ordered by (due_tick, sequence). The sequence number is issued at
// insertion, so events due at the same tick run in insertion order.
template <typename Payload>
class EventQueue {
public:
    struct Entry {
        Tick due;
        std::uint64_t seq;
        Payload payload;
    };

    std::uint64_t schedule(Tick now, Tick due, Payload payload) {
        if (due < now) {
            throw Error(ErrorKind::PastTick,
                        "due " + std::to_string(due) + " < now " + std::to_string(now));
        }
        const auto seq = next_seq_++;
        heap_.push(Entry{due, seq, std::move(payload)});
        return seq;
    }

    bool has_due(Tick now) const { return !heap_.empty() && heap_.top().due <= now; }

    // Pops the next entry due at or before `now`. Precondition: has_due(now).
    Entry pop() {
        Entry e = std::move(const_cast<Entry&>(heap_.top()));
        heap_.pop();
        return e;
    }

    std::size_t size() const noexcept { return heap_.size(); }
    bool empty() const noexcept { return heap_.empty(); }
    std::uint64_t last_issued() const noexcept { return next_seq_ - 1; }

private:
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const noexcept {
            if (a.due != b.due) return a.due > b.due;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_seq_ = 1;
};

}  // namespace linesim
