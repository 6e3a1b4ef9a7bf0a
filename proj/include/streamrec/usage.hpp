#pragma once

#include <cstdint>

#include "streamrec/core.hpp"

namespace streamrec {

/// Access metadata consulted by the forgetting sweeps.
struct Usage {
    std::uint64_t frequency = 0;
    Timestamp last_seen = 0;

    void touch(Timestamp now) {
        ++frequency;
        last_seen = now;
    }
};

/// Entry counts of one worker's state.
struct StateCounts {
    std::uint64_t users = 0;
    std::uint64_t items = 0;
    std::uint64_t pairs = 0;

    friend bool operator==(const StateCounts&, const StateCounts&) = default;
};

}  // namespace streamrec
