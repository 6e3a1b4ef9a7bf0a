#pragma once

#include <cstdint>

#include "streamrec/core.hpp"
#include "streamrec/cosine.hpp"
#include "streamrec/isgd.hpp"

namespace streamrec {

struct SweepReport {
    std::uint64_t users_evicted = 0;
    std::uint64_t items_evicted = 0;
    std::uint64_t pairs_evicted = 0;

    friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

/// LFU fires every `lfu_trigger_count` events (inclusive), LRU once
/// `lru_trigger_interval` event-time seconds have passed since the last
/// sweep, NONE never.
bool should_sweep(const ForgettingPolicy& policy, std::uint64_t events_since_last,
                  Timestamp event_time_now, Timestamp last_sweep_time);

/// LFU evicts entities with frequency below the threshold; LRU evicts
/// entities idle for longer than the max age. Survivors are not touched.
SweepReport sweep(const ForgettingPolicy& policy, FactorModel& model, Timestamp event_time_now);
SweepReport sweep(const ForgettingPolicy& policy, SimilarityModel& model,
                  Timestamp event_time_now);

/// Retention predicates a sweep must leave behind.
bool user_retained(const ForgettingPolicy& policy, const Usage& usage, Timestamp now);
bool item_retained(const ForgettingPolicy& policy, const Usage& usage, Timestamp now);

}  // namespace streamrec
