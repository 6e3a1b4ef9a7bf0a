#include "streamrec/forgetting.hpp"

#include <algorithm>
#include <vector>

namespace streamrec {

namespace {

bool retained(const ForgettingPolicy& policy, const Usage& usage, Timestamp now,
              std::uint64_t min_frequency, std::int64_t max_age) {
    switch (policy.kind) {
        case ForgettingKind::LFU: return usage.frequency >= min_frequency;
        case ForgettingKind::LRU: return now - usage.last_seen <= max_age;
        case ForgettingKind::NONE: break;
    }
    return true;
}

// Victims are sorted so eviction order (and thus the dense-slot layout of
// the factor model) does not depend on hash-map iteration order.
template <typename Map, typename UsageOf>
std::vector<std::uint64_t> collect_users(const ForgettingPolicy& policy, const Map& users,
                                         Timestamp now, UsageOf usage_of) {
    std::vector<std::uint64_t> victims;
    for (const auto& [id, state] : users) {
        if (!user_retained(policy, usage_of(state), now)) {
            victims.push_back(id);
        }
    }
    std::sort(victims.begin(), victims.end());
    return victims;
}

}  // namespace

bool should_sweep(const ForgettingPolicy& policy, std::uint64_t events_since_last,
                  Timestamp event_time_now, Timestamp last_sweep_time) {
    switch (policy.kind) {
        case ForgettingKind::LFU: return events_since_last >= policy.lfu_trigger_count;
        case ForgettingKind::LRU:
            return event_time_now - last_sweep_time >= policy.lru_trigger_interval;
        case ForgettingKind::NONE: break;
    }
    return false;
}

bool user_retained(const ForgettingPolicy& policy, const Usage& usage, Timestamp now) {
    return retained(policy, usage, now, policy.user_min_frequency(), policy.user_max_age());
}

bool item_retained(const ForgettingPolicy& policy, const Usage& usage, Timestamp now) {
    return retained(policy, usage, now, policy.item_min_frequency(), policy.item_max_age());
}

SweepReport sweep(const ForgettingPolicy& policy, FactorModel& model, Timestamp now) {
    if (policy.kind == ForgettingKind::NONE) {
        return {};
    }
    const auto users = collect_users(policy, model.users(), now,
                                     [](const FactorModel::UserState& s) { return s.usage; });
    std::vector<ItemId> items;
    for (const ItemId item : model.items()) {
        if (!item_retained(policy, *model.item_usage(item), now)) {
            items.push_back(item);
        }
    }
    std::sort(items.begin(), items.end());

    SweepReport report;
    report.users_evicted = model.erase_users(users);
    report.items_evicted = model.erase_items(items);
    return report;
}

SweepReport sweep(const ForgettingPolicy& policy, SimilarityModel& model, Timestamp now) {
    if (policy.kind == ForgettingKind::NONE) {
        return {};
    }
    const auto users = collect_users(
        policy, model.users(), now,
        [](const SimilarityModel::UserHistory& h) { return h.usage; });
    std::vector<ItemId> items;
    for (const auto& [id, state] : model.items()) {
        if (!item_retained(policy, state.usage, now)) {
            items.push_back(id);
        }
    }
    std::sort(items.begin(), items.end());

    SweepReport report;
    report.users_evicted = model.erase_users(users);
    const auto [items_erased, pairs_erased] = model.erase_items(items);
    report.items_evicted = items_erased;
    report.pairs_evicted = pairs_erased;
    return report;
}

}  // namespace streamrec
