#pragma once

#include <cstdint>
#include <vector>

#include "streamrec/core.hpp"

namespace streamrec {

/// Splitting-and-replication geometry. Workers sit on an n_i x n_u grid
/// (n_u = n_i + w): the row is picked by the item hash, the column by the
/// user hash. Each item partition is therefore replicated across n_u
/// workers and each user partition across n_i workers, while any single
/// (user, item) pair lands on exactly one worker.
class RoutingPlan {
public:
    RoutingPlan(std::uint32_t n_i, std::uint32_t w);
    explicit RoutingPlan(const EngineConfig& config) : RoutingPlan(config.n_i, config.w) {}

    std::uint32_t item_splits() const { return n_i_; }
    std::uint32_t user_splits() const { return n_u_; }
    std::uint32_t workers() const { return n_c_; }

    std::uint32_t item_hash(ItemId item) const { return static_cast<std::uint32_t>(item % n_i_); }
    std::uint32_t user_hash(UserId user) const { return static_cast<std::uint32_t>(user % n_u_); }

    WorkerId route(UserId user, ItemId item) const {
        return item_hash(item) * n_u_ + user_hash(user);
    }

    /// Row of workers that may hold `item`, ascending.
    std::vector<WorkerId> item_replica_set(ItemId item) const;
    /// Column of workers that may hold `user`, ascending.
    std::vector<WorkerId> user_replica_set(UserId user) const;

private:
    std::uint32_t n_i_;
    std::uint32_t n_u_;
    std::uint32_t n_c_;
};

}  // namespace streamrec
