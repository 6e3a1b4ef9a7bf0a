#include "streamrec/router.hpp"

namespace streamrec {

RoutingPlan::RoutingPlan(std::uint32_t n_i, std::uint32_t w) : n_i_(n_i), n_u_(n_i + w) {
    if (n_i < 1) {
        throw ConfigError("ni must be >= 1");
    }
    n_c_ = static_cast<std::uint32_t>(derive_cluster_size(n_i, w));
}

std::vector<WorkerId> RoutingPlan::item_replica_set(ItemId item) const {
    std::vector<WorkerId> row;
    row.reserve(n_u_);
    const WorkerId base = item_hash(item) * n_u_;
    for (std::uint32_t x = 0; x < n_u_; ++x) {
        row.push_back(base + x);
    }
    return row;
}

std::vector<WorkerId> RoutingPlan::user_replica_set(UserId user) const {
    std::vector<WorkerId> column;
    column.reserve(n_i_);
    const WorkerId base = user_hash(user);
    for (std::uint32_t y = 0; y < n_i_; ++y) {
        column.push_back(base + y * n_u_);
    }
    return column;
}

}  // namespace streamrec
