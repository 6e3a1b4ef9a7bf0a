#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "streamrec/router.hpp"

using namespace streamrec;

namespace {

std::set<WorkerId> as_set(const std::vector<WorkerId>& v) {
    return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("route examples") {
    const RoutingPlan single(1, 0);
    for (UserId u = 0; u < 20; ++u) {
        for (ItemId i = 0; i < 20; ++i) {
            REQUIRE(single.route(u, i) == 0);
        }
    }
    CHECK(RoutingPlan(2, 0).route(3, 1) == 3);
    CHECK(RoutingPlan(2, 1).route(4, 5) == 4);
}

TEST_CASE("replica set examples") {
    const RoutingPlan plan(2, 0);
    CHECK(plan.item_replica_set(0) == std::vector<WorkerId>{0, 1});
    CHECK(plan.item_replica_set(1) == std::vector<WorkerId>{2, 3});
    CHECK(RoutingPlan(1, 0).item_replica_set(7) == std::vector<WorkerId>{0});
    CHECK(plan.user_replica_set(0) == std::vector<WorkerId>{0, 2});
    CHECK(plan.user_replica_set(3) == std::vector<WorkerId>{1, 3});
    CHECK(RoutingPlan(1, 0).user_replica_set(9) == std::vector<WorkerId>{0});

    const RoutingPlan wide(2, 1);
    CHECK(wide.workers() == 6);
    CHECK(wide.item_replica_set(5) == std::vector<WorkerId>{3, 4, 5});
    CHECK(wide.user_replica_set(4) == std::vector<WorkerId>{1, 4});
}

TEST_CASE("invalid plan") {
    CHECK_THROWS_AS(RoutingPlan(0, 1), ConfigError);
}

TEST_CASE("exactly one worker per pair") {
    for (const std::uint32_t n_i : {1u, 2u, 3u, 4u, 6u}) {
        for (const std::uint32_t w : {0u, 1u, 2u}) {
            const RoutingPlan plan(n_i, w);
            for (UserId u = 0; u < 256; ++u) {
                const auto column = as_set(plan.user_replica_set(u));
                REQUIRE(column.size() == n_i);
                for (ItemId i = 0; i < 256; ++i) {
                    const auto row = as_set(plan.item_replica_set(i));
                    REQUIRE(row.size() == n_i + w);
                    std::vector<WorkerId> common;
                    std::set_intersection(row.begin(), row.end(), column.begin(), column.end(),
                                          std::back_inserter(common));
                    REQUIRE(common.size() == 1);
                    REQUIRE(plan.route(u, i) == common.front());
                }
            }
        }
    }
}

TEST_CASE("grid coverage") {
    for (const std::uint32_t n_i : {1u, 2u, 3u, 4u, 6u}) {
        for (const std::uint32_t w : {0u, 1u, 2u}) {
            const RoutingPlan plan(n_i, w);
            std::set<WorkerId> hit;
            for (UserId u = 0; u < plan.user_splits(); ++u) {
                for (ItemId i = 0; i < plan.item_splits(); ++i) {
                    hit.insert(plan.route(u, i));
                }
            }
            REQUIRE(hit.size() == plan.workers());
            REQUIRE(*hit.rbegin() == plan.workers() - 1);
        }
    }
}

TEST_CASE("route depends only on the residues") {
    const RoutingPlan plan(3, 2);
    Rng rng(17);
    for (int n = 0; n < 10000; ++n) {
        const UserId u = rng.below(1'000'000);
        const ItemId i = rng.below(1'000'000);
        REQUIRE(plan.route(u, i) == plan.route(u % 5, i % 3));
    }
}

TEST_CASE("uniform ids spread evenly over workers") {
    for (const auto& [n_i, w] : std::vector<std::pair<std::uint32_t, std::uint32_t>>{
             {1, 0}, {2, 0}, {2, 1}, {3, 0}, {4, 0}, {4, 2}, {6, 0}}) {
        const RoutingPlan plan(n_i, w);
        REQUIRE(plan.workers() <= 36);
        Rng rng(1000 + n_i * 10 + w);
        const std::uint64_t draws = 2'000'000;
        std::vector<std::uint64_t> counts(plan.workers(), 0);
        for (std::uint64_t n = 0; n < draws; ++n) {
            ++counts[plan.route(rng.below(1'000'000), rng.below(1'000'000))];
        }
        const double expected = static_cast<double>(draws) / plan.workers();
        for (const auto c : counts) {
            CHECK(std::abs(static_cast<double>(c) - expected) / expected <= 0.02);
        }
    }
}
