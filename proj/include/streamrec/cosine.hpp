#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "streamrec/core.hpp"
#include "streamrec/usage.hpp"

namespace streamrec {

/// Unordered item pair, stored as (smaller id, larger id).
struct ItemPair {
    ItemId lo;
    ItemId hi;

    static ItemPair of(ItemId a, ItemId b) { return a < b ? ItemPair{a, b} : ItemPair{b, a}; }
    friend bool operator==(const ItemPair&, const ItemPair&) = default;
};

/// Per-worker incremental item-item cosine state over implicit feedback:
///
///   sim(p, q) = sum_u min(r_up, r_uq) / (sqrt(sum_u r_up) * sqrt(sum_u r_uq))
///
/// Each new rating only adds to the numerators of pairs it forms with the
/// user's earlier items and to its own item's denominator sum.
class SimilarityModel {
public:
    /// One stored pair: canonical key and sum_u min(r_up, r_uq).
    struct PairRecord {
        ItemPair key;
        double min_sum = 0.0;
        bool live = false;
    };
    struct Partner {
        ItemId id;
        /// Dense slot of `id`, used to index per-call scratch space.
        std::uint32_t slot;
        /// Index of the shared record in the pair table.
        std::uint32_t pair;
    };
    struct ItemState {
        std::uint32_t slot = 0;
        double rating_sum = 0.0;
        /// sqrt(rating_sum), kept in step with it.
        double norm = 0.0;
        /// Items sharing at least one rater with this one.
        std::vector<Partner> partners;
        std::unordered_map<ItemId, std::uint32_t> partner_pos;
        Usage usage;
    };
    struct UserHistory {
        std::vector<std::pair<ItemId, double>> items;
        std::unordered_set<ItemId> index;
        Usage usage;
    };

    /// Repeated (user, item) events only refresh usage metadata.
    void update(UserId user, ItemId item, double rating, Timestamp now);

    /// 0 when the pair or either item is unknown.
    double similarity(ItemId p, ItemId q) const;

    /// Weighted average of the user's ratings over the `neighbors_k` rated
    /// items most similar to `p`; 0 when none has positive similarity.
    double estimate(UserId user, ItemId p, std::size_t neighbors_k) const;

    /// Candidates are unrated worker-local items with at least one positive
    /// neighbor, ranked by the sum of their top-`neighbors_k` similarities
    /// to the user's rated items (descending, ties by id).
    std::vector<ItemId> recommend(UserId user, std::size_t n, std::size_t neighbors_k) const;

    const ItemState* item(ItemId item) const;
    const UserHistory* history(UserId user) const;
    /// Raw numerator sum_u min(r_up, r_uq); 0 when absent.
    double pair_min_sum(ItemId p, ItemId q) const;

    const std::unordered_map<ItemId, ItemState>& items() const { return items_; }
    const std::unordered_map<UserId, UserHistory>& users() const { return users_; }
    /// Every stored pair with its min-sum, ordered by (lo, hi).
    std::vector<std::pair<ItemPair, double>> pairs() const;
    std::uint64_t pair_count() const { return pair_count_; }
    const PairRecord& pair_record(std::uint32_t index) const { return pairs_.at(index); }
    StateCounts counts() const { return {users_.size(), items_.size(), pair_count_}; }

    /// Drops users and their histories. Item sums and pairs are kept.
    std::uint64_t erase_users(std::span<const UserId> users);
    /// Drops items, every pair containing them, and their history entries.
    /// Returns {items erased, pairs erased}.
    std::pair<std::uint64_t, std::uint64_t> erase_items(std::span<const ItemId> items);

    /// Test hook: adds `offset` to every value returned by `similarity`.
    void set_similarity_bias(double offset) { similarity_bias_ = offset; }

private:
    ItemState& add_item(ItemId item, Timestamp now);
    void add_to_pair(ItemId a, ItemState& sa, ItemId b, ItemState& sb, double m);
    static void drop_partner(ItemState& a, ItemId b);

    std::unordered_map<ItemId, ItemState> items_;
    std::unordered_map<UserId, UserHistory> users_;
    /// Item norms by slot; freed slots are recycled.
    std::vector<double> slot_norm_;
    std::vector<std::uint32_t> free_slots_;
    /// Pair table; both endpoints' partner entries point at the same record.
    std::vector<PairRecord> pairs_;
    std::vector<std::uint32_t> free_pairs_;
    /// recommend() scratch: candidate row per slot, reset after each call.
    mutable std::vector<std::uint32_t> scratch_row_;
    std::uint64_t pair_count_ = 0;
    double similarity_bias_ = 0.0;
};

class DicsLearner {
public:
    explicit DicsLearner(std::size_t neighbors_k) : neighbors_k_(neighbors_k) {}

    std::vector<ItemId> recommend(UserId user, std::size_t n) const {
        return model_.recommend(user, n, neighbors_k_);
    }
    void learn(const RatingEvent& event) {
        model_.update(event.user_id, event.item_id, event.rating, event.timestamp);
    }

    SimilarityModel& model() { return model_; }
    const SimilarityModel& model() const { return model_; }

private:
    SimilarityModel model_;
    std::size_t neighbors_k_;
};

}  // namespace streamrec
