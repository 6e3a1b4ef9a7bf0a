#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "streamrec/core.hpp"
#include "streamrec/usage.hpp"

namespace streamrec {

class UnknownEntity : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

struct FactorParams {
    std::uint32_t k = 10;
    double eta = 0.05;
    double lambda = 0.01;
    /// Literal pseudocode order: the item update sees the already-updated
    /// user vector.
    bool sequential_update = false;
    /// Rank candidates by |1 - score| ascending instead of score descending.
    bool rank_by_distance_to_one = false;

    static FactorParams from(const EngineConfig& config) {
        return {config.k, config.eta, config.lambda, config.sequential_update,
                config.rank_by_distance_to_one};
    }
};

/// Per-worker incremental matrix factorization state for positive-only
/// feedback. Item vectors live in one dense buffer so that scoring all
/// candidates is a linear scan.
class FactorModel {
public:
    struct UserState {
        std::vector<double> factors;
        std::unordered_set<ItemId> seen;
        Usage usage;
    };

    explicit FactorModel(FactorParams params);

    const FactorParams& params() const { return params_; }

    /// Creates missing vectors with N(0, 0.1) entries (standard deviation
    /// 0.1). The user vector is drawn before the item vector. New entities
    /// start with zero frequency; `train` counts the creating event.
    void ensure_vectors(Rng& rng, UserId user, ItemId item, Timestamp now);

    double predict(UserId user, ItemId item) const;

    /// One step on err = 1 - U.I, then bookkeeping for `seen` and usage.
    /// Both vectors must exist.
    void train(UserId user, ItemId item, Timestamp now);

    /// Top-N unseen worker-local items, score descending, ties by id.
    std::vector<ItemId> recommend(UserId user, std::size_t n) const;

    bool has_user(UserId user) const { return users_.contains(user); }
    bool has_item(ItemId item) const { return item_slot_.contains(item); }
    std::span<const double> user_vector(UserId user) const;
    std::span<const double> item_vector(ItemId item) const;
    const UserState* user(UserId user) const;
    const Usage* item_usage(ItemId item) const;

    /// Overwrites (or creates) vectors; used to set up exact test states.
    void set_user_vector(UserId user, std::span<const double> values, Timestamp now = 0);
    void set_item_vector(ItemId item, std::span<const double> values, Timestamp now = 0);

    const std::unordered_map<UserId, UserState>& users() const { return users_; }
    std::span<const ItemId> items() const { return slot_item_; }
    StateCounts counts() const { return {users_.size(), slot_item_.size(), 0}; }

    /// Removes users with their seen sets and usage.
    std::uint64_t erase_users(std::span<const UserId> users);
    /// Removes items and purges them from every seen set.
    std::uint64_t erase_items(std::span<const ItemId> items);

private:
    std::size_t add_item(ItemId item, Timestamp now);
    double* item_ptr(std::size_t slot) { return item_factors_.data() + slot * params_.k; }
    const double* item_ptr(std::size_t slot) const {
        return item_factors_.data() + slot * params_.k;
    }

    FactorParams params_;
    std::unordered_map<UserId, UserState> users_;
    std::unordered_map<ItemId, std::size_t> item_slot_;
    std::vector<ItemId> slot_item_;
    std::vector<double> item_factors_;
    std::vector<Usage> item_usage_;
};

/// Prequential adapter: one worker's ISGD model plus its private generator.
class IsgdLearner {
public:
    IsgdLearner(FactorParams params, Rng rng) : model_(params), rng_(std::move(rng)) {}

    std::vector<ItemId> recommend(UserId user, std::size_t n) const {
        return model_.recommend(user, n);
    }
    void learn(const RatingEvent& event) {
        model_.ensure_vectors(rng_, event.user_id, event.item_id, event.timestamp);
        model_.train(event.user_id, event.item_id, event.timestamp);
    }

    FactorModel& model() { return model_; }
    const FactorModel& model() const { return model_; }

private:
    FactorModel model_;
    Rng rng_;
};

}  // namespace streamrec
