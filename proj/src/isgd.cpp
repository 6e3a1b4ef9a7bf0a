#include "streamrec/isgd.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace streamrec {

namespace {

double dot(const double* a, const double* b, std::size_t k) {
    double sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
        sum += a[f] * b[f];
    }
    return sum;
}

constexpr double kInitStddev = 0.1;

}  // namespace

FactorModel::FactorModel(FactorParams params) : params_(params) {
    if (params_.k < 1) {
        throw ConfigError("k must be >= 1");
    }
}

void FactorModel::ensure_vectors(Rng& rng, UserId user, ItemId item, Timestamp now) {
    if (!users_.contains(user)) {
        UserState state;
        state.factors.resize(params_.k);
        for (auto& v : state.factors) {
            v = rng.normal(0.0, kInitStddev);
        }
        state.usage.last_seen = now;
        users_.emplace(user, std::move(state));
    }
    if (!item_slot_.contains(item)) {
        const auto slot = add_item(item, now);
        double* values = item_ptr(slot);
        for (std::size_t f = 0; f < params_.k; ++f) {
            values[f] = rng.normal(0.0, kInitStddev);
        }
    }
}

std::size_t FactorModel::add_item(ItemId item, Timestamp now) {
    const std::size_t slot = slot_item_.size();
    item_slot_.emplace(item, slot);
    slot_item_.push_back(item);
    item_factors_.resize(item_factors_.size() + params_.k, 0.0);
    item_usage_.push_back(Usage{0, now});
    return slot;
}

double FactorModel::predict(UserId user, ItemId item) const {
    const auto u = users_.find(user);
    if (u == users_.end()) {
        throw UnknownEntity("unknown user " + std::to_string(user));
    }
    const auto i = item_slot_.find(item);
    if (i == item_slot_.end()) {
        throw UnknownEntity("unknown item " + std::to_string(item));
    }
    return dot(u->second.factors.data(), item_ptr(i->second), params_.k);
}

void FactorModel::train(UserId user, ItemId item, Timestamp now) {
    auto u = users_.find(user);
    auto i = item_slot_.find(item);
    if (u == users_.end() || i == item_slot_.end()) {
        throw UnknownEntity("train on missing vectors for user " + std::to_string(user) +
                            ", item " + std::to_string(item));
    }
    double* uf = u->second.factors.data();
    double* itf = item_ptr(i->second);
    const std::size_t k = params_.k;
    const double eta = params_.eta;
    const double lambda = params_.lambda;

    const double err = 1.0 - dot(uf, itf, k);
    if (params_.sequential_update) {
        for (std::size_t f = 0; f < k; ++f) {
            uf[f] = uf[f] + eta * (err * itf[f] - lambda * uf[f]);
        }
        for (std::size_t f = 0; f < k; ++f) {
            itf[f] = itf[f] + eta * (err * uf[f] - lambda * itf[f]);
        }
    } else {
        for (std::size_t f = 0; f < k; ++f) {
            const double u_old = uf[f];
            const double i_old = itf[f];
            uf[f] = u_old + eta * (err * i_old - lambda * u_old);
            itf[f] = i_old + eta * (err * u_old - lambda * i_old);
        }
    }

    u->second.seen.insert(item);
    u->second.usage.touch(now);
    item_usage_[i->second].touch(now);
}

std::vector<ItemId> FactorModel::recommend(UserId user, std::size_t n) const {
    const auto u = users_.find(user);
    if (u == users_.end() || n == 0) {
        return {};
    }
    const double* uf = u->second.factors.data();
    const auto& seen = u->second.seen;

    std::vector<std::pair<double, ItemId>> scored;
    scored.reserve(slot_item_.size());
    for (std::size_t slot = 0; slot < slot_item_.size(); ++slot) {
        const ItemId item = slot_item_[slot];
        if (seen.contains(item)) {
            continue;
        }
        double score = dot(uf, item_ptr(slot), params_.k);
        if (params_.rank_by_distance_to_one) {
            score = -std::abs(1.0 - score);
        }
        scored.emplace_back(score, item);
    }
    const auto better = [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    };
    const std::size_t take = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), better);

    std::vector<ItemId> out;
    out.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
        out.push_back(scored[r].second);
    }
    return out;
}

std::span<const double> FactorModel::user_vector(UserId user) const {
    const auto u = users_.find(user);
    if (u == users_.end()) {
        throw UnknownEntity("unknown user " + std::to_string(user));
    }
    return u->second.factors;
}

std::span<const double> FactorModel::item_vector(ItemId item) const {
    const auto i = item_slot_.find(item);
    if (i == item_slot_.end()) {
        throw UnknownEntity("unknown item " + std::to_string(item));
    }
    return {item_ptr(i->second), params_.k};
}

const FactorModel::UserState* FactorModel::user(UserId user) const {
    const auto u = users_.find(user);
    return u == users_.end() ? nullptr : &u->second;
}

const Usage* FactorModel::item_usage(ItemId item) const {
    const auto i = item_slot_.find(item);
    return i == item_slot_.end() ? nullptr : &item_usage_[i->second];
}

void FactorModel::set_user_vector(UserId user, std::span<const double> values, Timestamp now) {
    if (values.size() != params_.k) {
        throw std::invalid_argument("vector length must equal k");
    }
    auto& state = users_[user];
    if (state.factors.empty()) {
        state.usage.last_seen = now;
    }
    state.factors.assign(values.begin(), values.end());
}

void FactorModel::set_item_vector(ItemId item, std::span<const double> values, Timestamp now) {
    if (values.size() != params_.k) {
        throw std::invalid_argument("vector length must equal k");
    }
    auto it = item_slot_.find(item);
    const std::size_t slot = it == item_slot_.end() ? add_item(item, now) : it->second;
    std::copy(values.begin(), values.end(), item_ptr(slot));
}

std::uint64_t FactorModel::erase_users(std::span<const UserId> users) {
    std::uint64_t erased = 0;
    for (const auto user : users) {
        erased += users_.erase(user);
    }
    return erased;
}

std::uint64_t FactorModel::erase_items(std::span<const ItemId> items) {
    std::unordered_set<ItemId> gone;
    for (const auto item : items) {
        const auto it = item_slot_.find(item);
        if (it == item_slot_.end()) {
            continue;
        }
        const std::size_t slot = it->second;
        const std::size_t last = slot_item_.size() - 1;
        if (slot != last) {
            // Move the last slot into the hole; values are copied verbatim.
            std::copy_n(item_ptr(last), params_.k, item_ptr(slot));
            slot_item_[slot] = slot_item_[last];
            item_usage_[slot] = item_usage_[last];
            item_slot_[slot_item_[slot]] = slot;
        }
        slot_item_.pop_back();
        item_usage_.pop_back();
        item_factors_.resize(slot_item_.size() * params_.k);
        item_slot_.erase(item);
        gone.insert(item);
    }
    if (!gone.empty()) {
        for (auto& [id, state] : users_) {
            std::erase_if(state.seen, [&](ItemId i) { return gone.contains(i); });
        }
    }
    return gone.size();
}

}  // namespace streamrec
