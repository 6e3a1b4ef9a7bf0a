#include "streamrec/cosine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace streamrec {

namespace {

/// Per-candidate buffers of the `k` largest values seen so far, stored
/// back to back.
class TopKTable {
public:
    explicit TopKTable(std::size_t k) : k_(k) {}

    std::uint32_t add() {
        values_.resize(values_.size() + k_);
        fill_.push_back(0);
        return static_cast<std::uint32_t>(fill_.size() - 1);
    }

    void push(std::uint32_t row, double value) {
        double* begin = values_.data() + static_cast<std::size_t>(row) * k_;
        auto& fill = fill_[row];
        if (fill < k_) {
            begin[fill++] = value;
            return;
        }
        double* smallest = std::min_element(begin, begin + k_);
        if (value > *smallest) {
            *smallest = value;
        }
    }

    /// Added in descending order so the result does not depend on the order
    /// the values arrived in.
    double sum(std::uint32_t row) {
        double* begin = values_.data() + static_cast<std::size_t>(row) * k_;
        double* end = begin + fill_[row];
        std::sort(begin, end, std::greater<>());
        double total = 0.0;
        for (const double* v = begin; v != end; ++v) {
            total += *v;
        }
        return total;
    }

    std::size_t rows() const { return fill_.size(); }

private:
    std::size_t k_;
    std::vector<double> values_;
    std::vector<std::size_t> fill_;
};

}  // namespace

SimilarityModel::ItemState& SimilarityModel::add_item(ItemId item, Timestamp now) {
    auto& state = items_[item];
    if (free_slots_.empty()) {
        state.slot = static_cast<std::uint32_t>(slot_norm_.size());
        slot_norm_.push_back(0.0);
    } else {
        state.slot = free_slots_.back();
        free_slots_.pop_back();
    }
    state.usage.last_seen = now;
    return state;
}

void SimilarityModel::add_to_pair(ItemId a, ItemState& sa, ItemId b, ItemState& sb, double m) {
    const auto found = sa.partner_pos.find(b);
    if (found != sa.partner_pos.end()) {
        pairs_[sa.partners[found->second].pair].min_sum += m;
        return;
    }
    std::uint32_t index;
    if (free_pairs_.empty()) {
        index = static_cast<std::uint32_t>(pairs_.size());
        pairs_.emplace_back();
    } else {
        index = free_pairs_.back();
        free_pairs_.pop_back();
    }
    pairs_[index] = {ItemPair::of(a, b), m, true};
    sa.partner_pos.emplace(b, static_cast<std::uint32_t>(sa.partners.size()));
    sa.partners.push_back({b, sb.slot, index});
    sb.partner_pos.emplace(a, static_cast<std::uint32_t>(sb.partners.size()));
    sb.partners.push_back({a, sa.slot, index});
    ++pair_count_;
}

void SimilarityModel::drop_partner(ItemState& a, ItemId b) {
    const auto it = a.partner_pos.find(b);
    if (it == a.partner_pos.end()) {
        return;
    }
    const std::uint32_t pos = it->second;
    a.partner_pos.erase(it);
    if (pos + 1 != a.partners.size()) {
        a.partners[pos] = a.partners.back();
        a.partner_pos[a.partners[pos].id] = pos;
    }
    a.partners.pop_back();
}

void SimilarityModel::update(UserId user, ItemId item, double rating, Timestamp now) {
    auto [uit, user_created] = users_.try_emplace(user);
    auto& history = uit->second;
    if (user_created) {
        history.usage.last_seen = now;
    }
    if (history.index.contains(item)) {
        history.usage.touch(now);
        items_.at(item).usage.touch(now);
        return;
    }

    const auto found = items_.find(item);
    auto& state = found == items_.end() ? add_item(item, now) : found->second;
    for (const auto& [other, other_rating] : history.items) {
        const double m = std::min(rating, other_rating);
        add_to_pair(item, state, other, items_.at(other), m);
    }
    state.rating_sum += rating;
    state.norm = std::sqrt(state.rating_sum);
    slot_norm_[state.slot] = state.norm;
    history.items.emplace_back(item, rating);
    history.index.insert(item);
    history.usage.touch(now);
    state.usage.touch(now);
}

double SimilarityModel::similarity(ItemId p, ItemId q) const {
    if (p == q) {
        return 0.0;
    }
    const auto ip = items_.find(p);
    if (ip == items_.end()) {
        return 0.0;
    }
    const auto pos = ip->second.partner_pos.find(q);
    if (pos == ip->second.partner_pos.end()) {
        return 0.0;
    }
    const auto iq = items_.find(q);
    return pairs_[ip->second.partners[pos->second].pair].min_sum /
               (ip->second.norm * iq->second.norm) +
           similarity_bias_;
}

double SimilarityModel::estimate(UserId user, ItemId p, std::size_t neighbors_k) const {
    const auto h = users_.find(user);
    if (h == users_.end() || neighbors_k == 0) {
        return 0.0;
    }
    // (similarity, rating, id) of every rated item similar to p.
    struct Neighbor {
        double sim;
        double rating;
        ItemId id;
    };
    std::vector<Neighbor> neighbors;
    for (const auto& [q, r] : h->second.items) {
        const double s = similarity(p, q);
        if (s > 0.0) {
            neighbors.push_back({s, r, q});
        }
    }
    if (neighbors.empty()) {
        return 0.0;
    }
    const std::size_t take = std::min(neighbors_k, neighbors.size());
    std::partial_sort(neighbors.begin(), neighbors.begin() + static_cast<std::ptrdiff_t>(take),
                      neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
                          return a.sim > b.sim || (a.sim == b.sim && a.id < b.id);
                      });
    double weighted = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < take; ++j) {
        weighted += neighbors[j].sim * neighbors[j].rating;
        total += neighbors[j].sim;
    }
    return weighted / total;
}

std::vector<ItemId> SimilarityModel::recommend(UserId user, std::size_t n,
                                               std::size_t neighbors_k) const {
    const auto h = users_.find(user);
    if (h == users_.end() || n == 0 || neighbors_k == 0) {
        return {};
    }
    const auto& history = h->second;

    // Walk co-rated partners of the user's items instead of every stored item:
    // anything else has zero similarity to the whole history. For a fixed
    // candidate p every similarity shares the 1/norm(p) factor, so it is
    // applied once after the top-k selection.
    constexpr std::uint32_t kUnset = ~std::uint32_t{0};
    constexpr std::uint32_t kRated = kUnset - 1;
    scratch_row_.resize(slot_norm_.size(), kUnset);
    std::vector<std::uint32_t> touched;
    std::vector<std::uint32_t> row_slot;
    std::vector<ItemId> row_id;
    TopKTable top(neighbors_k);
    for (const auto& [q, r] : history.items) {
        const auto iq = items_.find(q);
        if (iq == items_.end()) {
            continue;
        }
        const double inv_q = 1.0 / iq->second.norm;
        for (const auto& p : iq->second.partners) {
            const double min_sum = pairs_[p.pair].min_sum;
            if (min_sum <= 0.0) {
                continue;
            }
            auto& row = scratch_row_[p.slot];
            if (row == kUnset) {
                touched.push_back(p.slot);
                if (history.index.contains(p.id)) {
                    row = kRated;
                } else {
                    row = top.add();
                    row_slot.push_back(p.slot);
                    row_id.push_back(p.id);
                }
            }
            if (row != kRated) {
                top.push(row, min_sum * inv_q);
            }
        }
    }
    for (const auto slot : touched) {
        scratch_row_[slot] = kUnset;
    }

    std::vector<std::pair<double, ItemId>> scored;
    scored.reserve(row_id.size());
    for (std::uint32_t row = 0; row < top.rows(); ++row) {
        scored.emplace_back(top.sum(row) / slot_norm_[row_slot[row]], row_id[row]);
    }
    const auto better = [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    };
    const std::size_t take = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), better);
    std::vector<ItemId> out;
    out.reserve(take);
    for (std::size_t j = 0; j < take; ++j) {
        out.push_back(scored[j].second);
    }
    return out;
}

const SimilarityModel::ItemState* SimilarityModel::item(ItemId item) const {
    const auto it = items_.find(item);
    return it == items_.end() ? nullptr : &it->second;
}

const SimilarityModel::UserHistory* SimilarityModel::history(UserId user) const {
    const auto it = users_.find(user);
    return it == users_.end() ? nullptr : &it->second;
}

double SimilarityModel::pair_min_sum(ItemId p, ItemId q) const {
    const auto ip = items_.find(p);
    if (ip == items_.end()) {
        return 0.0;
    }
    const auto pos = ip->second.partner_pos.find(q);
    return pos == ip->second.partner_pos.end() ? 0.0
                                               : pairs_[ip->second.partners[pos->second].pair].min_sum;
}

std::vector<std::pair<ItemPair, double>> SimilarityModel::pairs() const {
    std::vector<std::pair<ItemPair, double>> out;
    out.reserve(pair_count_);
    for (const auto& record : pairs_) {
        if (record.live) {
            out.emplace_back(record.key, record.min_sum);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.first.lo < b.first.lo || (a.first.lo == b.first.lo && a.first.hi < b.first.hi);
    });
    return out;
}

std::uint64_t SimilarityModel::erase_users(std::span<const UserId> users) {
    std::uint64_t erased = 0;
    for (const auto user : users) {
        erased += users_.erase(user);
    }
    return erased;
}

std::pair<std::uint64_t, std::uint64_t> SimilarityModel::erase_items(
    std::span<const ItemId> items) {
    std::unordered_set<ItemId> gone;
    std::uint64_t pairs_erased = 0;
    for (const auto item : items) {
        const auto it = items_.find(item);
        if (it == items_.end()) {
            continue;
        }
        for (const auto& p : it->second.partners) {
            drop_partner(items_.at(p.id), item);
            pairs_[p.pair].live = false;
            free_pairs_.push_back(p.pair);
        }
        pairs_erased += it->second.partners.size();
        slot_norm_[it->second.slot] = 0.0;
        free_slots_.push_back(it->second.slot);
        items_.erase(it);
        gone.insert(item);
    }
    pair_count_ -= pairs_erased;
    if (!gone.empty()) {
        for (auto& [user, history] : users_) {
            std::erase_if(history.items, [&](const auto& entry) { return gone.contains(entry.first); });
            std::erase_if(history.index, [&](ItemId i) { return gone.contains(i); });
        }
    }
    return {gone.size(), pairs_erased};
}

}  // namespace streamrec
