#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "streamrec/cosine.hpp"

using namespace streamrec;

namespace {

struct Event {
    UserId user;
    ItemId item;
    double rating;
};

// Batch cosine over the first rating of each (user, item) pair.
class BatchCosine {
public:
    explicit BatchCosine(const std::vector<Event>& events) {
        for (const auto& e : events) {
            ratings_[e.user].try_emplace(e.item, e.rating);
        }
    }

    double sim(ItemId p, ItemId q) const {
        double num = 0.0;
        double sp = 0.0;
        double sq = 0.0;
        for (const auto& [u, row] : ratings_) {
            const auto a = row.find(p);
            const auto b = row.find(q);
            if (a != row.end()) sp += a->second;
            if (b != row.end()) sq += b->second;
            if (a != row.end() && b != row.end()) num += std::min(a->second, b->second);
        }
        if (sp == 0.0 || sq == 0.0) return 0.0;
        return num / (std::sqrt(sp) * std::sqrt(sq));
    }

    std::set<ItemId> items() const {
        std::set<ItemId> out;
        for (const auto& [u, row] : ratings_) {
            for (const auto& [i, r] : row) out.insert(i);
        }
        return out;
    }

    const std::map<UserId, std::map<ItemId, double>>& ratings() const { return ratings_; }

private:
    std::map<UserId, std::map<ItemId, double>> ratings_;
};

std::vector<Event> random_events(std::uint64_t seed, int count, std::uint64_t users,
                                 std::uint64_t items, bool integer_ratings) {
    Rng rng(seed);
    std::vector<Event> out;
    for (int n = 0; n < count; ++n) {
        // Squaring a uniform skews draws toward small ids.
        const double x = rng.uniform();
        const ItemId item = static_cast<ItemId>(x * x * static_cast<double>(items));
        const double rating = integer_ratings ? 1.0 + static_cast<double>(rng.below(5)) : 1.0;
        out.push_back({rng.below(users), item, rating});
    }
    return out;
}

SimilarityModel build(const std::vector<Event>& events) {
    SimilarityModel model;
    Timestamp t = 0;
    for (const auto& e : events) {
        model.update(e.user, e.item, e.rating, t++);
    }
    return model;
}

}  // namespace

TEST_CASE("two users sharing one of two items") {
    SimilarityModel model;
    model.update(1, 10, 1.0, 0);
    model.update(1, 20, 1.0, 1);
    model.update(2, 10, 1.0, 2);
    // min-sum 1, sums 2 and 1: 1 / sqrt(2)
    CHECK(model.similarity(10, 20) == doctest::Approx(1.0 / std::sqrt(2.0)));
    model.update(3, 20, 1.0, 3);
    model.update(3, 10, 1.0, 4);
    CHECK(model.pair_min_sum(10, 20) == 2.0);
    CHECK(model.similarity(10, 20) == doctest::Approx(2.0 / std::sqrt(6.0)));
}

TEST_CASE("half overlap gives one half") {
    SimilarityModel model;
    model.update(1, 1, 1.0, 0);
    model.update(1, 2, 1.0, 0);
    model.update(2, 1, 1.0, 0);
    model.update(3, 2, 1.0, 0);
    CHECK(model.similarity(1, 2) == doctest::Approx(0.5));
}

TEST_CASE("unknown and self pairs are zero") {
    SimilarityModel model;
    model.update(1, 1, 1.0, 0);
    CHECK(model.similarity(1, 1) == 0.0);
    CHECK(model.similarity(1, 99) == 0.0);
    CHECK(model.similarity(98, 99) == 0.0);
    CHECK(model.pair_min_sum(1, 99) == 0.0);
}

TEST_CASE("repeated events only refresh usage") {
    SimilarityModel model;
    model.update(1, 1, 1.0, 0);
    model.update(1, 2, 1.0, 1);
    model.update(1, 2, 1.0, 5);
    CHECK(model.item(2)->rating_sum == 1.0);
    CHECK(model.pair_min_sum(1, 2) == 1.0);
    CHECK(model.item(2)->usage.frequency == 2);
    CHECK(model.item(2)->usage.last_seen == 5);
    CHECK(model.history(1)->items.size() == 2);
    CHECK(model.history(1)->usage.frequency == 3);
}

TEST_CASE("incremental similarities match batch cosine on prefixes") {
    for (const bool graded : {false, true}) {
        const auto events = random_events(graded ? 21 : 20, 3000, 200, 60, graded);
        SimilarityModel model;
        for (std::size_t n = 0; n < events.size(); ++n) {
            model.update(events[n].user, events[n].item, events[n].rating,
                         static_cast<Timestamp>(n));
            if ((n + 1) % 500 != 0) continue;
            const std::vector<Event> prefix(events.begin(),
                                            events.begin() + static_cast<std::ptrdiff_t>(n + 1));
            const BatchCosine oracle(prefix);
            const auto items = oracle.items();
            for (const ItemId p : items) {
                for (const ItemId q : items) {
                    if (p >= q) continue;
                    REQUIRE(std::abs(model.similarity(p, q) - oracle.sim(p, q)) <= 1e-9);
                }
            }
        }
    }
}

TEST_CASE("similarity is symmetric and bounded") {
    const auto model = build(random_events(5, 4000, 300, 80, true));
    for (const auto& [pair, value] : model.pairs()) {
        const double a = model.similarity(pair.lo, pair.hi);
        REQUIRE(a == model.similarity(pair.hi, pair.lo));
        REQUIRE(a > 0.0);
        REQUIRE(a <= 1.0 + 1e-12);
        REQUIRE(value > 0.0);
    }
}

TEST_CASE("permuting events within a user's history keeps similarities") {
    // Reordering events across users never changes the sums; within a user it
    // only matters which rating comes first for repeated pairs, so use unique
    // pairs here.
    auto events = random_events(6, 2000, 100, 50, true);
    std::set<std::pair<UserId, ItemId>> seen;
    std::erase_if(events, [&](const Event& e) { return !seen.insert({e.user, e.item}).second; });
    const auto forward = build(events);
    Rng rng(77);
    for (std::size_t j = events.size() - 1; j > 0; --j) {
        std::swap(events[j], events[rng.below(j + 1)]);
    }
    const auto shuffled = build(events);
    REQUIRE(forward.pairs().size() == shuffled.pairs().size());
    for (const auto& [pair, value] : forward.pairs()) {
        REQUIRE(std::abs(shuffled.similarity(pair.lo, pair.hi) -
                         forward.similarity(pair.lo, pair.hi)) <= 1e-12);
    }
}

TEST_CASE("estimate is the weighted average over the top neighbors") {
    const auto events = random_events(9, 3000, 150, 40, true);
    const auto model = build(events);
    const BatchCosine oracle(events);
    const std::size_t k = 5;
    int checked = 0;
    for (const auto& [user, row] : oracle.ratings()) {
        for (ItemId p = 0; p < 40; p += 7) {
            std::vector<std::tuple<double, ItemId, double>> neighbors;
            for (const auto& [q, r] : row) {
                const double s = oracle.sim(p, q);
                if (s > 0.0 && q != p) neighbors.emplace_back(s, q, r);
            }
            std::sort(neighbors.begin(), neighbors.end(), [](const auto& a, const auto& b) {
                return std::get<0>(a) > std::get<0>(b) ||
                       (std::get<0>(a) == std::get<0>(b) && std::get<1>(a) < std::get<1>(b));
            });
            double num = 0.0;
            double den = 0.0;
            for (std::size_t j = 0; j < std::min(k, neighbors.size()); ++j) {
                num += std::get<0>(neighbors[j]) * std::get<2>(neighbors[j]);
                den += std::get<0>(neighbors[j]);
            }
            const double expected = den > 0.0 ? num / den : 0.0;
            REQUIRE(model.estimate(user, p, k) == doctest::Approx(expected).epsilon(1e-9));
            ++checked;
        }
    }
    CHECK(checked > 100);
    CHECK(model.estimate(123456, 1, k) == 0.0);
}

TEST_CASE("recommend ranks by summed neighbor similarity") {
    const auto events = random_events(13, 2500, 120, 50, false);
    const auto model = build(events);
    const BatchCosine oracle(events);
    const std::size_t k = 3;
    for (const auto& [user, row] : oracle.ratings()) {
        std::vector<std::pair<double, ItemId>> scored;
        for (const ItemId p : oracle.items()) {
            if (row.contains(p)) continue;
            std::vector<double> sims;
            for (const auto& [q, r] : row) {
                const double s = oracle.sim(p, q);
                if (s > 0.0) sims.push_back(s);
            }
            if (sims.empty()) continue;
            std::sort(sims.begin(), sims.end(), std::greater<>());
            double sum = 0.0;
            for (std::size_t j = 0; j < std::min(k, sims.size()); ++j) sum += sims[j];
            scored.emplace_back(sum, p);
        }
        const auto got = model.recommend(user, 10, k);
        REQUIRE(got.size() == std::min<std::size_t>(10, scored.size()));
        std::sort(scored.begin(), scored.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        // Compare scores rather than ids: near-equal sums may order differently
        // under floating point.
        for (std::size_t j = 0; j < got.size(); ++j) {
            REQUIRE_FALSE(row.contains(got[j]));
            const auto it = std::find_if(scored.begin(), scored.end(),
                                         [&](const auto& s) { return s.second == got[j]; });
            REQUIRE(it != scored.end());
            REQUIRE(it->first == doctest::Approx(scored[j].first).epsilon(1e-9));
        }
    }
}

TEST_CASE("erasing items removes their pairs and history entries") {
    auto model = build(random_events(3, 1500, 80, 30, false));
    const std::vector<ItemId> victims{0, 1, 2};
    std::uint64_t expected_pairs = 0;
    for (const auto& [pair, v] : model.pairs()) {
        if (pair.lo <= 2 || pair.hi <= 2) ++expected_pairs;
    }
    const auto [items, pairs] = model.erase_items(victims);
    CHECK(items == 3);
    CHECK(pairs == expected_pairs);
    for (const auto& [pair, v] : model.pairs()) {
        REQUIRE(model.item(pair.lo) != nullptr);
        REQUIRE(model.item(pair.hi) != nullptr);
    }
    for (const auto& [id, state] : model.items()) {
        for (const auto& p : state.partners) {
            REQUIRE(model.item(p.id) != nullptr);
            const auto& record = model.pair_record(p.pair);
            REQUIRE(record.live);
            REQUIRE(record.key == ItemPair::of(id, p.id));
            REQUIRE(model.pair_min_sum(p.id, id) == record.min_sum);
        }
    }
    for (const auto& [u, h] : model.users()) {
        REQUIRE(h.items.size() == h.index.size());
        for (const auto& [i, r] : h.items) {
            REQUIRE(i > 2);
        }
    }
}

TEST_CASE("erasing users keeps item statistics") {
    auto model = build(random_events(4, 500, 40, 20, false));
    const double before = model.similarity(0, 1);
    const std::vector<UserId> victims{0, 1, 2, 3};
    CHECK(model.erase_users(victims) <= 4);
    CHECK(model.similarity(0, 1) == before);
    CHECK(model.history(0) == nullptr);
}

TEST_CASE("similarity bias hook shifts reported values") {
    SimilarityModel model;
    model.update(1, 1, 1.0, 0);
    model.update(1, 2, 1.0, 0);
    model.set_similarity_bias(1e-3);
    CHECK(model.similarity(1, 2) == doctest::Approx(1.001));
}
