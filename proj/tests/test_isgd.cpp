#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "streamrec/isgd.hpp"

using namespace streamrec;

namespace {

FactorParams params_k(std::uint32_t k) {
    FactorParams p;
    p.k = k;
    return p;
}

// Plain-array restatement of one positive-feedback step.
void oracle_step(std::vector<double>& u, std::vector<double>& v, double eta, double lambda) {
    double dot = 0.0;
    for (std::size_t f = 0; f < u.size(); ++f) {
        dot += u[f] * v[f];
    }
    const double err = 1.0 - dot;
    std::vector<double> u2(u.size());
    std::vector<double> v2(v.size());
    for (std::size_t f = 0; f < u.size(); ++f) {
        u2[f] = u[f] + eta * (err * v[f] - lambda * u[f]);
        v2[f] = v[f] + eta * (err * u[f] - lambda * v[f]);
    }
    u = u2;
    v = v2;
}

}  // namespace

TEST_CASE("single step example") {
    FactorModel model(params_k(1));
    const std::vector<double> u{0.5};
    const std::vector<double> v{0.4};
    model.set_user_vector(1, u);
    model.set_item_vector(2, v);
    CHECK(model.predict(1, 2) == doctest::Approx(0.2));
    model.train(1, 2, 10);
    CHECK(model.user_vector(1)[0] == doctest::Approx(0.51575).epsilon(1e-12));
    CHECK(model.item_vector(2)[0] == doctest::Approx(0.4198).epsilon(1e-12));
    CHECK(model.user(1)->seen.contains(2));
    CHECK(model.user(1)->usage.frequency == 1);
    CHECK(model.item_usage(2)->frequency == 1);
    CHECK(model.item_usage(2)->last_seen == 10);
}

TEST_CASE("sequential update uses the fresh user vector") {
    FactorParams p = params_k(1);
    p.sequential_update = true;
    FactorModel model(p);
    const std::vector<double> u{0.5};
    const std::vector<double> v{0.4};
    model.set_user_vector(1, u);
    model.set_item_vector(2, v);
    model.train(1, 2, 0);
    CHECK(model.user_vector(1)[0] == doctest::Approx(0.51575));
    // err is computed once; the item step reads the updated user value.
    CHECK(model.item_vector(2)[0] == doctest::Approx(0.4 + 0.05 * (0.8 * 0.51575 - 0.01 * 0.4)));
}

TEST_CASE("randomized steps match the plain-array oracle") {
    Rng rng(314);
    for (int n = 0; n < 10000; ++n) {
        FactorParams p;
        p.k = 1 + static_cast<std::uint32_t>(rng.below(32));
        p.eta = 0.001 + 0.2 * rng.uniform();
        p.lambda = 0.1 * rng.uniform();
        FactorModel model(p);
        std::vector<double> u(p.k);
        std::vector<double> v(p.k);
        for (auto& x : u) x = rng.normal(0.0, 0.5);
        for (auto& x : v) x = rng.normal(0.0, 0.5);
        model.set_user_vector(0, u);
        model.set_item_vector(0, v);
        model.train(0, 0, 0);
        oracle_step(u, v, p.eta, p.lambda);
        for (std::uint32_t f = 0; f < p.k; ++f) {
            REQUIRE(std::abs(model.user_vector(0)[f] - u[f]) <= 1e-12);
            REQUIRE(std::abs(model.item_vector(0)[f] - v[f]) <= 1e-12);
        }
    }
}

TEST_CASE("predict on unknown entities throws") {
    FactorModel model(params_k(3));
    CHECK_THROWS_AS(model.predict(1, 1), UnknownEntity);
    CHECK_THROWS_AS(model.train(1, 1, 0), UnknownEntity);
}

TEST_CASE("ensure_vectors draws small initial factors") {
    FactorModel model(params_k(10));
    Rng rng(5);
    model.ensure_vectors(rng, 1, 1, 0);
    REQUIRE(model.has_user(1));
    REQUIRE(model.has_item(1));
    CHECK(model.user(1)->usage.frequency == 0);
    for (const double x : model.user_vector(1)) {
        CHECK(std::abs(x) < 0.6);
    }
    const std::vector<double> before(model.user_vector(1).begin(), model.user_vector(1).end());
    model.ensure_vectors(rng, 1, 2, 0);
    CHECK(std::equal(before.begin(), before.end(), model.user_vector(1).begin()));
}

TEST_CASE("repeated training on one pair converges near the regularized fixed point") {
    FactorModel model(params_k(10));
    Rng rng(11);
    model.ensure_vectors(rng, 7, 9, 0);
    for (int n = 0; n < 100000; ++n) {
        model.train(7, 9, n);
        if (n % 1000 == 0) {
            for (const double x : model.user_vector(7)) {
                REQUIRE(std::isfinite(x));
            }
        }
    }
    double norm_sq = 0.0;
    for (const double x : model.user_vector(7)) {
        norm_sq += x * x;
    }
    // With U = I the stationary point satisfies |U|^2 = 1 - lambda.
    CHECK(model.predict(7, 9) == doctest::Approx(0.99).epsilon(0.01));
    CHECK(norm_sq < 2.0);
}

TEST_CASE("recommend excludes seen items and ranks by score then id") {
    FactorModel model(params_k(1));
    const std::vector<double> one{1.0};
    model.set_user_vector(1, one);
    for (ItemId i = 0; i < 6; ++i) {
        const std::vector<double> v{i == 3 ? 0.9 : 0.1 * static_cast<double>(i % 3)};
        model.set_item_vector(i, v);
    }
    // scores: 0:0, 1:.1, 2:.2, 3:.9, 4:.1, 5:.2
    CHECK(model.recommend(1, 4) == std::vector<ItemId>{3, 2, 5, 1});
    model.train(1, 3, 0);
    const auto rec = model.recommend(1, 10);
    CHECK(std::find(rec.begin(), rec.end(), 3) == rec.end());
    CHECK(rec.size() == 5);
    CHECK(model.recommend(42, 10).empty());
}

TEST_CASE("distance-to-one ranking") {
    FactorParams p = params_k(1);
    p.rank_by_distance_to_one = true;
    FactorModel model(p);
    const std::vector<double> one{1.0};
    model.set_user_vector(1, one);
    const std::vector<double> a{1.5};
    const std::vector<double> b{0.9};
    const std::vector<double> c{3.0};
    model.set_item_vector(0, a);
    model.set_item_vector(1, b);
    model.set_item_vector(2, c);
    CHECK(model.recommend(1, 3) == std::vector<ItemId>{1, 0, 2});
}

TEST_CASE("erasing items purges them from seen sets") {
    FactorModel model(params_k(2));
    Rng rng(3);
    for (ItemId i = 0; i < 5; ++i) {
        model.ensure_vectors(rng, 1, i, 0);
        model.train(1, i, 0);
    }
    const std::vector<double> kept(model.item_vector(4).begin(), model.item_vector(4).end());
    const std::vector<ItemId> victims{0, 2};
    CHECK(model.erase_items(victims) == 2);
    CHECK(model.counts().items == 3);
    CHECK_FALSE(model.user(1)->seen.contains(0));
    CHECK(model.user(1)->seen.contains(4));
    // Survivors keep their vectors after the swap-remove.
    CHECK(std::equal(kept.begin(), kept.end(), model.item_vector(4).begin()));
    const std::vector<UserId> users{1, 99};
    CHECK(model.erase_users(users) == 1);
    CHECK(model.counts() == StateCounts{0, 3, 0});
}

TEST_CASE("learner is deterministic for a seed") {
    const auto run = [] {
        IsgdLearner learner(FactorParams{}, Rng::for_worker(42, 0));
        Rng stream(8);
        std::vector<ItemId> last;
        for (Seq s = 0; s < 2000; ++s) {
            const RatingEvent e{s, stream.below(50), stream.below(80), 1.0,
                                static_cast<Timestamp>(s)};
            last = learner.recommend(e.user_id, 10);
            learner.learn(e);
        }
        const auto& users = learner.model().users();
        const auto u = users.begin()->first;
        return std::make_pair(last, learner.model().predict(u, learner.model().items()[0]));
    };
    CHECK(run() == run());
}
