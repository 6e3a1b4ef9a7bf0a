#include "streamrec/validate.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "streamrec/cosine.hpp"
#include "streamrec/ingest.hpp"
#include "streamrec/isgd.hpp"
#include "streamrec/router.hpp"

namespace streamrec {

SuiteResult validate_routing() {
    SuiteResult result;
    result.name = "routing";
    for (const std::uint32_t n_i : {1u, 2u, 3u, 4u, 6u}) {
        for (const std::uint32_t w : {0u, 1u, 2u}) {
            const RoutingPlan plan(n_i, w);
            const std::uint32_t n_u = n_i + w;
            for (std::uint64_t u = 0; u < 256; ++u) {
                for (std::uint64_t i = 0; i < 256; ++i) {
                    ++result.checks;
                    std::set<std::uint64_t> row;
                    for (std::uint64_t x = 0; x < n_u; ++x) {
                        row.insert((i % n_i) * n_u + x);
                    }
                    std::vector<std::uint64_t> common;
                    std::uint64_t column_size = 0;
                    for (std::uint64_t y = 0; y < n_i; ++y) {
                        ++column_size;
                        const std::uint64_t candidate = (u % n_u) + y * n_u;
                        if (row.contains(candidate)) {
                            common.push_back(candidate);
                        }
                    }
                    const auto items = plan.item_replica_set(i);
                    const auto users = plan.user_replica_set(u);
                    const bool ok = common.size() == 1 && plan.route(u, i) == common.front() &&
                                    items.size() == n_u && users.size() == n_i &&
                                    std::set<std::uint64_t>(items.begin(), items.end()) == row &&
                                    column_size == n_i;
                    if (!ok) {
                        std::ostringstream out;
                        out << "ni=" << n_i << " w=" << w << " user=" << u << " item=" << i
                            << " route=" << plan.route(u, i) << " intersection size="
                            << common.size();
                        result.passed = false;
                        result.detail = out.str();
                        return result;
                    }
                }
            }
        }
    }
    return result;
}

SuiteResult validate_isgd(std::uint64_t seed, std::uint64_t instances) {
    SuiteResult result;
    result.name = "isgd";
    Rng rng(seed);
    for (std::uint64_t n = 0; n < instances; ++n) {
        ++result.checks;
        const auto k = static_cast<std::uint32_t>(1 + rng.below(16));
        const double eta = 0.001 + 0.2 * rng.uniform();
        const double lambda = 0.1 * rng.uniform();
        std::vector<double> u(k);
        std::vector<double> v(k);
        for (auto& x : u) x = rng.normal(0.0, 0.5);
        for (auto& x : v) x = rng.normal(0.0, 0.5);

        FactorModel model({k, eta, lambda, false, false});
        model.set_user_vector(0, u);
        model.set_item_vector(0, v);
        model.train(0, 0, 0);

        double prediction = 0.0;
        for (std::uint32_t f = 0; f < k; ++f) {
            prediction += u[f] * v[f];
        }
        const double err = 1.0 - prediction;
        const auto got_u = model.user_vector(0);
        const auto got_v = model.item_vector(0);
        for (std::uint32_t f = 0; f < k; ++f) {
            const double want_u = u[f] + eta * (err * v[f] - lambda * u[f]);
            const double want_v = v[f] + eta * (err * u[f] - lambda * v[f]);
            if (std::abs(got_u[f] - want_u) > 1e-12 || std::abs(got_v[f] - want_v) > 1e-12) {
                std::ostringstream out;
                out.precision(17);
                out << "instance " << n << " k=" << k << " eta=" << eta << " lambda=" << lambda
                    << " component " << f << ": user " << got_u[f] << " vs " << want_u
                    << ", item " << got_v[f] << " vs " << want_v;
                result.passed = false;
                result.detail = out.str();
                return result;
            }
        }
    }
    return result;
}

SuiteResult validate_similarity(std::uint64_t seed, std::uint64_t events,
                                std::uint64_t check_every, double fault_offset) {
    SuiteResult result;
    result.name = "similarity";
    SyntheticSpec spec;
    spec.users = 500;
    spec.items = 100;
    spec.events = events;
    spec.seed = seed;
    const auto stream = preprocess(generate_synthetic(spec));

    SimilarityModel model;
    model.set_similarity_bias(fault_offset);
    std::map<ItemId, std::set<UserId>> raters;
    for (std::size_t p = 0; p < stream.size(); ++p) {
        const auto& e = stream[p];
        model.update(e.user_id, e.item_id, e.rating, e.timestamp);
        raters[e.item_id].insert(e.user_id);
        if ((p + 1) % check_every != 0 && p + 1 != stream.size()) {
            continue;
        }
        for (auto a = raters.begin(); a != raters.end(); ++a) {
            for (auto b = std::next(a); b != raters.end(); ++b) {
                ++result.checks;
                std::size_t common = 0;
                for (const auto user : a->second) {
                    common += b->second.count(user);
                }
                const double batch =
                    static_cast<double>(common) /
                    std::sqrt(static_cast<double>(a->second.size() * b->second.size()));
                const double incremental = model.similarity(a->first, b->first);
                if (std::abs(incremental - batch) > 1e-9) {
                    std::ostringstream out;
                    out.precision(17);
                    out << "after " << (p + 1) << " events, items (" << a->first << ", "
                        << b->first << "): incremental " << incremental << " vs batch " << batch;
                    result.passed = false;
                    result.detail = out.str();
                    return result;
                }
            }
        }
    }
    return result;
}

}  // namespace streamrec
