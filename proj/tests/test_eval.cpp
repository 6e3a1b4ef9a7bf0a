#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "streamrec/eval.hpp"
#include "streamrec/isgd.hpp"

using namespace streamrec;

namespace {

std::vector<EvalRecord> records_from(const std::vector<std::uint8_t>& hits) {
    std::vector<EvalRecord> out;
    for (std::size_t n = 0; n < hits.size(); ++n) {
        EvalRecord r;
        r.seq = n;
        r.worker = static_cast<WorkerId>(n % 2);
        r.hit = hits[n];
        r.latency_ns = 100 * (n + 1);
        out.push_back(r);
    }
    return out;
}

// Remembers the last item it learned and recommends exactly that item.
class EchoLearner {
public:
    std::vector<ItemId> recommend(UserId, std::size_t) const {
        return has_last_ ? std::vector<ItemId>{last_} : std::vector<ItemId>{};
    }
    void learn(const RatingEvent& e) {
        last_ = e.item_id;
        has_last_ = true;
    }

private:
    ItemId last_ = 0;
    bool has_last_ = false;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("moving average example") {
    const std::vector<std::uint8_t> hits{1, 0, 0, 1};
    const auto avg = moving_average(hits, 3);
    REQUIRE(avg.size() == 4);
    CHECK(avg[0] == 1.0);
    CHECK(avg[1] == 0.5);
    CHECK(avg[2] == doctest::Approx(1.0 / 3.0));
    CHECK(avg[3] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("incremental moving recall matches the windowed mean") {
    Rng rng(4);
    for (const std::size_t window : {1u, 2u, 7u, 100u}) {
        std::vector<std::uint8_t> hits;
        for (int n = 0; n < 1000; ++n) {
            hits.push_back(rng.uniform() < 0.3 ? 1 : 0);
        }
        const auto batch = moving_average(hits, window);
        MovingRecall moving(window);
        for (std::size_t n = 0; n < hits.size(); ++n) {
            const double got = moving.push(hits[n]);
            const std::size_t from = n + 1 > window ? n + 1 - window : 0;
            double sum = 0.0;
            for (std::size_t j = from; j <= n; ++j) sum += hits[j];
            const double expected = sum / static_cast<double>(n + 1 - from);
            REQUIRE(got == doctest::Approx(expected).epsilon(1e-12));
            REQUIRE(batch[n] == got);
        }
    }
}

TEST_CASE("an event cannot hit off its own training") {
    EchoLearner learner;
    // Every item is new, so the only way to hit would be learning first.
    for (Seq s = 0; s < 50; ++s) {
        const RatingEvent e{s, 1, 1000 + s, 1.0, 0};
        CHECK(prequential_step(learner, e, 10).hit == 0);
    }
    // A repeat of the previous item is a genuine hit from earlier state.
    const RatingEvent again{50, 1, 1049, 1.0, 0};
    CHECK(prequential_step(learner, again, 10).hit == 1);
}

TEST_CASE("first event on a fresh ISGD learner is never a hit") {
    IsgdLearner learner(FactorParams{}, Rng(1));
    const RatingEvent e{0, 3, 4, 1.0, 0};
    const auto outcome = prequential_step(learner, e, 10);
    CHECK(outcome.hit == 0);
    CHECK(outcome.rec_list_len == 0);
    CHECK(learner.model().has_item(4));
}

TEST_CASE("summarize splits warmup and agrees with the series") {
    Rng rng(6);
    std::vector<std::uint8_t> hits;
    for (int n = 0; n < 1003; ++n) {
        hits.push_back(rng.uniform() < 0.2 ? 1 : 0);
    }
    const auto records = records_from(hits);
    const auto report = summarize(records, 50, 0.2, 2);
    CHECK(report.events == 1003);
    CHECK(report.warmup_events == 200);
    double total = 0.0;
    double warm = 0.0;
    for (std::size_t n = 0; n < hits.size(); ++n) {
        total += hits[n];
        if (n < 200) warm += hits[n];
    }
    CHECK(report.cumulative_recall == doctest::Approx(total / 1003.0));
    CHECK(report.warmup_recall == doctest::Approx(warm / 200.0));
    CHECK(report.post_warmup_recall == doctest::Approx((total - warm) / 803.0));
    CHECK(report.events_per_worker == std::vector<std::uint64_t>{502, 501});
    CHECK(report.hits() == hits);
    const auto avg = moving_average(hits, 50);
    for (std::size_t n = 0; n < hits.size(); ++n) {
        REQUIRE(report.recall_series[n].moving_avg == avg[n]);
    }
}

TEST_CASE("summarize on an empty stream") {
    const auto report = summarize({}, 10, 0.2, 1);
    CHECK(report.events == 0);
    CHECK(report.cumulative_recall == 0.0);
    CHECK(report.recall_series.empty());
    CHECK(report.mean_state_size() == 0.0);
}

TEST_CASE("nearest-rank latency percentiles") {
    std::vector<std::uint64_t> values;
    for (std::uint64_t v = 1; v <= 100; ++v) values.push_back(101 - v);
    const auto s = latency_percentiles(values);
    CHECK(s.p50_ns == 50);
    CHECK(s.p95_ns == 95);
    CHECK(s.p99_ns == 99);
    CHECK(latency_percentiles({}).p99_ns == 0);
}

TEST_CASE("state size helpers") {
    MetricsReport report;
    report.state_snapshots = {{10, 0, {1, 2, 3}}, {10, 1, {1, 1, 0}}, {20, 0, {2, 2, 2}},
                              {20, 1, {0, 0, 0}}};
    CHECK(report.mean_state_size() == doctest::Approx((6 + 2 + 6 + 0) / 4.0));
    const auto last = report.final_state();
    REQUIRE(last.size() == 2);
    CHECK(last[0].seq == 20);
    CHECK(last[0].counts == StateCounts{2, 2, 2});
}

TEST_CASE("report files") {
    auto report = summarize(records_from({1, 0, 1}), 2, 0.2, 2);
    report.state_snapshots = {{2, 0, {1, 2, 0}}, {2, 1, {3, 4, 5}}};
    SweepRecord sweep;
    sweep.seq = 1;
    sweep.worker = 1;
    sweep.event_time = 99;
    sweep.report = {1, 2, 3};
    sweep.before = {5, 5, 5};
    sweep.after = {4, 3, 2};
    report.sweep_log = {sweep};

    const auto dir = std::filesystem::temp_directory_path() / "streamrec_eval_test";
    std::filesystem::remove_all(dir);
    write_report(dir, report, "# header line\n");
    CHECK(slurp(dir / "recall.csv") ==
          "seq,worker,hit,moving_avg\n0,0,1,1\n1,1,0,0.5\n2,0,1,0.5\n");
    CHECK(slurp(dir / "state.csv") ==
          "seq,worker,user_entries,item_entries,pair_entries\n2,0,1,2,0\n2,1,3,4,5\n");
    CHECK(slurp(dir / "sweeps.csv") ==
          "seq,worker,event_time,users_evicted,items_evicted,pairs_evicted,users_after,"
          "items_after,pairs_after\n1,1,99,1,2,3,4,3,2\n");
    const auto summary = slurp(dir / "summary.txt");
    CHECK(summary.rfind("# header line\n", 0) == 0);
    CHECK(summary.find("cumulative_recall = 0.6666666666666666") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("format_real round trips") {
    CHECK(format_real(0.5) == "0.5");
    CHECK(format_real(1.0) == "1");
    Rng rng(3);
    for (int n = 0; n < 1000; ++n) {
        const double x = rng.normal(0.0, 100.0);
        REQUIRE(std::stod(format_real(x)) == x);
    }
}
