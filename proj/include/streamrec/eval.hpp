#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "streamrec/core.hpp"
#include "streamrec/forgetting.hpp"
#include "streamrec/usage.hpp"

namespace streamrec {

struct EvalRecord {
    Seq seq = 0;
    WorkerId worker = 0;
    std::uint8_t hit = 0;
    std::uint32_t rec_list_len = 0;
    std::uint64_t latency_ns = 0;
    Timestamp event_time = 0;
};

struct PrequentialOutcome {
    std::uint8_t hit = 0;
    std::uint32_t rec_list_len = 0;
};

/// Test-then-train: the list is produced before the event reaches the
/// model, so an event can never score off its own update.
template <typename Learner>
PrequentialOutcome prequential_step(Learner& learner, const RatingEvent& event, std::size_t n) {
    const auto recommended = learner.recommend(event.user_id, n);
    PrequentialOutcome outcome;
    outcome.rec_list_len = static_cast<std::uint32_t>(recommended.size());
    outcome.hit = std::find(recommended.begin(), recommended.end(), event.item_id) !=
                          recommended.end()
                      ? 1
                      : 0;
    learner.learn(event);
    return outcome;
}

/// Position i holds the mean of the last min(i + 1, window) hits.
std::vector<double> moving_average(std::span<const std::uint8_t> hits, std::size_t window);

/// Incremental form of `moving_average` for the metrics sink.
class MovingRecall {
public:
    explicit MovingRecall(std::size_t window) : window_(window), ring_(window, 0) {}
    double push(std::uint8_t hit);

private:
    std::size_t window_;
    std::vector<std::uint8_t> ring_;
    std::size_t count_ = 0;
    std::uint64_t hits_in_window_ = 0;
};

struct RecallPoint {
    Seq seq = 0;
    WorkerId worker = 0;
    std::uint8_t hit = 0;
    double moving_avg = 0.0;
};

struct StateSnapshot {
    Seq seq = 0;
    WorkerId worker = 0;
    StateCounts counts;
};

struct SweepRecord {
    Seq seq = 0;
    WorkerId worker = 0;
    Timestamp event_time = 0;
    SweepReport report;
    /// Entry counts right before and after the sweep.
    StateCounts before;
    StateCounts after;
};

struct LatencySummary {
    std::uint64_t p50_ns = 0;
    std::uint64_t p95_ns = 0;
    std::uint64_t p99_ns = 0;
};

struct MetricsReport {
    std::vector<RecallPoint> recall_series;
    std::uint64_t events = 0;
    std::uint64_t warmup_events = 0;
    double cumulative_recall = 0.0;
    double warmup_recall = 0.0;
    double post_warmup_recall = 0.0;
    double throughput_eps = 0.0;
    double elapsed_seconds = 0.0;
    LatencySummary latency;
    std::vector<std::uint64_t> events_per_worker;
    std::vector<StateSnapshot> state_snapshots;
    std::vector<SweepRecord> sweep_log;

    std::vector<std::uint8_t> hits() const;
    /// Mean of user + item + pair entries over all snapshot rows.
    double mean_state_size() const;
    /// Rows of the last snapshot, one per worker.
    std::vector<StateSnapshot> final_state() const;
};

/// Nearest-rank percentiles.
LatencySummary latency_percentiles(std::vector<std::uint64_t> latencies_ns);

/// Builds the aggregate figures from seq-ordered records. Latency, elapsed
/// time and throughput are filled by the caller.
MetricsReport summarize(std::span<const EvalRecord> ordered, std::size_t window,
                        double warmup_fraction, std::uint32_t workers);

/// Writes recall.csv, state.csv, sweeps.csv and summary.txt. `preamble` is
/// copied verbatim to the top of summary.txt.
void write_report(const std::filesystem::path& dir, const MetricsReport& report,
                  const std::string& preamble);

std::string recall_csv(const MetricsReport& report);
std::string state_csv(const MetricsReport& report);
std::string sweeps_csv(const MetricsReport& report);
std::string summary_text(const MetricsReport& report);

/// Shortest round-trip decimal form.
std::string format_real(double value);

}  // namespace streamrec
