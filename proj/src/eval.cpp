#include "streamrec/eval.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace streamrec {

std::string format_real(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::vector<double> moving_average(std::span<const std::uint8_t> hits, std::size_t window) {
    if (window == 0) {
        throw std::invalid_argument("window must be >= 1");
    }
    MovingRecall recall(window);
    std::vector<double> out;
    out.reserve(hits.size());
    for (const auto hit : hits) {
        out.push_back(recall.push(hit));
    }
    return out;
}

double MovingRecall::push(std::uint8_t hit) {
    const std::size_t pos = count_ % window_;
    if (count_ >= window_) {
        hits_in_window_ -= ring_[pos];
    }
    ring_[pos] = hit;
    hits_in_window_ += hit;
    ++count_;
    const std::size_t width = std::min(count_, window_);
    return static_cast<double>(hits_in_window_) / static_cast<double>(width);
}

std::vector<std::uint8_t> MetricsReport::hits() const {
    std::vector<std::uint8_t> out;
    out.reserve(recall_series.size());
    for (const auto& p : recall_series) {
        out.push_back(p.hit);
    }
    return out;
}

double MetricsReport::mean_state_size() const {
    if (state_snapshots.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& s : state_snapshots) {
        total += static_cast<double>(s.counts.users + s.counts.items + s.counts.pairs);
    }
    return total / static_cast<double>(state_snapshots.size());
}

std::vector<StateSnapshot> MetricsReport::final_state() const {
    std::vector<StateSnapshot> out;
    if (state_snapshots.empty()) {
        return out;
    }
    const Seq last = state_snapshots.back().seq;
    for (const auto& s : state_snapshots) {
        if (s.seq == last) {
            out.push_back(s);
        }
    }
    return out;
}

LatencySummary latency_percentiles(std::vector<std::uint64_t> latencies) {
    LatencySummary out;
    if (latencies.empty()) {
        return out;
    }
    std::sort(latencies.begin(), latencies.end());
    const auto rank = [&](double q) {
        const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(latencies.size())));
        return latencies[std::max<std::size_t>(r, 1) - 1];
    };
    out.p50_ns = rank(0.50);
    out.p95_ns = rank(0.95);
    out.p99_ns = rank(0.99);
    return out;
}

MetricsReport summarize(std::span<const EvalRecord> ordered, std::size_t window,
                        double warmup_fraction, std::uint32_t workers) {
    MetricsReport report;
    report.events = ordered.size();
    report.events_per_worker.assign(workers, 0);
    report.warmup_events = static_cast<std::uint64_t>(
        std::floor(warmup_fraction * static_cast<double>(ordered.size())));

    MovingRecall moving(window);
    std::uint64_t total_hits = 0;
    std::uint64_t warmup_hits = 0;
    std::vector<std::uint64_t> latencies;
    latencies.reserve(ordered.size());
    report.recall_series.reserve(ordered.size());
    for (std::size_t pos = 0; pos < ordered.size(); ++pos) {
        const auto& r = ordered[pos];
        report.recall_series.push_back({r.seq, r.worker, r.hit, moving.push(r.hit)});
        total_hits += r.hit;
        if (pos < report.warmup_events) {
            warmup_hits += r.hit;
        }
        if (r.worker < workers) {
            ++report.events_per_worker[r.worker];
        }
        latencies.push_back(r.latency_ns);
    }
    const auto ratio = [](std::uint64_t num, std::uint64_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    report.cumulative_recall = ratio(total_hits, report.events);
    report.warmup_recall = ratio(warmup_hits, report.warmup_events);
    report.post_warmup_recall =
        ratio(total_hits - warmup_hits, report.events - report.warmup_events);
    report.latency = latency_percentiles(std::move(latencies));
    return report;
}

std::string recall_csv(const MetricsReport& report) {
    std::string out = "seq,worker,hit,moving_avg\n";
    for (const auto& p : report.recall_series) {
        out += std::to_string(p.seq);
        out += ',';
        out += std::to_string(p.worker);
        out += ',';
        out += p.hit ? '1' : '0';
        out += ',';
        out += format_real(p.moving_avg);
        out += '\n';
    }
    return out;
}

std::string state_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "seq,worker,user_entries,item_entries,pair_entries\n";
    for (const auto& s : report.state_snapshots) {
        out << s.seq << ',' << s.worker << ',' << s.counts.users << ',' << s.counts.items << ','
            << s.counts.pairs << '\n';
    }
    return out.str();
}

std::string sweeps_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "seq,worker,event_time,users_evicted,items_evicted,pairs_evicted,"
           "users_after,items_after,pairs_after\n";
    for (const auto& s : report.sweep_log) {
        out << s.seq << ',' << s.worker << ',' << s.event_time << ',' << s.report.users_evicted
            << ',' << s.report.items_evicted << ',' << s.report.pairs_evicted << ','
            << s.after.users << ',' << s.after.items << ',' << s.after.pairs << '\n';
    }
    return out.str();
}

std::string summary_text(const MetricsReport& report) {
    std::ostringstream out;
    out << "events = " << report.events << '\n'
        << "warmup_events = " << report.warmup_events << '\n'
        << "cumulative_recall = " << format_real(report.cumulative_recall) << '\n'
        << "warmup_recall = " << format_real(report.warmup_recall) << '\n'
        << "post_warmup_recall = " << format_real(report.post_warmup_recall) << '\n'
        << "final_moving_recall = "
        << format_real(report.recall_series.empty() ? 0.0 : report.recall_series.back().moving_avg)
        << '\n'
        << "throughput_eps = " << format_real(report.throughput_eps) << '\n'
        << "elapsed_seconds = " << format_real(report.elapsed_seconds) << '\n'
        << "latency_p50_ns = " << report.latency.p50_ns << '\n'
        << "latency_p95_ns = " << report.latency.p95_ns << '\n'
        << "latency_p99_ns = " << report.latency.p99_ns << '\n'
        << "sweeps = " << report.sweep_log.size() << '\n'
        << "mean_state_size = " << format_real(report.mean_state_size()) << '\n';
    out << "events_per_worker =";
    for (const auto n : report.events_per_worker) {
        out << ' ' << n;
    }
    out << '\n';
    return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << body;
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

}  // namespace

void write_report(const std::filesystem::path& dir, const MetricsReport& report,
                  const std::string& preamble) {
    std::filesystem::create_directories(dir);
    write_file(dir / "recall.csv", recall_csv(report));
    write_file(dir / "state.csv", state_csv(report));
    write_file(dir / "sweeps.csv", sweeps_csv(report));
    std::string summary = preamble;
    if (!summary.empty() && summary.back() != '\n') {
        summary += '\n';
    }
    summary += summary_text(report);
    write_file(dir / "summary.txt", summary);
}

}  // namespace streamrec
