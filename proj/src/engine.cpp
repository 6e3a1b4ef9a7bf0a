#include "streamrec/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <queue>
#include <thread>

#include "streamrec/bounded_queue.hpp"

namespace streamrec {

namespace {

using Clock = std::chrono::steady_clock;

std::variant<IsgdLearner, DicsLearner> make_learner(const EngineConfig& config, WorkerId id) {
    if (config.algo == Algo::ISGD) {
        return IsgdLearner(FactorParams::from(config), Rng::for_worker(config.seed, id));
    }
    return DicsLearner(config.neighbors_k);
}

void check_stream(std::span<const RatingEvent> stream) {
    for (std::size_t p = 1; p < stream.size(); ++p) {
        if (stream[p].seq <= stream[p - 1].seq) {
            throw std::invalid_argument("stream seq must be strictly increasing (position " +
                                        std::to_string(p) + ")");
        }
    }
}

bool snapshot_due(const EngineConfig& config, std::size_t position, std::size_t total) {
    return (position + 1) % config.telemetry_every == 0 || position + 1 == total;
}

void order_telemetry(MetricsReport& report) {
    const auto by_seq_worker = [](const auto& a, const auto& b) {
        return a.seq < b.seq || (a.seq == b.seq && a.worker < b.worker);
    };
    std::sort(report.state_snapshots.begin(), report.state_snapshots.end(), by_seq_worker);
    std::sort(report.sweep_log.begin(), report.sweep_log.end(), by_seq_worker);
}

void finish_timing(MetricsReport& report, Clock::time_point start, Clock::time_point end) {
    report.elapsed_seconds = std::chrono::duration<double>(end - start).count();
    report.throughput_eps = report.elapsed_seconds > 0.0
                                ? static_cast<double>(report.events) / report.elapsed_seconds
                                : 0.0;
}

}  // namespace

Worker::Worker(const EngineConfig& config, WorkerId id)
    : id_(id),
      top_n_(config.top_n),
      policy_(config.forgetting),
      learner_(make_learner(config, id)) {}

StateCounts Worker::counts() const {
    return std::visit([](const auto& l) { return l.model().counts(); }, learner_);
}

SweepReport Worker::run_sweep(Timestamp now) {
    return std::visit([&](auto& l) { return sweep(policy_, l.model(), now); }, learner_);
}

Worker::StepResult Worker::process(const WorkerEnvelope& envelope) {
    const auto start = Clock::now();
    const auto& event = envelope.event;
    const auto outcome =
        std::visit([&](auto& l) { return prequential_step(l, event, top_n_); }, learner_);

    StepResult result;
    if (!clock_started_) {
        last_sweep_time_ = event.timestamp;
        clock_started_ = true;
    }
    const std::uint64_t since = envelope.position + 1 - sweep_mark_;
    if (should_sweep(policy_, since, event.timestamp, last_sweep_time_)) {
        SweepRecord record;
        record.seq = event.seq;
        record.worker = id_;
        record.event_time = event.timestamp;
        record.before = counts();
        record.report = run_sweep(event.timestamp);
        record.after = counts();
        result.sweep = record;
        sweep_mark_ = envelope.position + 1;
        last_sweep_time_ = event.timestamp;
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);

    result.record.seq = event.seq;
    result.record.worker = id_;
    result.record.hit = outcome.hit;
    result.record.rec_list_len = outcome.rec_list_len;
    result.record.latency_ns = static_cast<std::uint64_t>(elapsed.count());
    result.record.event_time = event.timestamp;
    return result;
}

WorkerOutput worker_loop(Worker& worker, std::span<const WorkerEnvelope> inbox) {
    WorkerOutput out;
    out.records.reserve(inbox.size());
    for (const auto& envelope : inbox) {
        auto step = worker.process(envelope);
        out.records.push_back(step.record);
        if (step.sweep) {
            out.sweeps.push_back(*step.sweep);
        }
    }
    return out;
}

std::vector<StateSnapshot> snapshot_state(std::span<const Worker> workers, Seq seq) {
    std::vector<StateSnapshot> rows;
    rows.reserve(workers.size());
    for (const auto& w : workers) {
        rows.push_back({seq, w.id(), w.counts()});
    }
    return rows;
}

MetricsReport run_reference(const EngineConfig& config, std::span<const RatingEvent> stream) {
    validate(config);
    check_stream(stream);
    const RoutingPlan plan(config);
    std::vector<Worker> workers;
    workers.reserve(plan.workers());
    for (WorkerId w = 0; w < plan.workers(); ++w) {
        workers.emplace_back(config, w);
    }

    std::vector<EvalRecord> records;
    records.reserve(stream.size());
    std::vector<StateSnapshot> snapshots;
    std::vector<SweepRecord> sweeps;
    const auto start = Clock::now();
    for (std::size_t p = 0; p < stream.size(); ++p) {
        const auto& event = stream[p];
        const WorkerEnvelope envelope{event, plan.route(event.user_id, event.item_id), p};
        auto step = workers[envelope.worker].process(envelope);
        records.push_back(step.record);
        if (step.sweep) {
            sweeps.push_back(*step.sweep);
        }
        if (snapshot_due(config, p, stream.size())) {
            auto rows = snapshot_state(workers, event.seq);
            snapshots.insert(snapshots.end(), rows.begin(), rows.end());
        }
    }
    const auto end = Clock::now();

    auto report = summarize(records, config.window, config.warmup_fraction, plan.workers());
    report.state_snapshots = std::move(snapshots);
    report.sweep_log = std::move(sweeps);
    order_telemetry(report);
    finish_timing(report, start, end);
    return report;
}

namespace {

struct SnapshotRequest {
    Seq seq;
};
using InboxMessage = std::variant<WorkerEnvelope, SnapshotRequest>;
using SinkMessage = std::variant<EvalRecord, StateSnapshot, SweepRecord>;

/// Releases EvalRecords in stream order regardless of arrival order.
class ReorderBuffer {
public:
    explicit ReorderBuffer(std::span<const RatingEvent> stream) : stream_(stream) {
        released_.reserve(stream.size());
    }

    void accept(const EvalRecord& record) {
        pending_.push(record);
        while (!pending_.empty() && next_ < stream_.size() &&
               pending_.top().seq == stream_[next_].seq) {
            released_.push_back(pending_.top());
            pending_.pop();
            ++next_;
        }
    }

    bool complete() const { return next_ == stream_.size(); }
    std::vector<EvalRecord>& released() { return released_; }

private:
    struct LaterSeq {
        bool operator()(const EvalRecord& a, const EvalRecord& b) const { return a.seq > b.seq; }
    };
    std::span<const RatingEvent> stream_;
    std::priority_queue<EvalRecord, std::vector<EvalRecord>, LaterSeq> pending_;
    std::vector<EvalRecord> released_;
    std::size_t next_ = 0;
};

}  // namespace

MetricsReport run(const EngineConfig& config, std::span<const RatingEvent> stream,
                  const RunOptions& options) {
    validate(config);
    check_stream(stream);
    const RoutingPlan plan(config);
    const std::uint32_t n_workers = plan.workers();
    const unsigned n_threads =
        options.threads == 0 ? n_workers : std::min<unsigned>(options.threads, n_workers);

    std::vector<Worker> workers;
    workers.reserve(n_workers);
    for (WorkerId w = 0; w < n_workers; ++w) {
        workers.emplace_back(config, w);
    }

    std::vector<std::unique_ptr<BoundedQueue<InboxMessage>>> inboxes;
    for (unsigned t = 0; t < n_threads; ++t) {
        inboxes.push_back(std::make_unique<BoundedQueue<InboxMessage>>(config.queue_capacity));
    }
    BoundedQueue<SinkMessage> sink_queue(config.queue_capacity);

    std::atomic<bool> aborted{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    const auto fail = [&](std::exception_ptr error) {
        {
            std::lock_guard lock(error_mutex);
            if (!first_error) {
                first_error = error;
            }
        }
        aborted = true;
        for (auto& inbox : inboxes) {
            inbox->close();
        }
        sink_queue.close();
    };

    ReorderBuffer reorder(stream);
    std::vector<StateSnapshot> snapshots;
    std::vector<SweepRecord> sweeps;
    Clock::time_point last_record_time = Clock::now();
    std::thread sink([&] {
        try {
            while (auto message = sink_queue.pop()) {
                if (auto* record = std::get_if<EvalRecord>(&*message)) {
                    reorder.accept(*record);
                    if (reorder.complete()) {
                        last_record_time = Clock::now();
                    }
                } else if (auto* snapshot = std::get_if<StateSnapshot>(&*message)) {
                    snapshots.push_back(*snapshot);
                } else {
                    sweeps.push_back(std::get<SweepRecord>(*message));
                }
            }
        } catch (...) {
            fail(std::current_exception());
        }
    });

    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        threads.emplace_back([&, t] {
            try {
                auto& inbox = *inboxes[t];
                while (auto message = inbox.pop()) {
                    if (auto* envelope = std::get_if<WorkerEnvelope>(&*message)) {
                        auto step = workers[envelope->worker].process(*envelope);
                        if (!sink_queue.push(step.record)) {
                            return;
                        }
                        if (step.sweep && !sink_queue.push(*step.sweep)) {
                            return;
                        }
                    } else {
                        const Seq seq = std::get<SnapshotRequest>(*message).seq;
                        for (WorkerId w = t; w < n_workers; w += n_threads) {
                            if (!sink_queue.push(StateSnapshot{seq, w, workers[w].counts()})) {
                                return;
                            }
                        }
                    }
                }
            } catch (...) {
                fail(std::current_exception());
            }
        });
    }

    const auto start = Clock::now();
    for (std::size_t p = 0; p < stream.size() && !aborted; ++p) {
        const auto& event = stream[p];
        const WorkerId target = plan.route(event.user_id, event.item_id);
        if (!inboxes[target % n_threads]->push(WorkerEnvelope{event, target, p})) {
            break;
        }
        if (snapshot_due(config, p, stream.size())) {
            for (auto& inbox : inboxes) {
                inbox->push(SnapshotRequest{event.seq});
            }
        }
    }
    for (auto& inbox : inboxes) {
        inbox->close();
    }
    for (auto& thread : threads) {
        thread.join();
    }
    sink_queue.close();
    sink.join();

    auto report = summarize(reorder.released(), config.window, config.warmup_fraction, n_workers);
    report.state_snapshots = std::move(snapshots);
    report.sweep_log = std::move(sweeps);
    order_telemetry(report);
    if (first_error) {
        std::string what = "run aborted";
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception& e) {
            what += ": ";
            what += e.what();
        } catch (...) {
        }
        throw RunAborted(what, std::move(report));
    }
    finish_timing(report, start, stream.empty() ? start : last_record_time);
    return report;
}

}  // namespace streamrec
