#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "streamrec/core.hpp"
#include "streamrec/cosine.hpp"
#include "streamrec/eval.hpp"
#include "streamrec/isgd.hpp"
#include "streamrec/router.hpp"

namespace streamrec {

struct WorkerEnvelope {
    RatingEvent event;
    WorkerId worker = 0;
    /// Zero-based stream position; drives the count-based sweep trigger.
    std::uint64_t position = 0;
};

/// One shared-nothing worker: its model, its generator and its forgetting
/// clock. Only the owning thread touches it.
class Worker {
public:
    Worker(const EngineConfig& config, WorkerId id);

    struct StepResult {
        EvalRecord record;
        std::optional<SweepRecord> sweep;
    };

    /// recommend -> score -> train -> forgetting check.
    StepResult process(const WorkerEnvelope& envelope);

    WorkerId id() const { return id_; }
    StateCounts counts() const;

    IsgdLearner* isgd() { return std::get_if<IsgdLearner>(&learner_); }
    DicsLearner* dics() { return std::get_if<DicsLearner>(&learner_); }
    const IsgdLearner* isgd() const { return std::get_if<IsgdLearner>(&learner_); }
    const DicsLearner* dics() const { return std::get_if<DicsLearner>(&learner_); }

private:
    SweepReport run_sweep(Timestamp now);

    WorkerId id_;
    std::size_t top_n_;
    ForgettingPolicy policy_;
    std::variant<IsgdLearner, DicsLearner> learner_;
    std::uint64_t sweep_mark_ = 0;
    Timestamp last_sweep_time_ = 0;
    bool clock_started_ = false;
};

struct WorkerOutput {
    std::vector<EvalRecord> records;
    std::vector<SweepRecord> sweeps;
};

/// Processes an ordered inbox on one worker.
WorkerOutput worker_loop(Worker& worker, std::span<const WorkerEnvelope> inbox);

/// Per-worker entry counts at `seq`, ordered by worker id.
std::vector<StateSnapshot> snapshot_state(std::span<const Worker> workers, Seq seq);

struct RunOptions {
    /// Worker threads; 0 means one per worker. Fewer threads than workers
    /// time-multiplex workers (worker w runs on thread w mod threads).
    unsigned threads = 0;
};

class RunAborted : public std::runtime_error {
public:
    RunAborted(const std::string& what, MetricsReport partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const MetricsReport& partial() const { return partial_; }

private:
    MetricsReport partial_;
};

/// Threaded engine: the calling thread routes events into bounded per-thread
/// queues, worker threads run prequential steps, and a sink thread restores
/// seq order. Events must have strictly increasing seq.
MetricsReport run(const EngineConfig& config, std::span<const RatingEvent> stream,
                  const RunOptions& options = {});

/// Single-threaded reference with the same routing and per-worker logic.
MetricsReport run_reference(const EngineConfig& config, std::span<const RatingEvent> stream);

}  // namespace streamrec
