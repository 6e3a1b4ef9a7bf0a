#include <benchmark/benchmark.h>

#include "streamrec/engine.hpp"
#include "streamrec/ingest.hpp"

using namespace streamrec;

namespace {

const std::vector<RatingEvent>& stream() {
    static const auto events = [] {
        SyntheticSpec spec;
        spec.events = 20000;
        spec.users = 4000;
        spec.items = 1000;
        return preprocess(generate_synthetic(spec));
    }();
    return events;
}

EngineConfig config(std::int64_t algo, std::int64_t n_i) {
    EngineConfig c;
    c.algo = algo == 0 ? Algo::ISGD : Algo::DICS;
    c.n_i = static_cast<std::uint32_t>(n_i);
    return c;
}

void BM_Reference(benchmark::State& state) {
    const auto c = config(state.range(0), state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_reference(c, stream()).cumulative_recall);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream().size()));
}

void BM_Threaded(benchmark::State& state) {
    const auto c = config(state.range(0), state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(c, stream()).cumulative_recall);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream().size()));
}

// Args: algorithm (0 isgd, 1 dics), n_i. Wall time, since the threaded run
// works off the calling thread.
BENCHMARK(BM_Reference)->ArgsProduct({{0, 1}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Threaded)->ArgsProduct({{0, 1}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
