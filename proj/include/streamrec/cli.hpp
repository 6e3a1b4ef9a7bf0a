#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "streamrec/core.hpp"
#include "streamrec/eval.hpp"
#include "streamrec/ingest.hpp"

namespace streamrec {

/// Everything needed to reproduce one run; written to manifest.txt before
/// processing starts and echoed at the top of summary.txt.
struct RunManifest {
    EngineConfig config;
    DatasetSpec dataset;
    std::string build_id;
    std::string start_time;
    std::filesystem::path output_dir;
    unsigned threads = 0;

    std::string text() const;
};

/// Loads the dataset, runs the engine and writes the run directory.
/// Returns the report; throws on I/O or configuration failure.
MetricsReport execute_run(RunManifest manifest, const std::vector<RatingEvent>& stream,
                          std::ostream& log);

/// Entry point of the `streamrec` tool. `args` excludes the program name.
/// Exit codes: 0 success, 1 run/I-O failure, 2 usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker thread cap from STREAMREC_THREADS (0 when unset or invalid).
unsigned threads_from_env();

std::string build_id();

}  // namespace streamrec
