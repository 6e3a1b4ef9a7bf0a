#include "streamrec/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "streamrec/engine.hpp"
#include "streamrec/validate.hpp"

#ifndef STREAMREC_BUILD_ID
#define STREAMREC_BUILD_ID "unknown"
#endif

namespace streamrec {

namespace {

struct FlagInfo {
    const char* key;
    const char* help;
};

constexpr FlagInfo kEngineFlags[] = {
    {"algo", "Recommender: isgd or dics"},
    {"ni", "Replication factor n_i (item splits)"},
    {"w", "Width spare; user splits = ni + w"},
    {"k", "Latent dimension"},
    {"eta", "Learning rate"},
    {"lambda", "Regularization"},
    {"topn", "Recommendation list size N"},
    {"window", "Moving-average width"},
    {"neighbors-k", "DICS neighborhood size"},
    {"forgetting", "none, lru or lfu"},
    {"lfu-trigger", "LFU: sweep every c events"},
    {"lfu-min-freq", "LFU: evict entities seen fewer times"},
    {"lfu-min-freq-users", "LFU threshold override for users"},
    {"lfu-min-freq-items", "LFU threshold override for items"},
    {"lru-interval", "LRU: sweep every t event-time seconds"},
    {"lru-max-age", "LRU: evict entities idle longer (seconds)"},
    {"lru-max-age-users", "LRU max-age override for users"},
    {"lru-max-age-items", "LRU max-age override for items"},
    {"seed", "RNG seed"},
    {"telemetry-every", "State snapshot period in events"},
    {"queue-capacity", "Bounded queue capacity"},
    {"warmup-fraction", "Fraction of the stream reported as warmup"},
    {"sequential-update", "Update the item with the already-updated user vector"},
    {"rank-by-distance-to-one", "ISGD: rank by |1 - score| instead of score"},
};

constexpr FlagInfo kDatasetFlags[] = {
    {"dataset", "Ratings file or directory"},
    {"format", "movielens, netflix or synthetic"},
    {"min-rating", "Keep ratings >= this value"},
    {"item-allowlist", "File of item ids to keep"},
    {"out", "Output directory"},
    {"synthetic-users", "Synthetic stream: users"},
    {"synthetic-items", "Synthetic stream: items"},
    {"synthetic-events", "Synthetic stream: events"},
    {"synthetic-zipf", "Synthetic stream: item popularity Zipf exponent"},
    {"synthetic-user-zipf", "Synthetic stream: user activity Zipf exponent"},
    {"synthetic-clusters", "Synthetic stream: taste clusters"},
    {"synthetic-affinity", "Synthetic stream: in-cluster probability"},
    {"synthetic-seed", "Synthetic stream: generator seed"},
};

struct SharedFlags {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string config_path;
};

void add_shared_flags(CLI::App* cmd, SharedFlags& flags) {
    for (const auto& f : kEngineFlags) {
        flags.options[f.key] = cmd->add_option(std::string("--") + f.key, flags.values[f.key], f.help);
    }
    for (const auto& f : kDatasetFlags) {
        std::string names = std::string("--") + f.key;
        if (names == "--format") {
            names += ",--dataset-format";
        }
        flags.options[f.key] = cmd->add_option(names, flags.values[f.key], f.help);
    }
    cmd->add_option("--config", flags.config_path, "key = value configuration file");
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw ConfigError("invalid value '" + text + "' for " + key);
    }
    return value;
}

struct Resolved {
    EngineConfig config;
    DatasetSpec dataset;
    std::optional<std::filesystem::path> out;
};

Resolved resolve(const SharedFlags& flags) {
    Resolved r;
    std::map<std::string, std::string> file_values;
    if (!flags.config_path.empty()) {
        file_values = load_config_file(flags.config_path, r.config);
    }
    for (const auto& [key, value] : file_values) {
        bool known = false;
        for (const auto& f : kDatasetFlags) {
            known = known || key == f.key;
        }
        if (!known) {
            throw ConfigError(flags.config_path + ": unknown setting '" + key + "'");
        }
    }
    for (const auto& f : kEngineFlags) {
        if (flags.options.at(f.key)->count() > 0) {
            apply_setting(r.config, f.key, flags.values.at(f.key));
        }
    }
    const auto lookup = [&](const std::string& key) -> std::optional<std::string> {
        if (flags.options.at(key)->count() > 0) {
            return flags.values.at(key);
        }
        if (const auto it = file_values.find(key); it != file_values.end()) {
            return it->second;
        }
        return std::nullopt;
    };

    auto& d = r.dataset;
    if (auto v = lookup("format")) d.format = parse_format(*v);
    if (auto v = lookup("dataset")) d.path = *v;
    if (auto v = lookup("min-rating")) d.min_rating = parse_value<double>("min-rating", *v);
    if (auto v = lookup("item-allowlist")) d.item_allowlist = *v;
    if (auto v = lookup("synthetic-users")) d.synthetic.users = parse_value<std::uint64_t>("synthetic-users", *v);
    if (auto v = lookup("synthetic-items")) d.synthetic.items = parse_value<std::uint64_t>("synthetic-items", *v);
    if (auto v = lookup("synthetic-events")) d.synthetic.events = parse_value<std::uint64_t>("synthetic-events", *v);
    if (auto v = lookup("synthetic-zipf")) d.synthetic.zipf_exponent = parse_value<double>("synthetic-zipf", *v);
    if (auto v = lookup("synthetic-user-zipf")) d.synthetic.user_zipf_exponent = parse_value<double>("synthetic-user-zipf", *v);
    if (auto v = lookup("synthetic-clusters")) d.synthetic.clusters = parse_value<std::uint32_t>("synthetic-clusters", *v);
    if (auto v = lookup("synthetic-affinity")) d.synthetic.affinity = parse_value<double>("synthetic-affinity", *v);
    if (auto v = lookup("synthetic-seed")) d.synthetic.seed = parse_value<std::uint64_t>("synthetic-seed", *v);
    if (auto v = lookup("out")) r.out = *v;
    if (d.format != DatasetFormat::Synthetic && d.path.empty()) {
        throw ConfigError("--dataset is required for format " + std::string(to_string(d.format)));
    }
    validate(r.config);
    return r;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string dataset_text(const DatasetSpec& d) {
    std::ostringstream out;
    out << "dataset.format = " << to_string(d.format) << '\n';
    if (d.format == DatasetFormat::Synthetic) {
        out << "dataset.synthetic.users = " << d.synthetic.users << '\n'
            << "dataset.synthetic.items = " << d.synthetic.items << '\n'
            << "dataset.synthetic.events = " << d.synthetic.events << '\n'
            << "dataset.synthetic.zipf = " << format_real(d.synthetic.zipf_exponent) << '\n'
            << "dataset.synthetic.user_zipf = " << format_real(d.synthetic.user_zipf_exponent) << '\n'
            << "dataset.synthetic.clusters = " << d.synthetic.clusters << '\n'
            << "dataset.synthetic.affinity = " << format_real(d.synthetic.affinity) << '\n'
            << "dataset.synthetic.seed = " << d.synthetic.seed << '\n';
    } else {
        out << "dataset.path = " << d.path.string() << '\n';
    }
    out << "dataset.min_rating = " << format_real(d.min_rating) << '\n';
    if (d.item_allowlist) {
        out << "dataset.item_allowlist = " << d.item_allowlist->string() << '\n';
    }
    return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << body)) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

int cmd_run(const SharedFlags& flags, std::ostream& out, std::ostream& err) {
    Resolved r;
    try {
        r = resolve(flags);
        if (!r.out) {
            throw ConfigError("--out is required");
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    try {
        const auto stream = load_stream(r.dataset);
        RunManifest manifest{r.config, r.dataset, build_id(), utc_now(), *r.out, threads_from_env()};
        const auto report = execute_run(manifest, stream, out);
        (void)report;
        return 0;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

struct GridEntry {
    std::string name;
    std::vector<std::pair<std::string, std::string>> settings;
};

std::vector<GridEntry> load_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open grid file " + path.string());
    }
    std::vector<GridEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        std::istringstream tokens(line);
        GridEntry entry;
        if (!(tokens >> entry.name)) {
            continue;
        }
        if (entry.name.find('=') != std::string::npos || entry.name.find('/') != std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": line must start with a configuration name");
        }
        std::string token;
        while (tokens >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value, got '" + token + "'");
            }
            entry.settings.emplace_back(token.substr(0, eq), token.substr(eq + 1));
        }
        for (const auto& other : entries) {
            if (other.name == entry.name) {
                throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": duplicate name " + entry.name);
            }
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

int cmd_sweep_grid(const SharedFlags& flags, const std::string& grid_path, std::ostream& out,
                   std::ostream& err) {
    Resolved base;
    std::vector<GridEntry> grid;
    std::vector<EngineConfig> configs;
    try {
        base = resolve(flags);
        if (!base.out) {
            throw ConfigError("--out is required");
        }
        grid = load_grid(grid_path);
        if (grid.empty()) {
            throw ConfigError("grid file " + grid_path + " lists no configurations");
        }
        for (const auto& entry : grid) {
            EngineConfig c = base.config;
            for (const auto& [key, value] : entry.settings) {
                apply_setting(c, key, value);
            }
            validate(c);
            configs.push_back(c);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    std::vector<RatingEvent> stream;
    try {
        stream = load_stream(base.dataset);
        std::filesystem::create_directories(*base.out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    std::string comparison = "config,cumulative_recall,throughput_eps,mean_state_size\n";
    int failures = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        RunManifest manifest{configs[g], base.dataset, build_id(), utc_now(),
                             *base.out / grid[g].name, threads_from_env()};
        try {
            const auto report = execute_run(manifest, stream, out);
            comparison += grid[g].name + ',' + format_real(report.cumulative_recall) + ',' +
                          format_real(report.throughput_eps) + ',' +
                          format_real(report.mean_state_size()) + '\n';
        } catch (const std::exception& e) {
            ++failures;
            err << "error: configuration " << grid[g].name << " failed: " << e.what() << '\n';
            comparison += grid[g].name + ",failed,failed,failed\n";
        }
    }
    try {
        write_text(*base.out / "comparison.csv", comparison);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    out << "grid: " << grid.size() - failures << "/" << grid.size() << " configurations succeeded\n";
    return failures == 0 ? 0 : 1;
}

int cmd_validate(const std::vector<std::string>& suites, double fault_offset, std::ostream& out) {
    const auto wanted = [&](const std::string& name) {
        if (suites.empty()) {
            return true;
        }
        for (const auto& s : suites) {
            if (s == name || s == "all") {
                return true;
            }
        }
        return false;
    };
    std::vector<SuiteResult> results;
    if (wanted("routing")) results.push_back(validate_routing());
    if (wanted("isgd")) results.push_back(validate_isgd());
    if (wanted("similarity")) results.push_back(validate_similarity(1, 5000, 500, fault_offset));

    bool ok = true;
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.checks << " checks)";
        if (!r.passed) {
            out << ": counterexample: " << r.detail;
            ok = false;
        }
        out << '\n';
    }
    return ok ? 0 : 1;
}

}  // namespace

std::string build_id() {
    return STREAMREC_BUILD_ID;
}

unsigned threads_from_env() {
    const char* raw = std::getenv("STREAMREC_THREADS");
    if (raw == nullptr) {
        return 0;
    }
    const std::string_view text(raw);
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return 0;
    }
    return value;
}

std::string RunManifest::text() const {
    std::ostringstream out;
    out << "build = " << build_id << '\n'
        << "start_time = " << start_time << '\n'
        << "output_dir = " << output_dir.string() << '\n'
        << "threads = " << (threads == 0 ? std::string("per-worker") : std::to_string(threads))
        << '\n'
        << describe(config) << dataset_text(dataset);
    return out.str();
}

MetricsReport execute_run(RunManifest manifest, const std::vector<RatingEvent>& stream,
                          std::ostream& log) {
    std::filesystem::create_directories(manifest.output_dir);
    const std::string manifest_text = manifest.text();
    write_text(manifest.output_dir / "manifest.txt", manifest_text);

    RunOptions options;
    options.threads = manifest.threads;
    const auto report = run(manifest.config, stream, options);

    const std::string preamble = manifest_text + "end_time = " + utc_now() + '\n';
    write_report(manifest.output_dir, report, preamble);
    log << manifest.output_dir.string() << ": " << report.events << " events, recall "
        << format_real(report.cumulative_recall) << ", " << format_real(report.throughput_eps)
        << " events/s\n";
    return report;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Distributed streaming recommender with splitting and replication"};
    app.require_subcommand(1);

    SharedFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "Run one configuration end-to-end");
    add_shared_flags(run_cmd, run_flags);

    SharedFlags grid_flags;
    std::string grid_path;
    auto* grid_cmd = app.add_subcommand("sweep-grid", "Run every configuration of a grid file");
    add_shared_flags(grid_cmd, grid_flags);
    grid_cmd->add_option("--grid", grid_path, "Grid file: one `name key=value ...` per line")
        ->required();

    std::vector<std::string> suites;
    double fault_offset = 0.0;
    auto* validate_cmd = app.add_subcommand("validate", "Run the oracle suites");
    validate_cmd->add_option("--suite", suites, "routing, isgd, similarity or all")
        ->check(CLI::IsMember({"routing", "isgd", "similarity", "all"}));
    validate_cmd->add_option("--debug-similarity-offset", fault_offset,
                             "Perturb reported similarities (fault injection)");

    std::vector<std::string> argv_storage{"streamrec"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) {
        argv.push_back(a.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    if (run_cmd->parsed()) {
        return cmd_run(run_flags, out, err);
    }
    if (grid_cmd->parsed()) {
        return cmd_sweep_grid(grid_flags, grid_path, out, err);
    }
    return cmd_validate(suites, fault_offset, out);
}

}  // namespace streamrec
