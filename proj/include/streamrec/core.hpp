#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace streamrec {

using UserId = std::uint64_t;
using ItemId = std::uint64_t;
using WorkerId = std::uint32_t;
using Seq = std::uint64_t;
using Timestamp = std::int64_t;

/// One timestamped user-item interaction, the unit of streaming work.
struct RatingEvent {
    Seq seq = 0;
    UserId user_id = 0;
    ItemId item_id = 0;
    double rating = 1.0;
    Timestamp timestamp = 0;

    friend bool operator==(const RatingEvent&, const RatingEvent&) = default;
};

enum class Algo { ISGD, DICS };
enum class ForgettingKind { NONE, LFU, LRU };

struct ForgettingPolicy {
    ForgettingKind kind = ForgettingKind::NONE;
    // LFU: sweep every `lfu_trigger_count` stream events, evict entities seen
    // fewer than `lfu_min_frequency` times.
    std::uint64_t lfu_trigger_count = 10000;
    std::uint64_t lfu_min_frequency = 2;
    // LRU: sweep every `lru_trigger_interval` event-time seconds, evict
    // entities idle for more than `lru_max_age` seconds.
    std::int64_t lru_trigger_interval = 86400;
    std::int64_t lru_max_age = 30 * 86400;
    // Per-class overrides; 0 means "use the shared threshold".
    std::uint64_t lfu_user_min_frequency = 0;
    std::uint64_t lfu_item_min_frequency = 0;
    std::int64_t lru_user_max_age = 0;
    std::int64_t lru_item_max_age = 0;

    std::uint64_t user_min_frequency() const {
        return lfu_user_min_frequency ? lfu_user_min_frequency : lfu_min_frequency;
    }
    std::uint64_t item_min_frequency() const {
        return lfu_item_min_frequency ? lfu_item_min_frequency : lfu_min_frequency;
    }
    std::int64_t user_max_age() const { return lru_user_max_age ? lru_user_max_age : lru_max_age; }
    std::int64_t item_max_age() const { return lru_item_max_age ? lru_item_max_age : lru_max_age; }
};

struct EngineConfig {
    Algo algo = Algo::ISGD;
    std::uint32_t n_i = 1;
    std::uint32_t w = 0;
    std::uint32_t k = 10;
    double eta = 0.05;
    double lambda = 0.01;
    std::uint32_t top_n = 10;
    std::uint32_t window = 5000;
    std::uint32_t neighbors_k = 10;
    ForgettingPolicy forgetting;
    std::uint64_t seed = 42;
    std::uint64_t telemetry_every = 5000;
    std::size_t queue_capacity = 4096;
    double warmup_fraction = 0.2;
    bool sequential_update = false;
    bool rank_by_distance_to_one = false;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Worker count of an n_i x (n_i + w) grid.
constexpr std::uint64_t derive_cluster_size(std::uint64_t n_i, std::uint64_t w) {
    return n_i * (n_i + w);
}

/// Throws ConfigError naming the first violated constraint.
void validate(const EngineConfig& config);

std::string_view to_string(Algo algo);
std::string_view to_string(ForgettingKind kind);
Algo parse_algo(std::string_view text);
ForgettingKind parse_forgetting(std::string_view text);

/// Assigns one `key = value` setting. Keys use the CLI flag spelling without
/// the leading dashes (`ni`, `lfu-min-freq`, ...). Throws ConfigError on an
/// unknown key or unparsable value.
void apply_setting(EngineConfig& config, std::string_view key, std::string_view value);

/// Parses a flat `key = value` file (`#` starts a comment). Keys that are not
/// EngineConfig fields are returned instead of rejected so callers can route
/// them (dataset paths and similar).
std::map<std::string, std::string> load_config_file(const std::string& path, EngineConfig& config);

/// Every effective setting, one `key = value` per line, in a fixed order.
std::string describe(const EngineConfig& config);

/// Deterministic generator: std::mt19937_64 (output fully specified by the
/// standard) plus hand-written transforms, since the standard distributions
/// are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for one worker.
    static Rng for_worker(std::uint64_t seed, WorkerId worker);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Box-Muller, caching the second variate.
    double normal(double mean, double stddev);
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace streamrec
