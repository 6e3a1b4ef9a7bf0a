#include "streamrec/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace streamrec {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string normalize_key(std::string_view key) {
    std::string out(trim(key));
    for (auto& c : out) {
        if (c == '_') {
            c = '-';
        }
    }
    return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    text = trim(text);
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
    text = trim(text);
    if (text == "1" || text == "true" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "0" || text == "false" || text == "no" || text == "off") {
        return false;
    }
    throw ConfigError("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

void validate(const EngineConfig& c) {
    if (c.n_i < 1) throw ConfigError("ni must be >= 1");
    if (c.k < 1) throw ConfigError("k must be >= 1");
    if (!(c.eta > 0.0) || !std::isfinite(c.eta)) throw ConfigError("eta must be > 0");
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw ConfigError("lambda must be >= 0");
    if (c.top_n < 1) throw ConfigError("topn must be >= 1");
    if (c.window < 1) throw ConfigError("window must be >= 1");
    if (c.neighbors_k < 1) throw ConfigError("neighbors-k must be >= 1");
    if (c.telemetry_every < 1) throw ConfigError("telemetry-every must be >= 1");
    if (c.queue_capacity < 1) throw ConfigError("queue-capacity must be >= 1");
    if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction <= 1.0)) {
        throw ConfigError("warmup-fraction must be in [0, 1]");
    }
    const auto& f = c.forgetting;
    if (f.kind == ForgettingKind::LFU) {
        if (f.lfu_trigger_count < 1) throw ConfigError("lfu-trigger must be > 0");
        if (f.lfu_min_frequency < 1) throw ConfigError("lfu-min-freq must be > 0");
    }
    if (f.kind == ForgettingKind::LRU) {
        if (f.lru_trigger_interval < 1) throw ConfigError("lru-interval must be > 0");
        if (f.lru_max_age < 1) throw ConfigError("lru-max-age must be > 0");
        if (f.lru_user_max_age < 0 || f.lru_item_max_age < 0) {
            throw ConfigError("lru-max-age overrides must be >= 0");
        }
    }
}

std::string_view to_string(Algo algo) {
    return algo == Algo::ISGD ? "isgd" : "dics";
}

std::string_view to_string(ForgettingKind kind) {
    switch (kind) {
        case ForgettingKind::LFU: return "lfu";
        case ForgettingKind::LRU: return "lru";
        case ForgettingKind::NONE: break;
    }
    return "none";
}

Algo parse_algo(std::string_view text) {
    text = trim(text);
    if (text == "isgd" || text == "ISGD") return Algo::ISGD;
    if (text == "dics" || text == "DICS") return Algo::DICS;
    throw ConfigError("unknown algo '" + std::string(text) + "' (expected isgd or dics)");
}

ForgettingKind parse_forgetting(std::string_view text) {
    text = trim(text);
    if (text == "none") return ForgettingKind::NONE;
    if (text == "lfu") return ForgettingKind::LFU;
    if (text == "lru") return ForgettingKind::LRU;
    throw ConfigError("unknown forgetting '" + std::string(text) + "' (expected none, lru or lfu)");
}

namespace {

bool try_apply_setting(EngineConfig& c, const std::string& key, std::string_view value) {
    auto& f = c.forgetting;
    if (key == "algo") c.algo = parse_algo(value);
    else if (key == "ni") c.n_i = parse_number<std::uint32_t>(key, value);
    else if (key == "w") c.w = parse_number<std::uint32_t>(key, value);
    else if (key == "k") c.k = parse_number<std::uint32_t>(key, value);
    else if (key == "eta") c.eta = parse_number<double>(key, value);
    else if (key == "lambda") c.lambda = parse_number<double>(key, value);
    else if (key == "topn") c.top_n = parse_number<std::uint32_t>(key, value);
    else if (key == "window") c.window = parse_number<std::uint32_t>(key, value);
    else if (key == "neighbors-k") c.neighbors_k = parse_number<std::uint32_t>(key, value);
    else if (key == "forgetting") f.kind = parse_forgetting(value);
    else if (key == "lfu-trigger") f.lfu_trigger_count = parse_number<std::uint64_t>(key, value);
    else if (key == "lfu-min-freq") f.lfu_min_frequency = parse_number<std::uint64_t>(key, value);
    else if (key == "lfu-min-freq-users") f.lfu_user_min_frequency = parse_number<std::uint64_t>(key, value);
    else if (key == "lfu-min-freq-items") f.lfu_item_min_frequency = parse_number<std::uint64_t>(key, value);
    else if (key == "lru-interval") f.lru_trigger_interval = parse_number<std::int64_t>(key, value);
    else if (key == "lru-max-age") f.lru_max_age = parse_number<std::int64_t>(key, value);
    else if (key == "lru-max-age-users") f.lru_user_max_age = parse_number<std::int64_t>(key, value);
    else if (key == "lru-max-age-items") f.lru_item_max_age = parse_number<std::int64_t>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "telemetry-every") c.telemetry_every = parse_number<std::uint64_t>(key, value);
    else if (key == "queue-capacity") c.queue_capacity = parse_number<std::size_t>(key, value);
    else if (key == "warmup-fraction") c.warmup_fraction = parse_number<double>(key, value);
    else if (key == "sequential-update") c.sequential_update = parse_bool(key, value);
    else if (key == "rank-by-distance-to-one") c.rank_by_distance_to_one = parse_bool(key, value);
    else return false;
    return true;
}

}  // namespace

void apply_setting(EngineConfig& c, std::string_view raw_key, std::string_view value) {
    const std::string key = normalize_key(raw_key);
    if (!try_apply_setting(c, key, value)) {
        throw ConfigError("unknown setting '" + key + "'");
    }
}

std::map<std::string, std::string> load_config_file(const std::string& path, EngineConfig& config) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::map<std::string, std::string> extra;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) {
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = normalize_key(view.substr(0, eq));
        const auto value = trim(view.substr(eq + 1));
        try {
            if (!try_apply_setting(config, key, value)) {
                extra[key] = std::string(value);
            }
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return extra;
}

std::string describe(const EngineConfig& c) {
    std::ostringstream out;
    const auto& f = c.forgetting;
    out << "algo = " << to_string(c.algo) << '\n'
        << "ni = " << c.n_i << '\n'
        << "w = " << c.w << '\n'
        << "nc = " << derive_cluster_size(c.n_i, c.w) << '\n'
        << "k = " << c.k << '\n'
        << "eta = " << format_double(c.eta) << '\n'
        << "lambda = " << format_double(c.lambda) << '\n'
        << "topn = " << c.top_n << '\n'
        << "window = " << c.window << '\n'
        << "neighbors-k = " << c.neighbors_k << '\n'
        << "forgetting = " << to_string(f.kind) << '\n'
        << "lfu-trigger = " << f.lfu_trigger_count << '\n'
        << "lfu-min-freq = " << f.lfu_min_frequency << '\n'
        << "lfu-min-freq-users = " << f.user_min_frequency() << '\n'
        << "lfu-min-freq-items = " << f.item_min_frequency() << '\n'
        << "lru-interval = " << f.lru_trigger_interval << '\n'
        << "lru-max-age = " << f.lru_max_age << '\n'
        << "lru-max-age-users = " << f.user_max_age() << '\n'
        << "lru-max-age-items = " << f.item_max_age() << '\n'
        << "seed = " << c.seed << '\n'
        << "telemetry-every = " << c.telemetry_every << '\n'
        << "queue-capacity = " << c.queue_capacity << '\n'
        << "warmup-fraction = " << format_double(c.warmup_fraction) << '\n'
        << "sequential-update = " << (c.sequential_update ? "true" : "false") << '\n'
        << "rank-by-distance-to-one = " << (c.rank_by_distance_to_one ? "true" : "false") << '\n';
    return out.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::for_worker(std::uint64_t seed, WorkerId worker) {
    return Rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(worker) + 1)));
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + stddev * radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) {
        return 0;
    }
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = bound ? (~std::uint64_t{0} - (~std::uint64_t{0} % bound)) : 0;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % bound;
}

}  // namespace streamrec
