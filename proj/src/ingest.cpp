#include "streamrec/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

namespace streamrec {

namespace {

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

template <typename T>
bool parse_field(std::string_view text, T& out) {
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end && !text.empty();
}

/// Uniform 1-4 stars for events that are not top-rated.
double low_rating(Rng& rng) {
    return 1.0 + static_cast<double>(rng.below(4));
}

class ZipfSampler {
public:
    ZipfSampler(std::uint64_t n, double exponent) : cdf_(n) {
        double total = 0.0;
        for (std::uint64_t r = 0; r < n; ++r) {
            total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
            cdf_[r] = total;
        }
        for (auto& c : cdf_) {
            c /= total;
        }
    }

    /// Zero-based rank.
    std::uint64_t sample(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf_.begin()),
                                       cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

}  // namespace

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& detail)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + detail), line_(line) {}

void for_each_movielens(const std::filesystem::path& path, const RatingSink& sink) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "userId,movieId,rating,timestamp") {
        throw FormatError(path.string() + ": missing header userId,movieId,rating,timestamp");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = strip_cr(line);
        if (view.empty()) {
            continue;
        }
        const auto fields = split(view, ',');
        if (fields.size() != 4) {
            throw ParseError(path.string(), line_no,
                             "expected 4 fields, got " + std::to_string(fields.size()));
        }
        RawRating r;
        if (!parse_field(fields[0], r.user_id) || !parse_field(fields[1], r.item_id) ||
            !parse_field(fields[2], r.rating) || !parse_field(fields[3], r.timestamp)) {
            throw ParseError(path.string(), line_no, "malformed row '" + std::string(view) + "'");
        }
        sink(r);
    }
}

std::vector<RawRating> load_movielens(const std::filesystem::path& path) {
    std::vector<RawRating> out;
    for_each_movielens(path, [&](const RawRating& r) { out.push_back(r); });
    return out;
}

std::optional<Timestamp> parse_date(std::string_view text) {
    const auto fields = split(text, '-');
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    if (fields.size() != 3 || fields[0].size() != 4 || fields[1].size() != 2 ||
        fields[2].size() != 2 || !parse_field(fields[0], y) || !parse_field(fields[1], m) ||
        !parse_field(fields[2], d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day date{std::chrono::year{y}, std::chrono::month{m},
                                           std::chrono::day{d}};
    if (!date.ok()) {
        return std::nullopt;
    }
    const std::chrono::sys_days days{date};
    return std::chrono::duration_cast<std::chrono::seconds>(days.time_since_epoch()).count();
}

namespace {

void read_netflix_file(const std::filesystem::path& path, const RatingSink& sink) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    std::optional<ItemId> movie;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = strip_cr(line);
        if (view.empty()) {
            continue;
        }
        if (view.back() == ':') {
            ItemId id = 0;
            if (!parse_field(view.substr(0, view.size() - 1), id)) {
                throw ParseError(path.string(), line_no, "bad movie header '" + std::string(view) + "'");
            }
            movie = id;
            continue;
        }
        if (!movie) {
            throw FormatError(path.string() + ": missing '<MovieID>:' header line");
        }
        const auto fields = split(view, ',');
        if (fields.size() != 3) {
            throw ParseError(path.string(), line_no,
                             "expected 3 fields, got " + std::to_string(fields.size()));
        }
        RawRating r;
        r.item_id = *movie;
        const auto date = parse_date(fields[2]);
        if (!parse_field(fields[0], r.user_id) || !parse_field(fields[1], r.rating) || !date) {
            throw ParseError(path.string(), line_no, "malformed row '" + std::string(view) + "'");
        }
        r.timestamp = *date;
        sink(r);
    }
    if (!movie) {
        throw FormatError(path.string() + ": missing '<MovieID>:' header line");
    }
}

}  // namespace

void for_each_netflix(const std::filesystem::path& path, const RatingSink& sink) {
    if (!std::filesystem::is_directory(path)) {
        read_netflix_file(path, sink);
        return;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        read_netflix_file(file, sink);
    }
}

std::vector<RawRating> load_netflix(const std::filesystem::path& path) {
    std::vector<RawRating> out;
    for_each_netflix(path, [&](const RawRating& r) { out.push_back(r); });
    return out;
}

std::vector<RatingEvent> preprocess(std::span<const RawRating> raw, double min_rating) {
    std::vector<std::size_t> kept;
    for (std::size_t p = 0; p < raw.size(); ++p) {
        if (raw[p].rating >= min_rating) {
            kept.push_back(p);
        }
    }
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        return raw[a].timestamp < raw[b].timestamp;
    });
    std::vector<RatingEvent> out;
    out.reserve(kept.size());
    for (const auto p : kept) {
        out.push_back({static_cast<Seq>(out.size()), raw[p].user_id, raw[p].item_id, 1.0,
                       raw[p].timestamp});
    }
    return out;
}

std::vector<RawRating> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.users == 0 || spec.items == 0) {
        throw std::invalid_argument("synthetic stream needs at least one user and one item");
    }
    Rng rng(spec.seed);
    const ZipfSampler user_pop(spec.users, spec.user_zipf_exponent);
    const ZipfSampler item_pop(spec.items, spec.zipf_exponent);
    const std::uint64_t clusters = std::max<std::uint64_t>(1, std::min<std::uint64_t>(spec.clusters, spec.items));
    const std::uint64_t block = std::max<std::uint64_t>(1, spec.items / clusters);
    const ZipfSampler block_pop(block, spec.zipf_exponent);

    // Random relabelings so popular ranks do not line up with small ids.
    std::vector<UserId> user_ids(spec.users);
    std::iota(user_ids.begin(), user_ids.end(), UserId{0});
    std::vector<ItemId> item_ids(spec.items);
    std::iota(item_ids.begin(), item_ids.end(), ItemId{0});
    for (std::size_t j = user_ids.size(); j > 1; --j) {
        std::swap(user_ids[j - 1], user_ids[rng.below(j)]);
    }
    for (std::size_t j = item_ids.size(); j > 1; --j) {
        std::swap(item_ids[j - 1], item_ids[rng.below(j)]);
    }

    std::vector<std::unordered_set<ItemId>> rated(spec.users);
    std::vector<RawRating> out;
    out.reserve(spec.events);
    Timestamp now = spec.start_time;
    constexpr int kMaxRedraws = 32;
    std::uint64_t misses = 0;
    while (out.size() < spec.events) {
        const auto user_rank = user_pop.sample(rng);
        const std::uint64_t cluster = splitmix64(user_rank) % clusters;
        std::uint64_t item_rank = 0;
        bool fresh = false;
        for (int attempt = 0; attempt < kMaxRedraws && !fresh; ++attempt) {
            if (rng.uniform() < spec.affinity) {
                item_rank = (cluster * block + block_pop.sample(rng)) % spec.items;
            } else {
                item_rank = item_pop.sample(rng);
            }
            fresh = !rated[user_rank].contains(item_rank);
        }
        if (!fresh) {
            if (++misses > 1000 * (spec.events + 1)) {
                throw std::invalid_argument("synthetic spec too dense: cannot draw unseen pairs");
            }
            continue;
        }
        rated[user_rank].insert(item_rank);
        now += static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(spec.max_gap) + 1));
        const double rating = rng.uniform() < spec.five_star_fraction ? 5.0 : low_rating(rng);
        out.push_back({user_ids[user_rank], item_ids[item_rank], rating, now});
    }
    return out;
}

DatasetFormat parse_format(std::string_view text) {
    if (text == "movielens") return DatasetFormat::MovieLens;
    if (text == "netflix") return DatasetFormat::Netflix;
    if (text == "synthetic") return DatasetFormat::Synthetic;
    throw ConfigError("unknown dataset format '" + std::string(text) +
                      "' (expected movielens, netflix or synthetic)");
}

std::string_view to_string(DatasetFormat format) {
    switch (format) {
        case DatasetFormat::MovieLens: return "movielens";
        case DatasetFormat::Netflix: return "netflix";
        case DatasetFormat::Synthetic: break;
    }
    return "synthetic";
}

std::unordered_set<ItemId> load_item_allowlist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::unordered_set<ItemId> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = strip_cr(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        ItemId id = 0;
        if (!parse_field(view, id)) {
            throw ParseError(path.string(), line_no, "bad item id '" + std::string(view) + "'");
        }
        out.insert(id);
    }
    return out;
}

std::vector<RatingEvent> load_stream(const DatasetSpec& spec) {
    if (spec.format == DatasetFormat::Synthetic) {
        const auto raw = generate_synthetic(spec.synthetic);
        return preprocess(raw, spec.min_rating);
    }
    std::optional<std::unordered_set<ItemId>> allow;
    if (spec.item_allowlist) {
        allow = load_item_allowlist(*spec.item_allowlist);
    }
    std::vector<RawRating> kept;
    const RatingSink keep = [&](const RawRating& r) {
        if (r.rating >= spec.min_rating && (!allow || allow->contains(r.item_id))) {
            kept.push_back(r);
        }
    };
    if (spec.format == DatasetFormat::MovieLens) {
        for_each_movielens(spec.path, keep);
    } else {
        for_each_netflix(spec.path, keep);
    }
    return preprocess(kept, spec.min_rating);
}

}  // namespace streamrec
