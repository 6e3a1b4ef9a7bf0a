#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "streamrec/core.hpp"

namespace streamrec {

struct RawRating {
    UserId user_id = 0;
    ItemId item_id = 0;
    double rating = 0.0;
    Timestamp timestamp = 0;

    friend bool operator==(const RawRating&, const RawRating&) = default;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& detail);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

using RatingSink = std::function<void(const RawRating&)>;

/// Streams `userId,movieId,rating,timestamp` rows in file order.
void for_each_movielens(const std::filesystem::path& path, const RatingSink& sink);
std::vector<RawRating> load_movielens(const std::filesystem::path& path);

/// Streams Netflix Prize per-movie files (`<MovieID>:` then
/// `CustomerID,Rating,YYYY-MM-DD` rows). `path` may be a directory, read in
/// filename order, or a single file; a file may hold several movie blocks.
void for_each_netflix(const std::filesystem::path& path, const RatingSink& sink);
std::vector<RawRating> load_netflix(const std::filesystem::path& path);

/// Midnight UTC of a `YYYY-MM-DD` date, in seconds since the epoch.
std::optional<Timestamp> parse_date(std::string_view text);

/// Keeps ratings >= min_rating, stable-sorts by timestamp, binarizes to 1.0
/// and numbers the events from 0.
std::vector<RatingEvent> preprocess(std::span<const RawRating> raw, double min_rating = 5.0);

/// Seeded synthetic stream with Zipf-skewed popularity and clustered tastes.
struct SyntheticSpec {
    std::uint64_t users = 1000;
    std::uint64_t items = 200;
    std::uint64_t events = 10000;
    /// Skew of item popularity.
    double zipf_exponent = 1.0;
    /// Skew of user activity.
    double user_zipf_exponent = 0.5;
    /// Users share tastes within `clusters` groups; each group favors its own
    /// block of items.
    std::uint32_t clusters = 8;
    /// Probability that an event is drawn from the user's cluster block.
    double affinity = 0.8;
    /// Fraction of events rated 5 stars; the rest get 1-4 stars.
    double five_star_fraction = 1.0;
    std::uint64_t seed = 7;
    Timestamp start_time = 1'000'000'000;
    /// Maximum gap between consecutive timestamps in seconds.
    std::int64_t max_gap = 60;
};

std::vector<RawRating> generate_synthetic(const SyntheticSpec& spec);

enum class DatasetFormat { MovieLens, Netflix, Synthetic };
DatasetFormat parse_format(std::string_view text);
std::string_view to_string(DatasetFormat format);

struct DatasetSpec {
    DatasetFormat format = DatasetFormat::Synthetic;
    std::filesystem::path path;
    double min_rating = 5.0;
    /// Optional file with one item id per line; other items are dropped.
    std::optional<std::filesystem::path> item_allowlist;
    SyntheticSpec synthetic;
};

/// Reads, filters while streaming (only surviving rows are materialized),
/// then orders and binarizes.
std::vector<RatingEvent> load_stream(const DatasetSpec& spec);

std::unordered_set<ItemId> load_item_allowlist(const std::filesystem::path& path);

}  // namespace streamrec
