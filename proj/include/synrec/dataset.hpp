#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace synrec {

struct RatingTriple {
    int user = 0;
    int item = 0;
    int rating = 0;

    friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

struct RatingScale {
    int min_rating = 1;
    int max_rating = 5;

    friend bool operator==(const RatingScale&, const RatingScale&) = default;
};

/// Bag of (user, item, rating) triples with dense 0-based ids.
struct RatingDataset {
    std::vector<RatingTriple> triples;
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    RatingScale scale;
    std::string name;
};

struct DatasetStats {
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t ratings = 0;
    RatingScale scale;
    double sparsity = 0.0;  // percent of empty cells, 100 * (1 - ratings/(users*items))
};

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 1;
};

enum class FieldDelimiter {
    detect,        // per line: "::" if present, else any whitespace run
    tab,           // tab or spaces
    double_colon,  // the MovieLens 1M "::" convention
};

struct ParseOptions {
    FieldDelimiter delimiter = FieldDelimiter::detect;
    std::optional<RatingScale> scale_override;  // otherwise inferred from observed min/max
    std::string name;
};

/// Parses "user item rating [timestamp]" lines. Comment lines starting with '#'
/// and blank lines are skipped. Ids are remapped to dense 0-based ranges in
/// ascending numeric order of the original ids; duplicate (user, item) pairs
/// keep the last occurrence. Throws with the offending line number on bad input.
RatingDataset parse_ratings(std::istream& stream, const ParseOptions& options = {});

RatingDataset load_ratings_file(const std::string& path, const ParseOptions& options = {});

DatasetStats dataset_stats(const RatingDataset& ds);

/// Per-user stratified random split. Each user's triples are partitioned with
/// round(count * test_fraction) going to test, capped so at least one rating
/// stays in train for users with two or more ratings. Deterministic given the seed.
std::pair<RatingDataset, RatingDataset> split(const RatingDataset& ds, const SplitSpec& spec);

/// One "user<TAB>item<TAB>rating" line per triple, LF endings. Returns bytes written.
std::size_t write_ratings(const RatingDataset& ds, std::ostream& sink);

std::size_t write_ratings_file(const RatingDataset& ds, const std::string& path);

/// Checks every RatingDataset invariant (id bounds, scale bounds, duplicate
/// pairs); throws with a description of the first violation.
void validate_dataset(const RatingDataset& ds);

}  // namespace synrec
