#include "synrec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "synrec/rng.hpp"

namespace synrec {

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw std::runtime_error("parse_ratings: line " + std::to_string(line_no) + ": " + what);
}

long parse_int_field(const std::string& field, std::size_t line_no, const char* which) {
    std::size_t pos = 0;
    long value = 0;
    try {
        value = std::stol(field, &pos);
    } catch (const std::exception&) {
        parse_fail(line_no, std::string("cannot parse ") + which + " field '" + field + "'");
    }
    if (pos != field.size()) {
        parse_fail(line_no, std::string("trailing characters in ") + which + " field '" + field + "'");
    }
    return value;
}

std::vector<std::string> split_fields(const std::string& line, FieldDelimiter delim) {
    std::vector<std::string> fields;
    if (delim == FieldDelimiter::double_colon ||
        (delim == FieldDelimiter::detect && line.find("::") != std::string::npos)) {
        std::size_t start = 0;
        while (true) {
            std::size_t pos = line.find("::", start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 2;
        }
    } else {
        std::istringstream iss(line);
        std::string field;
        while (iss >> field) fields.push_back(field);
    }
    return fields;
}

std::unordered_map<long, int> dense_remap(const std::vector<long>& raw_ids) {
    std::vector<long> sorted = raw_ids;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::unordered_map<long, int> map;
    map.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) map[sorted[i]] = static_cast<int>(i);
    return map;
}

}  // namespace

RatingDataset parse_ratings(std::istream& stream, const ParseOptions& options) {
    struct RawTriple {
        long user;
        long item;
        long rating;
    };
    std::vector<RawTriple> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        auto fields = split_fields(line, options.delimiter);
        if (fields.size() < 3) {
            parse_fail(line_no, "expected at least 3 fields, got " + std::to_string(fields.size()));
        }
        RawTriple t;
        t.user = parse_int_field(fields[0], line_no, "user");
        t.item = parse_int_field(fields[1], line_no, "item");
        t.rating = parse_int_field(fields[2], line_no, "rating");
        if (t.user < 0 || t.item < 0) {
            parse_fail(line_no, "negative id");
        }
        raw.push_back(t);
    }
    if (raw.empty()) {
        throw std::runtime_error("parse_ratings: no rating lines in input");
    }

    std::vector<long> user_ids, item_ids;
    user_ids.reserve(raw.size());
    item_ids.reserve(raw.size());
    for (const auto& t : raw) {
        user_ids.push_back(t.user);
        item_ids.push_back(t.item);
    }
    auto user_map = dense_remap(user_ids);
    auto item_map = dense_remap(item_ids);

    RatingDataset ds;
    ds.name = options.name;
    ds.num_users = user_map.size();
    ds.num_items = item_map.size();

    // Last occurrence of a (user, item) pair wins; first-seen order is kept
    // for the slot so output order is stable.
    std::unordered_map<std::uint64_t, std::size_t> slot_of_pair;
    slot_of_pair.reserve(raw.size());
    ds.triples.reserve(raw.size());
    int min_seen = std::numeric_limits<int>::max();
    int max_seen = std::numeric_limits<int>::min();
    for (const auto& t : raw) {
        RatingTriple triple;
        triple.user = user_map.at(t.user);
        triple.item = item_map.at(t.item);
        if (t.rating < std::numeric_limits<int>::min() || t.rating > std::numeric_limits<int>::max()) {
            throw std::runtime_error("parse_ratings: rating out of int range");
        }
        triple.rating = static_cast<int>(t.rating);
        min_seen = std::min(min_seen, triple.rating);
        max_seen = std::max(max_seen, triple.rating);
        std::uint64_t key = (static_cast<std::uint64_t>(triple.user) << 32) |
                            static_cast<std::uint32_t>(triple.item);
        auto it = slot_of_pair.find(key);
        if (it == slot_of_pair.end()) {
            slot_of_pair.emplace(key, ds.triples.size());
            ds.triples.push_back(triple);
        } else {
            ds.triples[it->second] = triple;
        }
    }

    ds.scale = options.scale_override.value_or(RatingScale{min_seen, max_seen});
    validate_dataset(ds);
    return ds;
}

RatingDataset load_ratings_file(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open ratings file: " + path);
    }
    ParseOptions opts = options;
    if (opts.name.empty()) {
        std::size_t slash = path.find_last_of("/\\");
        opts.name = slash == std::string::npos ? path : path.substr(slash + 1);
        std::size_t dot = opts.name.find_last_of('.');
        if (dot != std::string::npos && dot > 0) opts.name = opts.name.substr(0, dot);
    }
    return parse_ratings(in, opts);
}

DatasetStats dataset_stats(const RatingDataset& ds) {
    if (ds.num_users == 0 || ds.num_items == 0) {
        throw std::invalid_argument("dataset_stats: dataset has no users or no items");
    }
    DatasetStats stats;
    stats.users = ds.num_users;
    stats.items = ds.num_items;
    stats.ratings = ds.triples.size();
    stats.scale = ds.scale;
    double cells = static_cast<double>(ds.num_users) * static_cast<double>(ds.num_items);
    stats.sparsity = 100.0 * (1.0 - static_cast<double>(stats.ratings) / cells);
    return stats;
}

std::pair<RatingDataset, RatingDataset> split(const RatingDataset& ds, const SplitSpec& spec) {
    if (ds.triples.empty()) {
        throw std::invalid_argument("split: dataset is empty");
    }
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw std::invalid_argument("split: test_fraction must be in (0,1), got " +
                                    std::to_string(spec.test_fraction));
    }

    std::vector<std::vector<std::size_t>> by_user(ds.num_users);
    for (std::size_t i = 0; i < ds.triples.size(); ++i) {
        by_user[static_cast<std::size_t>(ds.triples[i].user)].push_back(i);
    }

    std::vector<bool> in_test(ds.triples.size(), false);
    Rng master(spec.seed);
    for (std::size_t u = 0; u < by_user.size(); ++u) {
        auto& indices = by_user[u];
        if (indices.empty()) continue;
        std::size_t want = static_cast<std::size_t>(
            std::llround(static_cast<double>(indices.size()) * spec.test_fraction));
        want = std::min(want, indices.size() - 1);  // keep at least one rating in train
        if (want == 0) continue;
        Rng user_rng = master.derive(u);
        user_rng.shuffle(indices);
        for (std::size_t k = 0; k < want; ++k) in_test[indices[k]] = true;
    }

    RatingDataset train, test;
    train.num_users = test.num_users = ds.num_users;
    train.num_items = test.num_items = ds.num_items;
    train.scale = test.scale = ds.scale;
    train.name = ds.name.empty() ? "train" : ds.name + "-train";
    test.name = ds.name.empty() ? "test" : ds.name + "-test";
    for (std::size_t i = 0; i < ds.triples.size(); ++i) {
        (in_test[i] ? test : train).triples.push_back(ds.triples[i]);
    }
    return {std::move(train), std::move(test)};
}

std::size_t write_ratings(const RatingDataset& ds, std::ostream& sink) {
    std::size_t bytes = 0;
    for (const auto& t : ds.triples) {
        std::string line = std::to_string(t.user) + "\t" + std::to_string(t.item) + "\t" +
                           std::to_string(t.rating) + "\n";
        sink.write(line.data(), static_cast<std::streamsize>(line.size()));
        if (!sink) {
            throw std::runtime_error("write_ratings: sink write failed");
        }
        bytes += line.size();
    }
    return bytes;
}

std::size_t write_ratings_file(const RatingDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    return write_ratings(ds, out);
}

void validate_dataset(const RatingDataset& ds) {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(ds.triples.size());
    for (const auto& t : ds.triples) {
        if (t.user < 0 || static_cast<std::size_t>(t.user) >= ds.num_users) {
            throw std::runtime_error("dataset invariant: user id " + std::to_string(t.user) +
                                     " outside [0, " + std::to_string(ds.num_users) + ")");
        }
        if (t.item < 0 || static_cast<std::size_t>(t.item) >= ds.num_items) {
            throw std::runtime_error("dataset invariant: item id " + std::to_string(t.item) +
                                     " outside [0, " + std::to_string(ds.num_items) + ")");
        }
        if (t.rating < ds.scale.min_rating || t.rating > ds.scale.max_rating) {
            throw std::runtime_error("dataset invariant: rating " + std::to_string(t.rating) +
                                     " outside scale [" + std::to_string(ds.scale.min_rating) +
                                     ", " + std::to_string(ds.scale.max_rating) + "]");
        }
        std::uint64_t key = (static_cast<std::uint64_t>(t.user) << 32) |
                            static_cast<std::uint32_t>(t.item);
        if (!seen.insert(key).second) {
            throw std::runtime_error("dataset invariant: duplicate pair (" +
                                     std::to_string(t.user) + ", " + std::to_string(t.item) + ")");
        }
    }
}

}  // namespace synrec
