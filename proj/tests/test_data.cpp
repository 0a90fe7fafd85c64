#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "synrec/dataset.hpp"
#include "synrec/rng.hpp"

using namespace synrec;

namespace {

RatingDataset parse_text(const std::string& text, ParseOptions options = {}) {
    std::istringstream in(text);
    return parse_ratings(in, options);
}

}  // namespace

TEST_CASE("parse_ratings basic three-line input") {
    auto ds = parse_text("1 10 5\n2 20 3\n1 20 4\n");
    CHECK(ds.num_users == 2);
    CHECK(ds.num_items == 2);
    CHECK(ds.triples.size() == 3);
    // raw ids remapped densely in ascending order: user 1->0, 2->1; item 10->0, 20->1
    CHECK(ds.triples[0] == RatingTriple{0, 0, 5});
    CHECK(ds.triples[1] == RatingTriple{1, 1, 3});
    CHECK(ds.triples[2] == RatingTriple{0, 1, 4});
    CHECK(ds.scale == RatingScale{3, 5});
}

TEST_CASE("parse_ratings handles tabs, timestamps, comments, blanks, CRLF") {
    auto ds = parse_text("# header comment\n"
                         "\n"
                         "1\t1\t5\t881250949\r\n"
                         "   \n"
                         "2\t1\t1\t891717742\r\n");
    CHECK(ds.triples.size() == 2);
    CHECK(ds.num_users == 2);
    CHECK(ds.num_items == 1);
    CHECK(ds.scale == RatingScale{1, 5});
}

TEST_CASE("parse_ratings double-colon delimiter") {
    auto ds = parse_text("1::1193::5::978300760\n1::661::3::978302109\n");
    CHECK(ds.triples.size() == 2);
    CHECK(ds.num_users == 1);
    CHECK(ds.num_items == 2);
    CHECK(ds.triples[0].rating == 5);
    CHECK(ds.triples[1].item == 0);  // 661 < 1193 so it maps to 0
}

TEST_CASE("parse_ratings reports the offending line number") {
    try {
        parse_text("a b c\n");
        CHECK(false);
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 1") != std::string::npos);
    }
    try {
        parse_text("1 1 5\n2 2\n");
        CHECK(false);
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_text("1 -3 5\n"), std::runtime_error);
}

TEST_CASE("parse_ratings rejects input with no rating lines") {
    CHECK_THROWS_AS(parse_text(""), std::runtime_error);
    CHECK_THROWS_AS(parse_text("# only a comment\n\n"), std::runtime_error);
}

TEST_CASE("duplicate user-item pairs keep the last rating") {
    auto ds = parse_text("1 1 2\n1 1 5\n2 1 3\n");
    CHECK(ds.triples.size() == 2);
    CHECK(ds.triples[0] == RatingTriple{0, 0, 5});
}

TEST_CASE("scale is inferred from data unless overridden") {
    auto inferred = parse_text("1 1 2\n1 2 4\n");
    CHECK(inferred.scale == RatingScale{2, 4});

    ParseOptions opts;
    opts.scale_override = RatingScale{1, 5};
    auto overridden = parse_text("1 1 2\n1 2 4\n", opts);
    CHECK(overridden.scale == RatingScale{1, 5});

    // override that excludes an observed rating fails validation
    ParseOptions bad;
    bad.scale_override = RatingScale{1, 3};
    CHECK_THROWS_AS(parse_text("1 1 2\n1 2 4\n", bad), std::runtime_error);
}

TEST_CASE("load_ratings_file missing path") {
    CHECK_THROWS_AS(load_ratings_file("/nonexistent/ratings.tsv"), std::runtime_error);
}

TEST_CASE("dataset_stats sparsity oracles") {
    auto stats_of = [](std::size_t users, std::size_t items, std::size_t ratings) {
        RatingDataset ds;
        ds.num_users = users;
        ds.num_items = items;
        ds.triples.resize(ratings);
        return dataset_stats(ds);
    };
    // 100 * (1 - 99831 / (943 * 1682)) = 93.7055...
    CHECK(stats_of(943, 1682, 99831).sparsity == doctest::Approx(93.71).epsilon(0.0001));
    CHECK(stats_of(19179, 2692, 548967).sparsity == doctest::Approx(98.94).epsilon(0.0001));
    CHECK(stats_of(10, 10, 100).sparsity == doctest::Approx(0.0));

    RatingDataset empty;
    CHECK_THROWS_AS(dataset_stats(empty), std::invalid_argument);
}

TEST_CASE("dataset_stats sparsity matches cell counting on small grids") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t users = 1 + rng.below(50);
        const std::size_t items = 1 + rng.below(50);
        std::set<std::pair<int, int>> cells;
        const std::size_t want = rng.below(users * items + 1);
        while (cells.size() < want) {
            cells.insert({static_cast<int>(rng.below(users)), static_cast<int>(rng.below(items))});
        }
        RatingDataset ds;
        ds.num_users = users;
        ds.num_items = items;
        for (auto [u, i] : cells) ds.triples.push_back({u, i, 3});

        std::size_t empty_cells = 0;
        for (std::size_t u = 0; u < users; ++u) {
            for (std::size_t i = 0; i < items; ++i) {
                if (!cells.count({static_cast<int>(u), static_cast<int>(i)})) ++empty_cells;
            }
        }
        const double expected =
            100.0 * static_cast<double>(empty_cells) / static_cast<double>(users * items);
        CHECK(std::abs(dataset_stats(ds).sparsity - expected) < 1e-9);
    }
}

TEST_CASE("split sizes for one user with 100 ratings at 20 percent") {
    RatingDataset ds;
    ds.num_users = 1;
    ds.num_items = 100;
    for (int i = 0; i < 100; ++i) ds.triples.push_back({0, i, 1 + (i % 5)});
    ds.scale = {1, 5};
    auto [train, test] = split(ds, {});
    CHECK(train.triples.size() == 80);
    CHECK(test.triples.size() == 20);
    CHECK(train.scale == ds.scale);
    CHECK(test.num_items == ds.num_items);
}

TEST_CASE("split keeps single-rating users in train") {
    RatingDataset ds;
    ds.num_users = 3;
    ds.num_items = 2;
    ds.triples = {{0, 0, 5}, {1, 0, 3}, {1, 1, 4}, {2, 1, 2}};
    ds.scale = {1, 5};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto [train, test] = split(ds, {0.5, seed});
        std::set<int> train_users;
        for (const auto& t : train.triples) train_users.insert(t.user);
        CHECK(train_users.count(0) == 1);
        CHECK(train_users.count(2) == 1);
        CHECK(train_users.count(1) == 1);  // cap leaves one of user 1's pair in train
    }
}

TEST_CASE("split is an exact partition with per-user rounded counts") {
    Rng rng(77);
    RatingDataset ds;
    ds.num_users = 25;
    ds.num_items = 40;
    std::set<std::pair<int, int>> used;
    for (int u = 0; u < 25; ++u) {
        const std::size_t count = 1 + rng.below(12);
        while (true) {
            std::size_t have = 0;
            for (auto& c : used) {
                if (c.first == u) ++have;
            }
            if (have >= count) break;
            used.insert({u, static_cast<int>(rng.below(40))});
        }
    }
    for (auto [u, i] : used) ds.triples.push_back({u, i, static_cast<int>(1 + rng.below(5))});
    ds.scale = {1, 5};

    const double fraction = 0.3;
    auto [train, test] = split(ds, {fraction, 9});
    CHECK(train.triples.size() + test.triples.size() == ds.triples.size());

    auto key = [](const RatingTriple& t) {
        return std::make_tuple(t.user, t.item, t.rating);
    };
    std::multiset<std::tuple<int, int, int>> original, recombined;
    for (const auto& t : ds.triples) original.insert(key(t));
    for (const auto& t : train.triples) recombined.insert(key(t));
    for (const auto& t : test.triples) recombined.insert(key(t));
    CHECK(original == recombined);

    std::map<int, std::size_t> user_total, user_test;
    for (const auto& t : ds.triples) ++user_total[t.user];
    for (const auto& t : test.triples) ++user_test[t.user];
    for (auto [u, total] : user_total) {
        std::size_t want = static_cast<std::size_t>(
            std::llround(static_cast<double>(total) * fraction));
        want = std::min(want, total - 1);
        CHECK(user_test[u] == want);
    }
}

TEST_CASE("split is deterministic in the seed") {
    RatingDataset ds;
    ds.num_users = 5;
    ds.num_items = 30;
    Rng rng(3);
    std::set<std::pair<int, int>> used;
    while (used.size() < 60) {
        used.insert({static_cast<int>(rng.below(5)), static_cast<int>(rng.below(30))});
    }
    for (auto [u, i] : used) ds.triples.push_back({u, i, static_cast<int>(1 + rng.below(5))});
    ds.scale = {1, 5};

    auto [a_train, a_test] = split(ds, {0.2, 42});
    auto [b_train, b_test] = split(ds, {0.2, 42});
    CHECK(a_train.triples == b_train.triples);
    CHECK(a_test.triples == b_test.triples);

    auto [c_train, c_test] = split(ds, {0.2, 43});
    CHECK(c_test.triples != a_test.triples);
}

TEST_CASE("split validates its inputs") {
    RatingDataset ds;
    ds.num_users = 1;
    ds.num_items = 1;
    ds.triples = {{0, 0, 3}};
    CHECK_THROWS_AS(split(ds, {0.0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(split(ds, {1.0, 1}), std::invalid_argument);
    RatingDataset empty;
    CHECK_THROWS_AS(split(empty, {0.2, 1}), std::invalid_argument);
}

TEST_CASE("write_ratings emits tab-separated lines and byte count") {
    RatingDataset ds;
    ds.num_users = 2;
    ds.num_items = 2;
    ds.triples = {{0, 1, 5}, {1, 0, 3}};
    std::ostringstream out;
    const std::size_t bytes = write_ratings(ds, out);
    CHECK(out.str() == "0\t1\t5\n1\t0\t3\n");
    CHECK(bytes == out.str().size());

    RatingDataset empty;
    std::ostringstream empty_out;
    CHECK(write_ratings(empty, empty_out) == 0);
    CHECK(empty_out.str().empty());
}

TEST_CASE("write then parse reproduces the dataset") {
    Rng rng(13);
    RatingDataset ds;
    ds.num_users = 8;
    ds.num_items = 12;
    ds.scale = {1, 5};
    std::set<std::pair<int, int>> used;
    // pin the scale endpoints so re-parsing infers the same scale
    used.insert({0, 0});
    used.insert({0, 1});
    ds.triples.push_back({0, 0, 1});
    ds.triples.push_back({0, 1, 5});
    while (ds.triples.size() < 40) {
        std::pair<int, int> cell{static_cast<int>(rng.below(8)), static_cast<int>(rng.below(12))};
        if (!used.insert(cell).second) continue;
        ds.triples.push_back({cell.first, cell.second, static_cast<int>(1 + rng.below(5))});
    }
    // make every id appear so the dense remap is the identity
    for (int u = 0; u < 8; ++u) {
        ds.triples.push_back({u, u % 12, 3});
    }
    for (int i = 0; i < 12; ++i) {
        ds.triples.push_back({i % 8, i, 3});
    }
    std::set<std::pair<int, int>> dedup;
    std::vector<RatingTriple> unique;
    for (const auto& t : ds.triples) {
        if (dedup.insert({t.user, t.item}).second) unique.push_back(t);
    }
    ds.triples = unique;
    validate_dataset(ds);

    std::ostringstream out;
    write_ratings(ds, out);
    auto parsed = parse_text(out.str());
    CHECK(parsed.num_users == ds.num_users);
    CHECK(parsed.num_items == ds.num_items);
    CHECK(parsed.scale == ds.scale);
    CHECK(parsed.triples == ds.triples);
}

TEST_CASE("validate_dataset flags each invariant violation") {
    RatingDataset ok;
    ok.num_users = 2;
    ok.num_items = 2;
    ok.scale = {1, 5};
    ok.triples = {{0, 0, 1}, {1, 1, 5}};
    validate_dataset(ok);  // no throw

    RatingDataset bad_user = ok;
    bad_user.triples.push_back({2, 0, 3});
    CHECK_THROWS_AS(validate_dataset(bad_user), std::runtime_error);

    RatingDataset bad_item = ok;
    bad_item.triples.push_back({0, 5, 3});
    CHECK_THROWS_AS(validate_dataset(bad_item), std::runtime_error);

    RatingDataset bad_rating = ok;
    bad_rating.triples.push_back({1, 0, 9});
    CHECK_THROWS_AS(validate_dataset(bad_rating), std::runtime_error);

    RatingDataset dup = ok;
    dup.triples.push_back({0, 0, 4});
    CHECK_THROWS_AS(validate_dataset(dup), std::runtime_error);
}
