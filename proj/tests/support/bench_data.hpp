#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <vector>

#include "synrec/dataset.hpp"
#include "synrec/rng.hpp"
#include "synrec/tensor.hpp"

namespace benchdata {

// Deterministic benchmark corpus shaped like the classic 943 x 1682 / 99,831
// rating set: low-rank user/item preferences plus biases drive the scores,
// item exposure follows a power law, and every user keeps at least 20 ratings.
// The structure is learnable by factorization models, which the trend checks
// rely on; the exact public file can be dropped in via SYNREC_ML100K instead.
inline synrec::RatingDataset movielens_like(std::size_t users = 943, std::size_t items = 1682,
                                            std::size_t ratings = 99831,
                                            std::uint64_t seed = 42) {
    using synrec::Rng;
    constexpr std::size_t kFactors = 8;
    constexpr std::size_t kMinPerUser = 20;
    Rng rng(seed);

    std::vector<std::vector<double>> user_vec(users), item_vec(items);
    std::vector<double> user_bias(users), item_bias(items);
    for (auto& v : user_vec) v = rng.normal_vector(kFactors, 0.0, 1.0 / std::sqrt(kFactors));
    for (auto& v : item_vec) v = rng.normal_vector(kFactors, 0.0, 1.0 / std::sqrt(kFactors));
    for (auto& b : user_bias) b = rng.normal(0.0, 0.45);
    for (auto& b : item_bias) b = rng.normal(0.0, 0.45);

    // Per-user rating counts: a floor of kMinPerUser plus a log-normal share
    // of the remainder, rounded so the total is exact.
    std::vector<double> activity(users);
    for (auto& a : activity) a = std::exp(1.1 * rng.normal());
    const double activity_sum = std::accumulate(activity.begin(), activity.end(), 0.0);
    const std::size_t extra_total = ratings - users * kMinPerUser;
    std::vector<std::size_t> count(users);
    std::vector<std::pair<double, std::size_t>> remainder;
    std::size_t assigned = 0;
    for (std::size_t u = 0; u < users; ++u) {
        const double share = activity[u] / activity_sum * static_cast<double>(extra_total);
        std::size_t whole = static_cast<std::size_t>(share);
        whole = std::min(whole, items - kMinPerUser);
        count[u] = kMinPerUser + whole;
        assigned += whole;
        remainder.push_back({share - static_cast<double>(whole), u});
    }
    std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t j = 0; assigned < extra_total; j = (j + 1) % remainder.size()) {
        const std::size_t u = remainder[j].second;
        if (count[u] < items) {
            ++count[u];
            ++assigned;
        }
    }

    std::vector<double> popularity(items);
    for (std::size_t i = 0; i < items; ++i) {
        popularity[i] = 1.0 / std::pow(static_cast<double>(i) + 10.0, 0.8);
    }

    synrec::RatingDataset ds;
    ds.num_users = users;
    ds.num_items = items;
    ds.scale = {1, 5};
    ds.name = "ml100k";
    ds.triples.reserve(ratings);
    std::vector<std::pair<double, std::size_t>> race(items);
    for (std::size_t u = 0; u < users; ++u) {
        Rng urng = rng.derive(u);
        // Weighted sampling without replacement: exponential race keyed by
        // popularity, keep the `count[u]` smallest keys.
        for (std::size_t i = 0; i < items; ++i) {
            race[i] = {-std::log(1.0 - urng.uniform()) / popularity[i], i};
        }
        std::nth_element(race.begin(), race.begin() + static_cast<std::ptrdiff_t>(count[u] - 1),
                         race.end());
        for (std::size_t j = 0; j < count[u]; ++j) {
            const std::size_t i = race[j].second;
            const double score = 3.55 + user_bias[u] + item_bias[i] +
                                 1.4 * synrec::dot(user_vec[u], item_vec[i]) +
                                 urng.normal(0.0, 0.55);
            const int rating = std::clamp(static_cast<int>(std::lround(score)), 1, 5);
            ds.triples.push_back({static_cast<int>(u), static_cast<int>(i), rating});
        }
    }
    return ds;
}

// The benchmark used by the heavyweight trend checks: the real file when
// available (SYNREC_ML100K env var, or ./data/u.data), else the generator.
inline synrec::RatingDataset movielens_100k() {
    synrec::ParseOptions options;
    options.name = "ml100k";
    if (const char* path = std::getenv("SYNREC_ML100K"); path && *path) {
        return synrec::load_ratings_file(path, options);
    }
    if (std::filesystem::exists("data/u.data")) {
        return synrec::load_ratings_file("data/u.data", options);
    }
    return movielens_like();
}

}  // namespace benchdata
