#pragma once

#include <cstdint>
#include <vector>

#include "synrec/tensor.hpp"

namespace synrec {

struct KmeansResult {
    std::vector<std::size_t> assignments;  // one centroid index per point row
    Tensor2 centroids;                     // k x dim
    std::vector<double> inertia_per_iter;  // sum of squared distances, per assignment pass
    std::size_t iterations = 0;
};

// Lloyd iteration with k-means++ seeding. Points are rows of `points`.
// Deterministic for a given seed; stops when assignments are stable or after
// max_iters passes. Empty clusters are re-seeded from the farthest points.
KmeansResult kmeans(const Tensor2& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100);

KmeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                    std::uint64_t seed, std::size_t max_iters = 100);

}  // namespace synrec
