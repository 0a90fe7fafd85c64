#include "synrec/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "synrec/rng.hpp"

namespace synrec {

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

Tensor2 seed_centroids(const Tensor2& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows;
    const std::size_t dim = points.cols;
    Tensor2 centroids(k, dim);
    std::vector<bool> chosen(n, false);

    auto adopt = [&](std::size_t c, std::size_t p) {
        std::copy(points.row(p), points.row(p) + dim, centroids.row(c));
        chosen[p] = true;
    };

    adopt(0, rng.below(n));
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            best[p] = std::min(best[p], sq_dist(points.row(p), centroids.row(c - 1), dim));
            total += best[p];
        }
        if (total <= 0.0) {
            // All remaining mass sits on existing centroids; take any unchosen point.
            std::size_t p = 0;
            while (p < n && chosen[p]) ++p;
            adopt(c, p < n ? p : 0);
            continue;
        }
        const double target = rng.uniform() * total;
        double acc = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t p = 0; p < n; ++p) {
            acc += best[p];
            if (acc >= target) {
                pick = p;
                break;
            }
        }
        adopt(c, pick);
    }
    return centroids;
}

}  // namespace

KmeansResult kmeans(const Tensor2& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters) {
    const std::size_t n = points.rows;
    const std::size_t dim = points.cols;
    if (k == 0 || n < k) {
        throw std::invalid_argument("kmeans: need at least k points (k=" + std::to_string(k) +
                                    ", points=" + std::to_string(n) + ")");
    }

    Rng rng(seed);
    KmeansResult result;
    result.centroids = seed_centroids(points, k, rng);
    result.assignments.assign(n, 0);

    std::vector<std::size_t> counts(k);
    std::vector<double> point_dist(n);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = iter == 0;
        double inertia = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(points.row(p), result.centroids.row(c), dim);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            if (arg != result.assignments[p]) changed = true;
            result.assignments[p] = arg;
            point_dist[p] = best;
            inertia += best;
        }
        result.inertia_per_iter.push_back(inertia);
        result.iterations = iter + 1;
        if (!changed) break;

        std::fill(counts.begin(), counts.end(), 0);
        std::fill(result.centroids.data.begin(), result.centroids.data.end(), 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            const std::size_t c = result.assignments[p];
            ++counts[c];
            double* row = result.centroids.row(c);
            const double* pt = points.row(p);
            for (std::size_t d = 0; d < dim; ++d) row[d] += pt[d];
        }
        std::vector<std::size_t> empty;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                empty.push_back(c);
            } else {
                double* row = result.centroids.row(c);
                for (std::size_t d = 0; d < dim; ++d) row[d] /= static_cast<double>(counts[c]);
            }
        }
        if (!empty.empty()) {
            // Re-seed each empty cluster from the point farthest from its centroid.
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return point_dist[a] != point_dist[b] ? point_dist[a] > point_dist[b] : a < b;
            });
            std::size_t next = 0;
            for (std::size_t c : empty) {
                const std::size_t p = order[std::min(next++, n - 1)];
                std::copy(points.row(p), points.row(p) + dim, result.centroids.row(c));
            }
        }
    }
    return result;
}

KmeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                    std::uint64_t seed, std::size_t max_iters) {
    if (points.empty()) {
        throw std::invalid_argument("kmeans: need at least k points (k=" + std::to_string(k) +
                                    ", points=0)");
    }
    Tensor2 packed(points.size(), points.front().size());
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (points[p].size() != packed.cols) {
            throw std::invalid_argument("kmeans: point " + std::to_string(p) + " has width " +
                                        std::to_string(points[p].size()) + ", expected " +
                                        std::to_string(packed.cols));
        }
        std::copy(points[p].begin(), points[p].end(), packed.row(p));
    }
    return kmeans(packed, k, seed, max_iters);
}

}  // namespace synrec
