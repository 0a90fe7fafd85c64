#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synrec/dataset.hpp"
#include "synrec/models.hpp"

namespace synrec {

struct EvalGrid {
    std::vector<std::size_t> n_values{2, 4, 6, 8, 10};
    std::vector<int> thresholds;  // empty is invalid; see defaults_for
    std::vector<std::uint64_t> seeds{1, 2, 3};

    // Default thresholds: the two top ratings of the scale (4 and 5 on 1-5).
    static EvalGrid defaults_for(const RatingScale& scale);
};

struct EvalPoint {
    ModelKind model = ModelKind::deepmf;
    std::string dataset;
    std::size_t n = 0;
    int theta = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t users_evaluated = 0;  // seed-averaged points round to nearest
};

struct EvalReport {
    std::vector<EvalPoint> points;
    nlohmann::json provenance;
};

struct GridOptions {
    std::size_t latent_dim = 16;
    std::size_t epochs = 15;
    std::size_t batch_size = 512;
    double learning_rate = 1e-3;
    std::size_t jobs = 1;
};

// Ranks the candidate items for one user by predicted score, descending.
// Classification kinds break score ties by the winning class probability;
// remaining ties fall back to ascending item id. Returns min(N, |candidates|).
std::vector<int> recommend_top_n(const TrainedModel& model, int user,
                                 const std::vector<int>& candidates, std::size_t n);

std::pair<double, double> precision_recall(const std::vector<int>& recommended,
                                           const std::vector<int>& relevant, std::size_t n);

double f1_score(double precision, double recall);

// Rated-items protocol: each user's candidate pool is their own test items;
// users with no test item rated >= theta are skipped. Macro averages, with F1
// computed from the averaged precision and recall.
EvalPoint evaluate(const TrainedModel& model, const RatingDataset& test_set, std::size_t n,
                   int theta);

// Per seed: split, train every model once, evaluate the full (N, theta) grid;
// then average each cell across seeds. Cells may run on `jobs` threads; the
// result is schedule-independent.
EvalReport run_grid(const std::vector<ModelKind>& models, const RatingDataset& dataset,
                    const EvalGrid& grid, const SplitSpec& split_spec,
                    const GridOptions& options = {});

enum class ReportFormat { csv, json_lines };

std::string emit_report(const EvalReport& report, ReportFormat format);
EvalReport parse_report_csv(const std::string& text);

}  // namespace synrec
