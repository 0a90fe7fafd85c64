#include "synrec/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "synrec/rng.hpp"

namespace synrec {

EvalGrid EvalGrid::defaults_for(const RatingScale& scale) {
    EvalGrid grid;
    grid.thresholds = {scale.max_rating - 1, scale.max_rating};
    return grid;
}

namespace {

struct ScoredItem {
    int item;
    double score;
    double tie_prob;
};

void validate_grid(const EvalGrid& grid, const RatingScale& scale) {
    if (grid.n_values.empty() || grid.thresholds.empty() || grid.seeds.empty()) {
        throw std::invalid_argument("run_grid: n_values, thresholds, and seeds must be non-empty");
    }
    for (std::size_t j = 1; j < grid.n_values.size(); ++j) {
        if (grid.n_values[j] <= grid.n_values[j - 1]) {
            throw std::invalid_argument("run_grid: n_values must be strictly increasing");
        }
    }
    for (int theta : grid.thresholds) {
        if (theta < scale.min_rating || theta > scale.max_rating) {
            throw std::invalid_argument("run_grid: threshold " + std::to_string(theta) +
                                        " outside scale " + std::to_string(scale.min_rating) +
                                        ".." + std::to_string(scale.max_rating));
        }
    }
}

std::string format_fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

std::vector<int> recommend_top_n(const TrainedModel& model, int user,
                                 const std::vector<int>& candidates, std::size_t n) {
    if (candidates.empty()) return {};
    if (n == 0) throw std::invalid_argument("recommend_top_n: N must be at least 1");

    const bool classified = model.kind == ModelKind::ncf_classification ||
                            model.kind == ModelKind::ncf_classification_improved;
    std::vector<ScoredItem> scored;
    scored.reserve(candidates.size());
    for (int item : candidates) {
        ScoredItem s{item, 0.0, 0.0};
        if (classified) {
            const ClassDistribution dist = predict_distribution(model, user, item);
            s.score = model.kind == ModelKind::ncf_classification
                          ? static_cast<double>(argmax_vote(dist))
                          : expected_vote(dist);
            s.tie_prob = dist.probabilities[static_cast<std::size_t>(argmax_vote(dist))];
        } else {
            s.score = predict_score(model, user, item);
        }
        scored.push_back(s);
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredItem& a, const ScoredItem& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.tie_prob != b.tie_prob) return a.tie_prob > b.tie_prob;
        return a.item < b.item;
    });
    std::vector<int> top;
    for (std::size_t j = 0; j < std::min(n, scored.size()); ++j) top.push_back(scored[j].item);
    return top;
}

std::pair<double, double> precision_recall(const std::vector<int>& recommended,
                                           const std::vector<int>& relevant, std::size_t n) {
    if (recommended.size() > n) {
        throw std::invalid_argument("precision_recall: " + std::to_string(recommended.size()) +
                                    " recommendations exceed N=" + std::to_string(n));
    }
    const std::unordered_set<int> relevant_set(relevant.begin(), relevant.end());
    std::size_t hits = 0;
    for (int item : recommended) hits += relevant_set.count(item);
    const double p = recommended.empty()
                         ? 0.0
                         : static_cast<double>(hits) / static_cast<double>(recommended.size());
    const double r = relevant_set.empty()
                         ? 0.0
                         : static_cast<double>(hits) / static_cast<double>(relevant_set.size());
    return {p, r};
}

double f1_score(double precision, double recall) {
    const double sum = precision + recall;
    return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

EvalPoint evaluate(const TrainedModel& model, const RatingDataset& test_set, std::size_t n,
                   int theta) {
    std::vector<std::vector<RatingTriple>> per_user(test_set.num_users);
    for (const auto& t : test_set.triples) {
        per_user[static_cast<std::size_t>(t.user)].push_back(t);
    }

    double p_sum = 0.0, r_sum = 0.0;
    std::size_t users = 0;
    std::vector<int> candidates, relevant;
    for (std::size_t u = 0; u < per_user.size(); ++u) {
        candidates.clear();
        relevant.clear();
        for (const auto& t : per_user[u]) {
            candidates.push_back(t.item);
            if (t.rating >= theta) relevant.push_back(t.item);
        }
        if (relevant.empty()) continue;
        const auto top = recommend_top_n(model, static_cast<int>(u), candidates, n);
        const auto [p, r] = precision_recall(top, relevant, n);
        p_sum += p;
        r_sum += r;
        ++users;
    }
    if (users == 0) {
        throw std::runtime_error("evaluate: no users with relevant test items at threshold " +
                                 std::to_string(theta));
    }

    EvalPoint point;
    point.model = model.kind;
    point.dataset = test_set.name;
    point.n = n;
    point.theta = theta;
    point.precision = p_sum / static_cast<double>(users);
    point.recall = r_sum / static_cast<double>(users);
    point.f1 = f1_score(point.precision, point.recall);
    point.users_evaluated = users;
    return point;
}

EvalReport run_grid(const std::vector<ModelKind>& models, const RatingDataset& dataset,
                    const EvalGrid& grid, const SplitSpec& split_spec,
                    const GridOptions& options) {
    if (models.empty()) throw std::invalid_argument("run_grid: no models requested");
    for (std::size_t a = 0; a < models.size(); ++a) {
        for (std::size_t b = a + 1; b < models.size(); ++b) {
            if (models[a] == models[b]) {
                throw std::invalid_argument(std::string("run_grid: duplicate model '") +
                                            to_string(models[a]) + "'");
            }
        }
    }
    validate_grid(grid, dataset.scale);

    const std::size_t n_cells = grid.seeds.size() * models.size();
    std::vector<std::vector<EvalPoint>> cell_points(n_cells);

    auto run_cell = [&](std::size_t cell) {
        const std::size_t si = cell / models.size();
        const std::size_t mi = cell % models.size();
        SplitSpec seeded = split_spec;
        seeded.seed = grid.seeds[si];
        const auto [train_set, test_set] = split(dataset, seeded);

        NetConfig cfg = NetConfig::defaults_for(models[mi]);
        cfg.latent_dim = options.latent_dim;
        cfg.epochs = options.epochs;
        cfg.batch_size = options.batch_size;
        cfg.learning_rate = options.learning_rate;

        Rng cell_rng = Rng(grid.seeds[si]).derive(100 + mi);
        TrainedModel model =
            build(models[mi], dataset.num_users, dataset.num_items, dataset.scale, cfg, cell_rng);
        train(model, train_set, cell_rng);

        for (std::size_t n : grid.n_values) {
            for (int theta : grid.thresholds) {
                cell_points[cell].push_back(evaluate(model, test_set, n, theta));
            }
        }
    };

    const std::size_t jobs = std::min(std::max<std::size_t>(1, options.jobs), n_cells);
    if (jobs <= 1) {
        for (std::size_t cell = 0; cell < n_cells; ++cell) run_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex err_mu;
        std::exception_ptr first_error;
        auto worker = [&] {
            for (std::size_t cell = next.fetch_add(1); cell < n_cells;
                 cell = next.fetch_add(1)) {
                try {
                    run_cell(cell);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    EvalReport report;
    const double inv_seeds = 1.0 / static_cast<double>(grid.seeds.size());
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        std::size_t slot = 0;
        for (std::size_t n : grid.n_values) {
            for (int theta : grid.thresholds) {
                EvalPoint avg;
                avg.model = models[mi];
                avg.dataset = dataset.name;
                avg.n = n;
                avg.theta = theta;
                double users = 0.0;
                for (std::size_t si = 0; si < grid.seeds.size(); ++si) {
                    const EvalPoint& p = cell_points[si * models.size() + mi][slot];
                    avg.precision += p.precision * inv_seeds;
                    avg.recall += p.recall * inv_seeds;
                    users += static_cast<double>(p.users_evaluated) * inv_seeds;
                }
                avg.f1 = f1_score(avg.precision, avg.recall);
                avg.users_evaluated = static_cast<std::size_t>(std::llround(users));
                report.points.push_back(avg);
                ++slot;
            }
        }
    }

    std::vector<std::string> model_names;
    for (ModelKind kind : models) model_names.emplace_back(to_string(kind));
    report.provenance = {
        {"dataset", dataset.name},
        {"stats",
         {{"users", dataset.num_users},
          {"items", dataset.num_items},
          {"ratings", dataset.triples.size()}}},
        {"seeds", grid.seeds},
        {"test_fraction", split_spec.test_fraction},
        {"models", model_names},
        {"latent_dim", options.latent_dim},
        {"epochs", options.epochs},
        {"batch_size", options.batch_size},
        {"learning_rate", options.learning_rate},
    };
    return report;
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
    std::vector<EvalPoint> points = report.points;
    std::stable_sort(points.begin(), points.end(), [](const EvalPoint& a, const EvalPoint& b) {
        if (a.dataset != b.dataset) return a.dataset < b.dataset;
        if (a.model != b.model) return static_cast<int>(a.model) < static_cast<int>(b.model);
        if (a.n != b.n) return a.n < b.n;
        return a.theta < b.theta;
    });

    std::string out;
    if (format == ReportFormat::csv) {
        out = "model,dataset,N,theta,precision,recall,f1,users\n";
        for (const auto& p : points) {
            out += std::string(to_string(p.model)) + "," + p.dataset + "," + std::to_string(p.n) +
                   "," + std::to_string(p.theta) + "," + format_fixed(p.precision) + "," +
                   format_fixed(p.recall) + "," + format_fixed(p.f1) + "," +
                   std::to_string(p.users_evaluated) + "\n";
        }
    } else {
        for (const auto& p : points) {
            nlohmann::json row = {
                {"model", to_string(p.model)}, {"dataset", p.dataset},
                {"N", p.n},                    {"theta", p.theta},
                {"precision", round6(p.precision)}, {"recall", round6(p.recall)},
                {"f1", round6(p.f1)},          {"users", p.users_evaluated},
            };
            out += row.dump() + "\n";
        }
    }
    return out;
}

EvalReport parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "model,dataset,N,theta,precision,recall,f1,users") {
        throw std::runtime_error("parse_report_csv: missing or malformed header");
    }
    EvalReport report;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 8) {
            throw std::runtime_error("parse_report_csv: line " + std::to_string(line_no) +
                                     " has " + std::to_string(fields.size()) +
                                     " fields, expected 8");
        }
        EvalPoint p;
        const auto kind = model_kind_from_string(fields[0]);
        if (!kind) {
            throw std::runtime_error("parse_report_csv: unknown model '" + fields[0] +
                                     "' on line " + std::to_string(line_no));
        }
        p.model = *kind;
        p.dataset = fields[1];
        p.n = static_cast<std::size_t>(std::stoull(fields[2]));
        p.theta = std::stoi(fields[3]);
        p.precision = std::stod(fields[4]);
        p.recall = std::stod(fields[5]);
        p.f1 = std::stod(fields[6]);
        p.users_evaluated = static_cast<std::size_t>(std::stoull(fields[7]));
        report.points.push_back(p);
    }
    return report;
}

}  // namespace synrec
