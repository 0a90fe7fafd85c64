#include "synrec/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "synrec/checkpoint.hpp"
#include "synrec/dataset.hpp"
#include "synrec/eval.hpp"
#include "synrec/gan.hpp"
#include "synrec/models.hpp"

namespace synrec {

namespace {

namespace fs = std::filesystem;

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
}

// Bad input files are configuration errors (exit 2), not runtime failures.
RatingDataset load_dataset_checked(const std::string& path) {
    try {
        return load_ratings_file(path);
    } catch (const std::runtime_error& e) {
        throw std::invalid_argument(e.what());
    }
}

GanBundle load_gan_checked(const std::string& path) {
    try {
        return load_gan(path);
    } catch (const std::runtime_error& e) {
        throw std::invalid_argument(e.what());
    }
}

std::vector<ModelKind> parse_model_list(const std::vector<std::string>& names) {
    std::vector<ModelKind> kinds;
    if (names.empty()) {
        kinds.assign(std::begin(kAllModelKinds), std::end(kAllModelKinds));
        return kinds;
    }
    for (const auto& name : names) {
        const auto kind = model_kind_from_string(name);
        if (!kind) throw std::invalid_argument("unknown model '" + name + "'");
        kinds.push_back(*kind);
    }
    return kinds;
}

struct CommonTrainFlags {
    std::size_t latent_dim = 16;
    std::size_t epochs = 15;
    std::size_t batch = 512;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--latent-dim", latent_dim, "Embedding width K")->check(CLI::PositiveNumber);
        cmd->add_option("--epochs", epochs, "Training epochs");
        cmd->add_option("--batch", batch, "Mini-batch size")->check(CLI::PositiveNumber);
        cmd->add_option("--lr", learning_rate, "Learning rate")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "Random seed");
    }
};

void cmd_stats(const std::string& dataset_path) {
    const RatingDataset ds = load_dataset_checked(dataset_path);
    const DatasetStats stats = dataset_stats(ds);
    std::cout << "users: " << stats.users << "\n"
              << "items: " << stats.items << "\n"
              << "ratings: " << stats.ratings << "\n"
              << "scale: " << stats.scale.min_rating << ".." << stats.scale.max_rating << "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", stats.sparsity);
    std::cout << "sparsity: " << buf << "\n";
}

void cmd_split(const std::string& dataset_path, const std::string& out_dir, double test_fraction,
               std::uint64_t seed) {
    const RatingDataset ds = load_dataset_checked(dataset_path);
    const auto [train_set, test_set] = split(ds, SplitSpec{test_fraction, seed});
    fs::create_directories(out_dir);
    const std::string train_path = (fs::path(out_dir) / (train_set.name + ".tsv")).string();
    const std::string test_path = (fs::path(out_dir) / (test_set.name + ".tsv")).string();
    write_ratings_file(train_set, train_path);
    write_ratings_file(test_set, test_path);
    std::cout << train_path << "\n" << test_path << "\n";
}

void cmd_train(const std::string& dataset_path, const std::string& out_dir,
               const std::string& model_name, const CommonTrainFlags& flags) {
    const auto kind = model_kind_from_string(model_name);
    if (!kind) throw std::invalid_argument("unknown model '" + model_name + "'");
    const RatingDataset ds = load_dataset_checked(dataset_path);

    NetConfig cfg = NetConfig::defaults_for(*kind);
    cfg.latent_dim = flags.latent_dim;
    cfg.epochs = flags.epochs;
    cfg.batch_size = flags.batch;
    cfg.learning_rate = flags.learning_rate;

    Rng rng(flags.seed);
    TrainedModel model = build(*kind, ds.num_users, ds.num_items, ds.scale, cfg, rng);
    train(model, ds, rng);

    fs::create_directories(out_dir);
    const std::string path =
        (fs::path(out_dir) / (ds.name + "-" + model_name + ".ckpt")).string();
    save_model(model, path);
    std::cout << "checkpoint: " << path << "\n";
    if (!model.epoch_losses.empty()) {
        std::cout << "final_loss: " << fixed6(model.epoch_losses.back()) << "\n";
    }
}

void cmd_gan(const std::string& dataset_path, const std::string& out_dir,
             const CommonTrainFlags& flags, const GanConfig& gan_cfg, std::size_t embed_epochs,
             double embed_lr) {
    const RatingDataset ds = load_dataset_checked(dataset_path);

    Rng rng(flags.seed);
    NetConfig embed_cfg = NetConfig::defaults_for(ModelKind::deepmf);
    embed_cfg.epochs = embed_epochs;
    embed_cfg.batch_size = flags.batch;
    embed_cfg.learning_rate = embed_lr;
    Rng embed_rng = rng.derive(1);
    const EmbeddingSpace space = embed_dataset(ds, flags.latent_dim, embed_rng, embed_cfg);
    const Tensor2 bank = real_sample_bank(space, ds);

    Rng gan_rng = rng.derive(2);
    const GanBundle bundle =
        train_gan(bank, flags.latent_dim, ds.scale, ds.name, gan_cfg, gan_rng);

    fs::create_directories(out_dir);
    const std::string ckpt_path = (fs::path(out_dir) / (ds.name + "-gan.ckpt")).string();
    save_gan(bundle, ckpt_path);
    std::string log = "epoch,disc_loss,gen_loss\n";
    for (std::size_t e = 0; e < bundle.disc_epoch_losses.size(); ++e) {
        log += std::to_string(e + 1) + "," + fixed6(bundle.disc_epoch_losses[e]) + "," +
               fixed6(bundle.gen_epoch_losses[e]) + "\n";
    }
    const std::string log_path = (fs::path(out_dir) / (ds.name + "-gan-log.csv")).string();
    write_text_file(log_path, log);
    std::cout << "checkpoint: " << ckpt_path << "\n"
              << "log: " << log_path << "\n"
              << "holdout_accuracy: " << fixed6(bundle.holdout_accuracy) << "\n";
}

void cmd_synthesize(const std::string& ckpt_path, const std::string& out_dir,
                    const SynthesisRequest& req, const std::string& name_override) {
    const GanBundle bundle = load_gan_checked(ckpt_path);
    RatingDataset ds = synthesize(bundle, req);
    if (!name_override.empty()) {
        ds.name = name_override;
    } else {
        ds.name += "-" + std::to_string(req.num_samples);
    }

    fs::create_directories(out_dir);
    const std::string data_path = (fs::path(out_dir) / (ds.name + ".tsv")).string();
    write_ratings_file(ds, data_path);

    std::string meta;
    meta += "source=" + bundle.source_name + "\n";
    meta += "checkpoint=" + ckpt_path + "\n";
    meta += "seed=" + std::to_string(req.seed) + "\n";
    meta += "users=" + std::to_string(req.num_users) + "\n";
    meta += "items=" + std::to_string(req.num_items) + "\n";
    meta += "samples=" + std::to_string(req.num_samples) + "\n";
    meta += "noise_sigma=" + fixed6(bundle.config.noise_sigma) + "\n";
    meta += "triples=" + std::to_string(ds.triples.size()) + "\n";
    meta += "scale=" + std::to_string(ds.scale.min_rating) + ".." +
            std::to_string(ds.scale.max_rating) + "\n";
    const std::string meta_path = (fs::path(out_dir) / (ds.name + ".meta")).string();
    write_text_file(meta_path, meta);
    std::cout << data_path << "\n" << meta_path << "\n";
}

void cmd_evaluate(const std::string& dataset_path, const std::string& model_name, std::size_t n,
                  int theta, double test_fraction, const CommonTrainFlags& flags) {
    const RatingDataset ds = load_dataset_checked(dataset_path);
    EvalGrid grid;
    grid.n_values = {n};
    grid.thresholds = {theta != 0 ? theta : ds.scale.max_rating - 1};
    grid.seeds = {flags.seed};
    GridOptions options;
    options.latent_dim = flags.latent_dim;
    options.epochs = flags.epochs;
    options.batch_size = flags.batch;
    options.learning_rate = flags.learning_rate;
    const EvalReport report = run_grid(parse_model_list({model_name}), ds, grid,
                                       SplitSpec{test_fraction, flags.seed}, options);
    std::cout << emit_report(report, ReportFormat::csv);
}

void cmd_experiment(const std::vector<std::string>& dataset_paths, const std::string& out_dir,
                    const std::vector<std::string>& model_names,
                    const std::vector<std::size_t>& n_values, const std::vector<int>& thresholds,
                    const std::vector<std::uint64_t>& seeds, double test_fraction,
                    const CommonTrainFlags& flags, std::size_t jobs) {
    const std::vector<ModelKind> kinds = parse_model_list(model_names);
    GridOptions options;
    options.latent_dim = flags.latent_dim;
    options.epochs = flags.epochs;
    options.batch_size = flags.batch;
    options.learning_rate = flags.learning_rate;
    options.jobs = jobs;

    fs::create_directories(out_dir);
    std::string combined;
    for (const auto& path : dataset_paths) {
        const RatingDataset ds = load_dataset_checked(path);
        EvalGrid grid = EvalGrid::defaults_for(ds.scale);
        if (!n_values.empty()) grid.n_values = n_values;
        if (!thresholds.empty()) grid.thresholds = thresholds;
        if (!seeds.empty()) grid.seeds = seeds;

        const EvalReport report =
            run_grid(kinds, ds, grid, SplitSpec{test_fraction, grid.seeds.front()}, options);
        const std::string csv_path =
            (fs::path(out_dir) / (ds.name + "-report.csv")).string();
        write_text_file(csv_path, emit_report(report, ReportFormat::csv));
        combined += emit_report(report, ReportFormat::json_lines);
        std::cout << csv_path << "\n";
    }
    const std::string jsonl_path = (fs::path(out_dir) / "report.jsonl").string();
    write_text_file(jsonl_path, combined);
    std::cout << jsonl_path << "\n";
}

void cmd_report(const std::string& input_path, const std::string& format) {
    std::ifstream in(input_path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open '" + input_path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EvalReport report;
    try {
        report = parse_report_csv(text);
    } catch (const std::runtime_error& e) {
        // malformed input files are validation failures, not runtime faults
        throw std::invalid_argument(e.what());
    }
    std::cout << emit_report(report, format == "jsonl" ? ReportFormat::json_lines
                                                       : ReportFormat::csv);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Rating-dataset synthesis and recommender benchmarking"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI-style file");

    // stats
    auto* stats = app.add_subcommand("stats", "Print dataset statistics");
    std::string stats_dataset;
    stats->add_option("--dataset", stats_dataset, "Ratings file")
        ->required()
        ->check(CLI::ExistingFile);
    stats->callback([&] { cmd_stats(stats_dataset); });

    // split
    auto* sp = app.add_subcommand("split", "Write train/test partitions");
    std::string sp_dataset, sp_out = ".";
    double sp_fraction = 0.2;
    std::uint64_t sp_seed = 1;
    sp->add_option("--dataset", sp_dataset, "Ratings file")->required()->check(CLI::ExistingFile);
    sp->add_option("--out", sp_out, "Output directory");
    sp->add_option("--test-fraction", sp_fraction, "Share of each user's ratings held out")
        ->check(CLI::Range(0.0, 1.0));
    sp->add_option("--seed", sp_seed, "Random seed");
    sp->callback([&] { cmd_split(sp_dataset, sp_out, sp_fraction, sp_seed); });

    // train
    auto* tr = app.add_subcommand("train", "Train one model and save a checkpoint");
    std::string tr_dataset, tr_out = ".", tr_model;
    CommonTrainFlags tr_flags;
    tr->add_option("--dataset", tr_dataset, "Ratings file")->required()->check(CLI::ExistingFile);
    tr->add_option("--out", tr_out, "Output directory");
    tr->add_option("--model", tr_model, "Model kind")->required();
    tr_flags.attach(tr);
    tr->callback([&] { cmd_train(tr_dataset, tr_out, tr_model, tr_flags); });

    // gan
    auto* gn = app.add_subcommand("gan", "Train the synthesis GAN on a dataset");
    std::string gn_dataset, gn_out = ".";
    CommonTrainFlags gn_flags;
    gn_flags.epochs = 30;
    gn_flags.batch = 128;
    GanConfig gan_cfg;
    std::size_t gn_embed_epochs = 15;
    double gn_embed_lr = 5e-3;
    gn->add_option("--dataset", gn_dataset, "Ratings file")->required()->check(CLI::ExistingFile);
    gn->add_option("--out", gn_out, "Output directory");
    gn_flags.attach(gn);
    gn->add_option("--noise-sigma", gan_cfg.noise_sigma, "Std. dev. of the noise prior")
        ->check(CLI::PositiveNumber)
        ->default_val(2.5);
    gn->add_option("--embed-epochs", gn_embed_epochs, "Embedding pre-stage epochs");
    gn->add_option("--embed-lr", gn_embed_lr, "Embedding pre-stage learning rate")
        ->check(CLI::PositiveNumber);
    gn->callback([&] {
        gan_cfg.epochs = gn_flags.epochs;
        gan_cfg.batch_size = gn_flags.batch;
        gan_cfg.learning_rate = gn_flags.learning_rate;
        cmd_gan(gn_dataset, gn_out, gn_flags, gan_cfg, gn_embed_epochs, gn_embed_lr);
    });

    // synthesize
    auto* sy = app.add_subcommand("synthesize", "Generate a synthetic dataset from a checkpoint");
    std::string sy_ckpt, sy_out = ".", sy_name;
    SynthesisRequest sy_req;
    sy->add_option("--checkpoint", sy_ckpt, "GAN checkpoint")->required()->check(CLI::ExistingFile);
    sy->add_option("--out", sy_out, "Output directory");
    sy->add_option("--users", sy_req.num_users, "Synthetic user count")
        ->required()
        ->check(CLI::PositiveNumber);
    sy->add_option("--items", sy_req.num_items, "Synthetic item count")
        ->required()
        ->check(CLI::PositiveNumber);
    sy->add_option("--samples", sy_req.num_samples, "Latent samples to draw")
        ->required()
        ->check(CLI::PositiveNumber);
    sy->add_option("--seed", sy_req.seed, "Random seed");
    sy->add_option("--name", sy_name, "Output base name (default: ganrs-<source>-<samples>)");
    sy->callback([&] { cmd_synthesize(sy_ckpt, sy_out, sy_req, sy_name); });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Split, train, and score one model at one (N, theta)");
    std::string ev_dataset, ev_model = "deepmf";
    std::size_t ev_n = 10;
    int ev_theta = 0;
    double ev_fraction = 0.2;
    CommonTrainFlags ev_flags;
    ev->add_option("--dataset", ev_dataset, "Ratings file")->required()->check(CLI::ExistingFile);
    ev->add_option("--model", ev_model, "Model kind");
    ev->add_option("--n", ev_n, "Recommendation list length")->check(CLI::PositiveNumber);
    ev->add_option("--theta", ev_theta, "Relevance threshold (default: scale max - 1)");
    ev->add_option("--test-fraction", ev_fraction, "Share of each user's ratings held out")
        ->check(CLI::Range(0.0, 1.0));
    ev_flags.attach(ev);
    ev->callback([&] { cmd_evaluate(ev_dataset, ev_model, ev_n, ev_theta, ev_fraction, ev_flags); });

    // experiment
    auto* ex = app.add_subcommand("experiment", "Run the full evaluation grid and emit reports");
    std::vector<std::string> ex_datasets, ex_models;
    std::string ex_out = ".";
    std::vector<std::size_t> ex_n_values;
    std::vector<int> ex_thresholds;
    std::vector<std::uint64_t> ex_seeds;
    double ex_fraction = 0.2;
    CommonTrainFlags ex_flags;
    std::size_t ex_jobs = 1;
    ex->add_option("--dataset", ex_datasets, "Ratings file(s)")
        ->required()
        ->check(CLI::ExistingFile)
        ->delimiter(',');
    ex->add_option("--out", ex_out, "Output directory");
    ex->add_option("--models", ex_models, "Model kinds (default: all)")->delimiter(',');
    ex->add_option("--n-values", ex_n_values, "Recommendation list lengths")->delimiter(',');
    ex->add_option("--thresholds", ex_thresholds, "Relevance thresholds")->delimiter(',');
    ex->add_option("--seeds", ex_seeds, "Seeds to average over")->delimiter(',');
    ex->add_option("--test-fraction", ex_fraction, "Share of each user's ratings held out")
        ->check(CLI::Range(0.0, 1.0));
    ex_flags.attach(ex);
    ex->add_option("--jobs", ex_jobs, "Concurrent grid cells")->check(CLI::PositiveNumber);
    ex->callback([&] {
        cmd_experiment(ex_datasets, ex_out, ex_models, ex_n_values, ex_thresholds, ex_seeds,
                       ex_fraction, ex_flags, ex_jobs);
    });

    // report
    auto* rp = app.add_subcommand("report", "Validate and convert a report file");
    std::string rp_input, rp_format = "csv";
    rp->add_option("--input", rp_input, "Report CSV")->required()->check(CLI::ExistingFile);
    rp->add_option("--format", rp_format, "Output format")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    rp->callback([&] { cmd_report(rp_input, rp_format); });

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace synrec
