#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synrec/dataset.hpp"
#include "synrec/layers.hpp"
#include "synrec/losses.hpp"
#include "synrec/rng.hpp"
#include "synrec/tensor.hpp"

namespace synrec {

enum class ModelKind {
    deepmf,
    vdeepmf,
    ncf_regression,
    ncf_classification,
    ncf_classification_improved,
    binary_regression,
};

inline constexpr ModelKind kAllModelKinds[] = {
    ModelKind::deepmf,
    ModelKind::vdeepmf,
    ModelKind::ncf_regression,
    ModelKind::ncf_classification,
    ModelKind::ncf_classification_improved,
    ModelKind::binary_regression,
};

const char* to_string(ModelKind kind);
std::optional<ModelKind> model_kind_from_string(const std::string& name);

enum class OutputKind {
    linear_unit,
    rectified_unit,
    sigmoid_unit,
    softmax_classes,
};

struct NetConfig {
    std::size_t latent_dim = 16;
    std::vector<std::size_t> hidden;   // widths of the dense stack before the output layer
    std::vector<double> dropout;       // one rate per hidden layer
    OutputKind output = OutputKind::linear_unit;
    std::size_t epochs = 15;
    std::size_t batch_size = 512;
    int relevance_threshold = 0;       // binary regression target cut; 0 = scale max - 1
    double learning_rate = 1e-3;
    bool normalize_targets = false;    // regress (y-min)/(max-min) instead of raw ratings

    static NetConfig defaults_for(ModelKind kind);
};

/// Softmax output over vote classes 0..R. Class 0 is an artifact of indexing
/// classes by rating value; votes below min_vote never occur as targets.
struct ClassDistribution {
    std::vector<double> probabilities;
    std::vector<int> votes;  // votes[c] == c
    int min_vote = 1;
};

struct TrainedModel {
    ModelKind kind = ModelKind::deepmf;
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    RatingScale scale;
    NetConfig config;

    Tensor2 user_embeddings;  // U x K
    Tensor2 item_embeddings;  // I x K
    std::vector<DenseLayer> mlp;  // empty for deepmf/vdeepmf

    // vdeepmf only: K->K heads mapping embeddings to Gaussian parameters.
    // The variance heads use rectifier activations so variances stay >= 0.
    DenseLayer user_mean, user_var, item_mean, item_var;

    std::vector<double> epoch_losses;
};

/// Architecture per kind: embeddings + dot (deepmf), embeddings + Gaussian
/// heads + sampled dot (vdeepmf), or concatenated embeddings through the
/// configured dense stack (ncf kinds and binary regression).
TrainedModel build(ModelKind kind, std::size_t num_users, std::size_t num_items,
                   const RatingScale& scale, const NetConfig& config, Rng& rng);

/// Mini-batch training with the shared Adam optimizer. Records mean per-epoch
/// loss in model.epoch_losses. Throws if any triple id is out of range.
void train(TrainedModel& model, const RatingDataset& train_set, Rng& rng);

/// Rating estimate (regression kinds, clamped to the scale for ncf_regression),
/// argmax vote (classification), reliability-weighted expectation (improved),
/// or relevance probability (binary). Dropout off, variational means only.
double predict_score(const TrainedModel& model, int user, int item);

/// Softmax distribution over vote classes. Throws for non-classification kinds.
ClassDistribution predict_distribution(const TrainedModel& model, int user, int item);

/// Vote of the maximum-probability class, ties broken toward the higher vote.
/// Classes below dist.min_vote are excluded.
int argmax_vote(const ClassDistribution& dist);

/// Probability-weighted vote over classes >= dist.min_vote, renormalized so
/// mass on excluded classes does not bias the expectation.
double expected_vote(const ClassDistribution& dist);

// --- training internals exposed for gradient verification ---

/// Fixed stochastic draws for one sample evaluation: per-layer dropout masks
/// and, for vdeepmf, the Gaussian noise for both sides.
struct SampleNoise {
    std::vector<std::vector<double>> dropout_masks;
    std::vector<double> user_eps;
    std::vector<double> item_eps;
};

SampleNoise draw_sample_noise(const TrainedModel& model, Rng& rng);
SampleNoise inference_noise(const TrainedModel& model);

/// Mutable views of every parameter block, in a fixed documented order:
/// user embeddings, item embeddings, vdeepmf heads (mean/var x user/item,
/// weights then bias), then mlp layers (weights then bias).
std::vector<std::span<double>> parameter_blocks(TrainedModel& model);
std::vector<std::string> parameter_block_names(const TrainedModel& model);

/// Mean loss over the triples with the given frozen noise (one entry per triple).
double training_loss(const TrainedModel& model, const std::vector<RatingTriple>& triples,
                     const std::vector<SampleNoise>& noise);

/// Analytic gradient of training_loss, flattened in parameter_blocks order.
std::vector<double> training_gradient(const TrainedModel& model,
                                      const std::vector<RatingTriple>& triples,
                                      const std::vector<SampleNoise>& noise);

LossKind loss_kind_for(ModelKind kind);

/// Binary-regression target cut: config value if set, else scale max - 1.
int binary_relevance_threshold(const NetConfig& config, const RatingScale& scale);

}  // namespace synrec
