#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synrec/checkpoint.hpp"
#include "synrec/dataset.hpp"
#include "synrec/layers.hpp"
#include "synrec/models.hpp"
#include "synrec/rng.hpp"
#include "synrec/tensor.hpp"

namespace synrec {

// Dense user/item vectors extracted from a trained factorization model.
struct EmbeddingSpace {
    Tensor2 user_vectors;  // U x K
    Tensor2 item_vectors;  // I x K
    RatingScale scale;
    std::string source_name;
};

// A latent sample is one row of width 2K+1: user part, item part, then the
// rating normalized to [0,1]. Banks and generated batches are Tensor2 rows.
inline constexpr std::size_t latent_width(std::size_t latent_dim) { return 2 * latent_dim + 1; }

struct GanConfig {
    std::size_t noise_dim = 32;
    std::vector<std::size_t> generator_hidden = {64, 64};
    std::vector<std::size_t> discriminator_hidden = {64, 32};
    double noise_sigma = 2.5;
    std::size_t epochs = 30;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.5;
    bool saturating_generator_loss = false;
    std::size_t kmeans_iters = 30;  // Lloyd budget when quantizing synthetic identities
};

struct GanBundle {
    GanConfig config;
    std::size_t latent_dim = 0;
    RatingScale scale;
    std::string source_name;
    std::vector<DenseLayer> generator;      // noise_dim -> hidden -> 2K+1, rating slot sigmoid
    std::vector<DenseLayer> discriminator;  // 2K+1 -> hidden -> 1 sigmoid
    std::vector<double> disc_epoch_losses, gen_epoch_losses;
    double holdout_accuracy = 0.0;
};

struct SynthesisRequest {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t num_samples = 0;
    RatingScale scale{0, 0};  // min == max means: inherit the bundle's scale
    std::uint64_t seed = 1;
};

EmbeddingSpace embed_dataset(const RatingDataset& ds, std::size_t latent_dim, Rng& rng,
                             const NetConfig& base = NetConfig{});

Tensor2 real_sample_bank(const EmbeddingSpace& space, const RatingDataset& ds);

// Negated two-term adversarial objective, averaged per batch; inputs clamped
// away from 0 and 1 at 1e-12 before the logs.
double discriminator_loss(const std::vector<double>& d_real, const std::vector<double>& d_fake);
// Non-saturating form: -mean log d_fake.
double generator_loss(const std::vector<double>& d_fake);
// Literal minimax form: mean log(1 - d_fake); kept for fidelity testing.
double generator_loss_saturating(const std::vector<double>& d_fake);

GanBundle build_gan(std::size_t latent_dim, const RatingScale& scale, std::string source_name,
                    const GanConfig& config, Rng& rng);
GanBundle train_gan(const Tensor2& bank, std::size_t latent_dim, const RatingScale& scale,
                    std::string source_name, const GanConfig& config, Rng& rng);

std::vector<double> generator_forward(const GanBundle& g, const double* noise_row);
double discriminator_forward(const GanBundle& g, const double* sample_row);

Tensor2 generate(const GanBundle& g, std::size_t count, Rng& rng);
RatingDataset synthesize(const GanBundle& g, const SynthesisRequest& req);

// Gradient-verification surface: flattened-parameter losses and analytic
// gradients for each network, with the opposite network held fixed.
std::vector<std::span<double>> net_parameter_blocks(std::vector<DenseLayer>& net);
double discriminator_training_loss(const GanBundle& g, const Tensor2& real, const Tensor2& fake);
std::vector<double> discriminator_training_gradient(const GanBundle& g, const Tensor2& real,
                                                    const Tensor2& fake);
double generator_training_loss(const GanBundle& g, const Tensor2& noise);
std::vector<double> generator_training_gradient(const GanBundle& g, const Tensor2& noise);

Container gan_to_container(const GanBundle& g);
GanBundle gan_from_container(const Container& c);
void save_gan(const GanBundle& g, const std::string& path);
GanBundle load_gan(const std::string& path);

}  // namespace synrec
