#include "synrec/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "synrec/kmeans.hpp"
#include "synrec/optim.hpp"

namespace synrec {

namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid_of(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::vector<double> stack_forward(const std::vector<DenseLayer>& net, const double* in,
                                  std::size_t in_width, std::vector<DenseCache>* caches) {
    std::vector<double> x(in, in + in_width);
    if (caches) caches->resize(net.size());
    for (std::size_t l = 0; l < net.size(); ++l) {
        x = dense_forward(x, net[l], caches ? &(*caches)[l] : nullptr);
    }
    return x;
}

void stack_backward(const std::vector<DenseLayer>& net, const std::vector<DenseCache>& caches,
                    std::vector<double> upstream, std::vector<DenseLayer>& grads,
                    std::vector<double>* input_grad) {
    for (std::size_t l = net.size(); l-- > 0;) {
        std::vector<double> ig;
        dense_backward_acc(upstream, net[l], caches[l], grads[l].weights, grads[l].bias, ig);
        upstream = std::move(ig);
    }
    if (input_grad) *input_grad = std::move(upstream);
}

std::vector<DenseLayer> zeroed_net(const std::vector<DenseLayer>& net) {
    std::vector<DenseLayer> z = net;
    for (auto& layer : z) {
        std::fill(layer.weights.data.begin(), layer.weights.data.end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
    return z;
}

std::vector<double> flatten_net(const std::vector<DenseLayer>& net) {
    std::vector<double> flat;
    for (const auto& layer : net) {
        flat.insert(flat.end(), layer.weights.data.begin(), layer.weights.data.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

// Generator output: linear stack, then a sigmoid squashing the rating slot.
std::vector<double> gen_forward_cached(const GanBundle& g, const double* noise_row,
                                       std::vector<DenseCache>* caches) {
    auto x = stack_forward(g.generator, noise_row, g.config.noise_dim, caches);
    x.back() = sigmoid_of(x.back());
    return x;
}

void gen_backward(const GanBundle& g, const std::vector<DenseCache>& caches,
                  double rating_slot_value, std::vector<double> d_output,
                  std::vector<DenseLayer>& grads) {
    const double s = rating_slot_value;
    d_output.back() *= s * (1.0 - s);
    stack_backward(g.generator, caches, std::move(d_output), grads, nullptr);
}

void draw_noise(std::vector<double>& z, const GanConfig& config, Rng& rng) {
    z.resize(config.noise_dim);
    for (auto& v : z) v = rng.normal(0.0, config.noise_sigma);
}

}  // namespace

EmbeddingSpace embed_dataset(const RatingDataset& ds, std::size_t latent_dim, Rng& rng,
                             const NetConfig& base) {
    if (ds.triples.empty()) {
        throw std::invalid_argument("embed_dataset: dataset '" + ds.name + "' has no ratings");
    }
    NetConfig cfg = base;
    cfg.latent_dim = latent_dim;
    cfg.hidden.clear();
    cfg.dropout.clear();
    cfg.output = OutputKind::linear_unit;
    cfg.normalize_targets = true;
    TrainedModel model = build(ModelKind::deepmf, ds.num_users, ds.num_items, ds.scale, cfg, rng);
    train(model, ds, rng);
    return EmbeddingSpace{model.user_embeddings, model.item_embeddings, ds.scale, ds.name};
}

Tensor2 real_sample_bank(const EmbeddingSpace& space, const RatingDataset& ds) {
    const std::size_t K = space.user_vectors.cols;
    const double range = static_cast<double>(space.scale.max_rating - space.scale.min_rating);
    if (range <= 0.0) {
        throw std::invalid_argument("real_sample_bank: degenerate rating scale");
    }
    Tensor2 bank(ds.triples.size(), latent_width(K));
    for (std::size_t j = 0; j < ds.triples.size(); ++j) {
        const RatingTriple& t = ds.triples[j];
        if (t.user < 0 || static_cast<std::size_t>(t.user) >= space.user_vectors.rows ||
            t.item < 0 || static_cast<std::size_t>(t.item) >= space.item_vectors.rows) {
            throw std::out_of_range("real_sample_bank: triple (" + std::to_string(t.user) + ", " +
                                    std::to_string(t.item) + ") outside the embedding space");
        }
        double* row = bank.row(j);
        std::copy_n(space.user_vectors.row(static_cast<std::size_t>(t.user)), K, row);
        std::copy_n(space.item_vectors.row(static_cast<std::size_t>(t.item)), K, row + K);
        row[2 * K] = (t.rating - space.scale.min_rating) / range;
    }
    return bank;
}

double discriminator_loss(const std::vector<double>& d_real, const std::vector<double>& d_fake) {
    if (d_real.empty() || d_fake.empty()) {
        throw std::invalid_argument("discriminator_loss: empty batch");
    }
    double real_term = 0.0, fake_term = 0.0;
    for (double d : d_real) real_term += std::log(std::max(d, kProbClamp));
    for (double d : d_fake) fake_term += std::log(std::max(1.0 - d, kProbClamp));
    return -(real_term / static_cast<double>(d_real.size()) +
             fake_term / static_cast<double>(d_fake.size()));
}

double generator_loss(const std::vector<double>& d_fake) {
    if (d_fake.empty()) throw std::invalid_argument("generator_loss: empty batch");
    double term = 0.0;
    for (double d : d_fake) term += std::log(std::max(d, kProbClamp));
    return -term / static_cast<double>(d_fake.size());
}

double generator_loss_saturating(const std::vector<double>& d_fake) {
    if (d_fake.empty()) throw std::invalid_argument("generator_loss: empty batch");
    double term = 0.0;
    for (double d : d_fake) term += std::log(std::max(1.0 - d, kProbClamp));
    return term / static_cast<double>(d_fake.size());
}

GanBundle build_gan(std::size_t latent_dim, const RatingScale& scale, std::string source_name,
                    const GanConfig& config, Rng& rng) {
    if (latent_dim == 0 || config.noise_dim == 0) {
        throw std::invalid_argument("build_gan: latent_dim and noise_dim must be positive");
    }
    if (config.noise_sigma <= 0.0) {
        throw std::invalid_argument("build_gan: noise_sigma must be positive (got " +
                                    std::to_string(config.noise_sigma) + ")");
    }
    GanBundle g;
    g.config = config;
    g.latent_dim = latent_dim;
    g.scale = scale;
    g.source_name = std::move(source_name);

    const std::size_t width = latent_width(latent_dim);
    std::size_t in = config.noise_dim;
    for (std::size_t h : config.generator_hidden) {
        g.generator.push_back(make_dense(in, h, Activation::leaky_rectifier, rng));
        in = h;
    }
    g.generator.push_back(make_dense(in, width, Activation::linear, rng));

    in = width;
    for (std::size_t h : config.discriminator_hidden) {
        g.discriminator.push_back(make_dense(in, h, Activation::leaky_rectifier, rng));
        in = h;
    }
    g.discriminator.push_back(make_dense(in, 1, Activation::sigmoid, rng));
    return g;
}

std::vector<double> generator_forward(const GanBundle& g, const double* noise_row) {
    return gen_forward_cached(g, noise_row, nullptr);
}

double discriminator_forward(const GanBundle& g, const double* sample_row) {
    return stack_forward(g.discriminator, sample_row, latent_width(g.latent_dim), nullptr)[0];
}

std::vector<std::span<double>> net_parameter_blocks(std::vector<DenseLayer>& net) {
    std::vector<std::span<double>> blocks;
    for (auto& layer : net) {
        blocks.emplace_back(layer.weights.data);
        blocks.emplace_back(layer.bias);
    }
    return blocks;
}

double discriminator_training_loss(const GanBundle& g, const Tensor2& real, const Tensor2& fake) {
    std::vector<double> d_real, d_fake;
    for (std::size_t j = 0; j < real.rows; ++j) d_real.push_back(discriminator_forward(g, real.row(j)));
    for (std::size_t j = 0; j < fake.rows; ++j) d_fake.push_back(discriminator_forward(g, fake.row(j)));
    return discriminator_loss(d_real, d_fake);
}

std::vector<double> discriminator_training_gradient(const GanBundle& g, const Tensor2& real,
                                                    const Tensor2& fake) {
    if (real.rows == 0 || fake.rows == 0) {
        throw std::invalid_argument("discriminator_loss: empty batch");
    }
    auto grads = zeroed_net(g.discriminator);
    std::vector<DenseCache> caches;
    const std::size_t width = latent_width(g.latent_dim);
    for (std::size_t j = 0; j < real.rows; ++j) {
        const double d = stack_forward(g.discriminator, real.row(j), width, &caches)[0];
        const double up = d > kProbClamp ? -1.0 / (static_cast<double>(real.rows) * d) : 0.0;
        stack_backward(g.discriminator, caches, {up}, grads, nullptr);
    }
    for (std::size_t j = 0; j < fake.rows; ++j) {
        const double d = stack_forward(g.discriminator, fake.row(j), width, &caches)[0];
        const double up =
            1.0 - d > kProbClamp ? 1.0 / (static_cast<double>(fake.rows) * (1.0 - d)) : 0.0;
        stack_backward(g.discriminator, caches, {up}, grads, nullptr);
    }
    return flatten_net(grads);
}

double generator_training_loss(const GanBundle& g, const Tensor2& noise) {
    std::vector<double> d_fake;
    for (std::size_t j = 0; j < noise.rows; ++j) {
        auto x = generator_forward(g, noise.row(j));
        d_fake.push_back(discriminator_forward(g, x.data()));
    }
    return g.config.saturating_generator_loss ? generator_loss_saturating(d_fake)
                                              : generator_loss(d_fake);
}

std::vector<double> generator_training_gradient(const GanBundle& g, const Tensor2& noise) {
    if (noise.rows == 0) throw std::invalid_argument("generator_loss: empty batch");
    auto grads = zeroed_net(g.generator);
    auto disc_scratch = zeroed_net(g.discriminator);
    std::vector<DenseCache> gen_caches, disc_caches;
    const double n = static_cast<double>(noise.rows);
    for (std::size_t j = 0; j < noise.rows; ++j) {
        auto x = gen_forward_cached(g, noise.row(j), &gen_caches);
        const double d =
            stack_forward(g.discriminator, x.data(), latent_width(g.latent_dim), &disc_caches)[0];
        double up;
        if (g.config.saturating_generator_loss) {
            up = 1.0 - d > kProbClamp ? -1.0 / (n * (1.0 - d)) : 0.0;
        } else {
            up = d > kProbClamp ? -1.0 / (n * d) : 0.0;
        }
        std::vector<double> dx;
        stack_backward(g.discriminator, disc_caches, {up}, disc_scratch, &dx);
        gen_backward(g, gen_caches, x.back(), std::move(dx), grads);
    }
    return flatten_net(grads);
}

GanBundle train_gan(const Tensor2& bank, std::size_t latent_dim, const RatingScale& scale,
                    std::string source_name, const GanConfig& config, Rng& rng) {
    if (bank.cols != latent_width(latent_dim)) {
        throw std::invalid_argument("train_gan: bank width " + std::to_string(bank.cols) +
                                    " does not match latent_dim " + std::to_string(latent_dim));
    }
    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
    if (bank.rows < batch) {
        throw std::invalid_argument("train_gan: batch size " + std::to_string(batch) +
                                    " larger than bank of " + std::to_string(bank.rows));
    }

    GanBundle g = build_gan(latent_dim, scale, std::move(source_name), config, rng);
    const std::size_t width = latent_width(latent_dim);

    std::size_t holdout = bank.rows >= batch + 64 ? std::min<std::size_t>(256, bank.rows / 5) : 0;
    if (bank.rows - holdout < batch) holdout = 0;
    const std::size_t train_rows = bank.rows - holdout;

    auto gen_params = net_parameter_blocks(g.generator);
    auto disc_params = net_parameter_blocks(g.discriminator);
    auto gen_grads = zeroed_net(g.generator);
    auto disc_grads = zeroed_net(g.discriminator);
    auto disc_scratch = zeroed_net(g.discriminator);
    auto gen_grad_views = net_parameter_blocks(gen_grads);
    auto disc_grad_views = net_parameter_blocks(disc_grads);

    auto make_states = [&](const std::vector<std::span<double>>& params) {
        std::vector<AdamState> states;
        for (const auto& p : params) {
            states.emplace_back(p.size(), config.learning_rate);
            states.back().beta1 = config.adam_beta1;
        }
        return states;
    };
    auto gen_states = make_states(gen_params);
    auto disc_states = make_states(disc_params);

    auto zero_all = [](std::vector<std::span<double>>& views) {
        for (auto v : views) std::fill(v.begin(), v.end(), 0.0);
    };
    auto apply = [](std::vector<std::span<double>>& params, std::vector<std::span<double>>& grads,
                    std::vector<AdamState>& states) {
        for (std::size_t b = 0; b < params.size(); ++b) {
            adam_step(params[b].data(), grads[b].data(), params[b].size(), states[b]);
        }
    };

    std::vector<std::size_t> order(train_rows);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> z;
    std::vector<DenseCache> gen_caches, disc_caches;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double disc_sum = 0.0, gen_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < train_rows; start += batch) {
            const std::size_t end = std::min(train_rows, start + batch);
            const double b = static_cast<double>(end - start);

            // Discriminator step: real batch against a frozen-generator fake batch.
            zero_all(disc_grad_views);
            double real_term = 0.0, fake_term = 0.0;
            for (std::size_t j = start; j < end; ++j) {
                const double d =
                    stack_forward(g.discriminator, bank.row(order[j]), width, &disc_caches)[0];
                real_term += std::log(std::max(d, kProbClamp));
                const double up = d > kProbClamp ? -1.0 / (b * d) : 0.0;
                stack_backward(g.discriminator, disc_caches, {up}, disc_grads, nullptr);
            }
            for (std::size_t j = start; j < end; ++j) {
                draw_noise(z, config, rng);
                auto x = gen_forward_cached(g, z.data(), nullptr);
                const double d = stack_forward(g.discriminator, x.data(), width, &disc_caches)[0];
                fake_term += std::log(std::max(1.0 - d, kProbClamp));
                const double up = 1.0 - d > kProbClamp ? 1.0 / (b * (1.0 - d)) : 0.0;
                stack_backward(g.discriminator, disc_caches, {up}, disc_grads, nullptr);
            }
            disc_sum += -(real_term / b + fake_term / b);
            apply(disc_params, disc_grad_views, disc_states);

            // Generator step on a fresh noise batch, discriminator frozen.
            zero_all(gen_grad_views);
            double gen_term = 0.0;
            for (std::size_t j = start; j < end; ++j) {
                draw_noise(z, config, rng);
                auto x = gen_forward_cached(g, z.data(), &gen_caches);
                const double d = stack_forward(g.discriminator, x.data(), width, &disc_caches)[0];
                double up;
                if (config.saturating_generator_loss) {
                    gen_term += std::log(std::max(1.0 - d, kProbClamp));
                    up = 1.0 - d > kProbClamp ? -1.0 / (b * (1.0 - d)) : 0.0;
                } else {
                    gen_term += -std::log(std::max(d, kProbClamp));
                    up = d > kProbClamp ? -1.0 / (b * d) : 0.0;
                }
                std::vector<double> dx;
                stack_backward(g.discriminator, disc_caches, {up}, disc_scratch, &dx);
                gen_backward(g, gen_caches, x.back(), std::move(dx), gen_grads);
            }
            gen_sum += gen_term / b;
            apply(gen_params, gen_grad_views, gen_states);
            ++steps;
        }
        g.disc_epoch_losses.push_back(disc_sum / static_cast<double>(steps));
        g.gen_epoch_losses.push_back(gen_sum / static_cast<double>(steps));
    }

    // Mode-collapse tripwire: discriminator accuracy on held-out rows and
    // fresh fakes should sit strictly between 0.05 and 0.95 after training.
    const std::size_t eval_rows = holdout > 0 ? holdout : std::min<std::size_t>(256, bank.rows);
    std::size_t correct = 0;
    for (std::size_t j = bank.rows - eval_rows; j < bank.rows; ++j) {
        if (discriminator_forward(g, bank.row(j)) > 0.5) ++correct;
    }
    for (std::size_t j = 0; j < eval_rows; ++j) {
        draw_noise(z, config, rng);
        auto x = gen_forward_cached(g, z.data(), nullptr);
        if (discriminator_forward(g, x.data()) < 0.5) ++correct;
    }
    g.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(2 * eval_rows);
    return g;
}

Tensor2 generate(const GanBundle& g, std::size_t count, Rng& rng) {
    if (count == 0) throw std::invalid_argument("generate: count must be positive");
    Tensor2 out(count, latent_width(g.latent_dim));
    std::vector<double> z;
    for (std::size_t s = 0; s < count; ++s) {
        draw_noise(z, g.config, rng);
        auto x = gen_forward_cached(g, z.data(), nullptr);
        std::copy(x.begin(), x.end(), out.row(s));
    }
    return out;
}

RatingDataset synthesize(const GanBundle& g, const SynthesisRequest& req) {
    if (req.num_users == 0 || req.num_items == 0 || req.num_samples == 0) {
        throw std::invalid_argument("synthesize: users, items, and samples must be positive");
    }
    if (req.num_samples < req.num_users || req.num_samples < req.num_items) {
        throw std::invalid_argument("synthesize: " + std::to_string(req.num_samples) +
                                    " samples cannot populate " + std::to_string(req.num_users) +
                                    " users and " + std::to_string(req.num_items) + " items");
    }
    const RatingScale scale =
        req.scale.min_rating < req.scale.max_rating ? req.scale : g.scale;
    const std::size_t K = g.latent_dim;

    Rng master(req.seed);
    Rng gen_rng = master.derive(1);
    Tensor2 samples = generate(g, req.num_samples, gen_rng);

    Tensor2 user_parts(req.num_samples, K), item_parts(req.num_samples, K);
    for (std::size_t s = 0; s < req.num_samples; ++s) {
        std::copy_n(samples.row(s), K, user_parts.row(s));
        std::copy_n(samples.row(s) + K, K, item_parts.row(s));
    }
    const auto users = kmeans(user_parts, req.num_users, master.derive(2).next_u64(),
                              g.config.kmeans_iters);
    const auto items = kmeans(item_parts, req.num_items, master.derive(3).next_u64(),
                              g.config.kmeans_iters);

    RatingDataset ds;
    ds.num_users = req.num_users;
    ds.num_items = req.num_items;
    ds.scale = scale;
    ds.name = "ganrs-" + g.source_name;
    const double range = static_cast<double>(scale.max_rating - scale.min_rating);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(req.num_samples * 2);
    for (std::size_t s = 0; s < req.num_samples; ++s) {
        const auto u = users.assignments[s];
        const auto i = items.assignments[s];
        const std::uint64_t key = static_cast<std::uint64_t>(u) * req.num_items + i;
        if (!seen.insert(key).second) continue;  // duplicate pair: keep the first sample
        const double part = samples.row(s)[2 * K];
        int rating = static_cast<int>(std::llround(scale.min_rating + part * range));
        rating = std::clamp(rating, scale.min_rating, scale.max_rating);
        ds.triples.push_back({static_cast<int>(u), static_cast<int>(i), rating});
    }
    validate_dataset(ds);
    return ds;
}

Container gan_to_container(const GanBundle& g) {
    Container c;
    c.header = {
        {"kind", "GANRS"},
        {"latent_dim", g.latent_dim},
        {"scale", {{"min", g.scale.min_rating}, {"max", g.scale.max_rating}}},
        {"source_name", g.source_name},
        {"holdout_accuracy", g.holdout_accuracy},
        {"config",
         {{"noise_dim", g.config.noise_dim},
          {"generator_hidden", g.config.generator_hidden},
          {"discriminator_hidden", g.config.discriminator_hidden},
          {"noise_sigma", g.config.noise_sigma},
          {"epochs", g.config.epochs},
          {"batch_size", g.config.batch_size},
          {"learning_rate", g.config.learning_rate},
          {"adam_beta1", g.config.adam_beta1},
          {"saturating_generator_loss", g.config.saturating_generator_loss},
          {"kmeans_iters", g.config.kmeans_iters}}},
    };
    auto add_net = [&](const char* prefix, const std::vector<DenseLayer>& net) {
        for (std::size_t l = 0; l < net.size(); ++l) {
            const std::string base = std::string(prefix) + "." + std::to_string(l);
            c.blocks.push_back({base + ".weights",
                                {net[l].weights.data.begin(), net[l].weights.data.end()}});
            c.blocks.push_back({base + ".bias", net[l].bias});
        }
    };
    add_net("generator", g.generator);
    add_net("discriminator", g.discriminator);
    c.blocks.push_back({"disc_epoch_losses", g.disc_epoch_losses});
    c.blocks.push_back({"gen_epoch_losses", g.gen_epoch_losses});
    return c;
}

GanBundle gan_from_container(const Container& c) {
    const auto& h = c.header;
    if (h.at("kind").get<std::string>() != "GANRS") {
        throw std::runtime_error("checkpoint: kind '" + h.at("kind").get<std::string>() +
                                 "' is not a GANRS bundle");
    }
    GanConfig cfg;
    const auto& jc = h.at("config");
    cfg.noise_dim = jc.at("noise_dim").get<std::size_t>();
    cfg.generator_hidden = jc.at("generator_hidden").get<std::vector<std::size_t>>();
    cfg.discriminator_hidden = jc.at("discriminator_hidden").get<std::vector<std::size_t>>();
    cfg.noise_sigma = jc.at("noise_sigma").get<double>();
    cfg.epochs = jc.at("epochs").get<std::size_t>();
    cfg.batch_size = jc.at("batch_size").get<std::size_t>();
    cfg.learning_rate = jc.at("learning_rate").get<double>();
    cfg.adam_beta1 = jc.at("adam_beta1").get<double>();
    cfg.saturating_generator_loss = jc.at("saturating_generator_loss").get<bool>();
    cfg.kmeans_iters = jc.at("kmeans_iters").get<std::size_t>();

    RatingScale scale{h.at("scale").at("min").get<int>(), h.at("scale").at("max").get<int>()};
    Rng shape_rng(0);
    GanBundle g = build_gan(h.at("latent_dim").get<std::size_t>(), scale,
                            h.at("source_name").get<std::string>(), cfg, shape_rng);
    auto fill_net = [&](const char* prefix, std::vector<DenseLayer>& net) {
        for (std::size_t l = 0; l < net.size(); ++l) {
            const std::string base = std::string(prefix) + "." + std::to_string(l);
            const auto& w = c.block(base + ".weights").values;
            const auto& b = c.block(base + ".bias").values;
            if (w.size() != net[l].weights.data.size() || b.size() != net[l].bias.size()) {
                throw std::runtime_error("checkpoint: block '" + base + "' shape mismatch");
            }
            std::copy(w.begin(), w.end(), net[l].weights.data.begin());
            std::copy(b.begin(), b.end(), net[l].bias.begin());
        }
    };
    fill_net("generator", g.generator);
    fill_net("discriminator", g.discriminator);
    g.disc_epoch_losses = c.block("disc_epoch_losses").values;
    g.gen_epoch_losses = c.block("gen_epoch_losses").values;
    g.holdout_accuracy = h.at("holdout_accuracy").get<double>();
    return g;
}

void save_gan(const GanBundle& g, const std::string& path) {
    write_container_file(path, gan_to_container(g));
}

GanBundle load_gan(const std::string& path) {
    return gan_from_container(read_container_file(path));
}

}  // namespace synrec
