#include "synrec/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "synrec/optim.hpp"

namespace synrec {

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::deepmf: return "deepmf";
        case ModelKind::vdeepmf: return "vdeepmf";
        case ModelKind::ncf_regression: return "ncf_regression";
        case ModelKind::ncf_classification: return "ncf_classification";
        case ModelKind::ncf_classification_improved: return "ncf_classification_improved";
        case ModelKind::binary_regression: return "binary_regression";
    }
    return "unknown";
}

std::optional<ModelKind> model_kind_from_string(const std::string& name) {
    for (ModelKind kind : kAllModelKinds) {
        if (name == to_string(kind)) return kind;
    }
    return std::nullopt;
}

NetConfig NetConfig::defaults_for(ModelKind kind) {
    NetConfig cfg;
    switch (kind) {
        case ModelKind::deepmf:
        case ModelKind::vdeepmf:
            cfg.output = OutputKind::linear_unit;
            break;
        case ModelKind::ncf_regression:
            cfg.hidden = {50, 20};
            cfg.dropout = {0.4, 0.4};
            cfg.output = OutputKind::rectified_unit;
            break;
        case ModelKind::binary_regression:
            cfg.hidden = {50, 20};
            cfg.dropout = {0.4, 0.4};
            cfg.output = OutputKind::sigmoid_unit;
            break;
        case ModelKind::ncf_classification:
        case ModelKind::ncf_classification_improved:
            cfg.hidden = {80, 25};
            cfg.dropout = {0.6, 0.4};
            cfg.output = OutputKind::softmax_classes;
            break;
    }
    return cfg;
}

LossKind loss_kind_for(ModelKind kind) {
    switch (kind) {
        case ModelKind::deepmf:
        case ModelKind::vdeepmf:
        case ModelKind::ncf_regression:
            return LossKind::squared;
        case ModelKind::ncf_classification:
        case ModelKind::ncf_classification_improved:
            return LossKind::categorical_cross_entropy;
        case ModelKind::binary_regression:
            return LossKind::binary_cross_entropy;
    }
    return LossKind::squared;
}

int binary_relevance_threshold(const NetConfig& config, const RatingScale& scale) {
    return config.relevance_threshold != 0 ? config.relevance_threshold : scale.max_rating - 1;
}

namespace {

Activation output_activation(OutputKind kind) {
    switch (kind) {
        case OutputKind::linear_unit: return Activation::linear;
        case OutputKind::rectified_unit: return Activation::rectifier;
        case OutputKind::sigmoid_unit: return Activation::sigmoid;
        case OutputKind::softmax_classes: return Activation::softmax;
    }
    return Activation::linear;
}

bool is_classification(ModelKind kind) {
    return kind == ModelKind::ncf_classification ||
           kind == ModelKind::ncf_classification_improved;
}

bool has_mlp(ModelKind kind) {
    return kind == ModelKind::ncf_regression || kind == ModelKind::binary_regression ||
           is_classification(kind);
}

constexpr double kEmbeddingInitStddev = 0.05;

void init_embeddings(Tensor2& emb, Rng& rng) {
    for (auto& v : emb.data) v = rng.normal(0.0, kEmbeddingInitStddev);
}

std::vector<double> embedding_row(const Tensor2& emb, int id) {
    return std::vector<double>(emb.row(static_cast<std::size_t>(id)),
                               emb.row(static_cast<std::size_t>(id)) + emb.cols);
}

// Everything the backward pass needs from one forward evaluation.
struct ForwardCache {
    std::vector<DenseCache> mlp_caches;
    DenseCache user_mean_cache, user_var_cache, item_mean_cache, item_var_cache;
    std::vector<double> user_var_out, item_var_out;
    std::vector<double> user_sample, item_sample;
    std::vector<double> prediction;
};

std::vector<double> model_forward(const TrainedModel& model, int user, int item,
                                  const SampleNoise& noise, ForwardCache* cache) {
    const auto u = static_cast<std::size_t>(user);
    const auto i = static_cast<std::size_t>(item);
    if (user < 0 || u >= model.num_users) {
        throw std::out_of_range("model: user id " + std::to_string(user) + " outside [0, " +
                                std::to_string(model.num_users) + ")");
    }
    if (item < 0 || i >= model.num_items) {
        throw std::out_of_range("model: item id " + std::to_string(item) + " outside [0, " +
                                std::to_string(model.num_items) + ")");
    }

    std::vector<double> user_vec = embedding_row(model.user_embeddings, user);
    std::vector<double> item_vec = embedding_row(model.item_embeddings, item);

    std::vector<double> pred;
    if (model.kind == ModelKind::deepmf) {
        pred = {dot(user_vec, item_vec)};
    } else if (model.kind == ModelKind::vdeepmf) {
        ForwardCache local;
        ForwardCache& c = cache ? *cache : local;
        auto user_mean = dense_forward(user_vec, model.user_mean, &c.user_mean_cache);
        c.user_var_out = dense_forward(user_vec, model.user_var, &c.user_var_cache);
        auto item_mean = dense_forward(item_vec, model.item_mean, &c.item_mean_cache);
        c.item_var_out = dense_forward(item_vec, model.item_var, &c.item_var_cache);
        c.user_sample = reparameterize(user_mean, c.user_var_out, noise.user_eps);
        c.item_sample = reparameterize(item_mean, c.item_var_out, noise.item_eps);
        pred = {dot(c.user_sample, c.item_sample)};
    } else {
        // Table-style concatenation: item embedding first, then user embedding.
        std::vector<double> x;
        x.reserve(user_vec.size() + item_vec.size());
        x.insert(x.end(), item_vec.begin(), item_vec.end());
        x.insert(x.end(), user_vec.begin(), user_vec.end());

        ForwardCache local;
        ForwardCache& c = cache ? *cache : local;
        c.mlp_caches.resize(model.mlp.size());
        for (std::size_t l = 0; l < model.mlp.size(); ++l) {
            x = dense_forward(x, model.mlp[l], &c.mlp_caches[l]);
            if (l < noise.dropout_masks.size()) {
                const auto& mask = noise.dropout_masks[l];
                for (std::size_t j = 0; j < x.size(); ++j) x[j] *= mask[j];
            }
        }
        pred = std::move(x);
    }

    if (cache) cache->prediction = pred;
    return pred;
}

std::vector<double> training_target(const TrainedModel& model, int rating) {
    switch (loss_kind_for(model.kind)) {
        case LossKind::squared: {
            double y = static_cast<double>(rating);
            if (model.config.normalize_targets) {
                double range = static_cast<double>(model.scale.max_rating - model.scale.min_rating);
                y = range > 0.0 ? (y - model.scale.min_rating) / range : 0.0;
            }
            return {y};
        }
        case LossKind::binary_cross_entropy: {
            int threshold = binary_relevance_threshold(model.config, model.scale);
            return {rating >= threshold ? 1.0 : 0.0};
        }
        case LossKind::categorical_cross_entropy: {
            if (rating < 0 || rating > model.scale.max_rating) {
                throw std::out_of_range("train: rating " + std::to_string(rating) +
                                        " outside class range 0.." +
                                        std::to_string(model.scale.max_rating));
            }
            std::vector<double> target(static_cast<std::size_t>(model.scale.max_rating) + 1, 0.0);
            target[static_cast<std::size_t>(rating)] = 1.0;
            return target;
        }
    }
    return {};
}

void accumulate_embedding_grad(Tensor2& grad, int id, const std::vector<double>& g) {
    double* row = grad.row(static_cast<std::size_t>(id));
    for (std::size_t k = 0; k < g.size(); ++k) row[k] += g[k];
}

// Accumulates d(loss)/d(params) into a zero-initialized model-shaped buffer.
void model_backward(const TrainedModel& model, int user, int item, const ForwardCache& cache,
                    const SampleNoise& noise, const std::vector<double>& dpred,
                    TrainedModel& grads) {
    if (model.kind == ModelKind::deepmf) {
        const double g = dpred[0];
        const double* pu = model.user_embeddings.row(static_cast<std::size_t>(user));
        const double* qi = model.item_embeddings.row(static_cast<std::size_t>(item));
        double* du = grads.user_embeddings.row(static_cast<std::size_t>(user));
        double* di = grads.item_embeddings.row(static_cast<std::size_t>(item));
        for (std::size_t k = 0; k < model.user_embeddings.cols; ++k) {
            du[k] += g * qi[k];
            di[k] += g * pu[k];
        }
        return;
    }

    if (model.kind == ModelKind::vdeepmf) {
        const double g = dpred[0];
        const std::size_t K = model.user_embeddings.cols;
        std::vector<double> d_user_sample(K), d_item_sample(K);
        for (std::size_t k = 0; k < K; ++k) {
            d_user_sample[k] = g * cache.item_sample[k];
            d_item_sample[k] = g * cache.user_sample[k];
        }

        auto side = [&](const std::vector<double>& d_sample, const DenseLayer& mean_layer,
                        const DenseLayer& var_layer, const DenseCache& mean_cache,
                        const DenseCache& var_cache, const std::vector<double>& var_out,
                        const std::vector<double>& eps, DenseLayer& mean_grad,
                        DenseLayer& var_grad, Tensor2& emb_grad, int id) {
            auto rep = reparameterize_backward(d_sample, var_out, eps);
            std::vector<double> d_input_mean, d_input_var;
            dense_backward_acc(rep.mean_grad, mean_layer, mean_cache, mean_grad.weights,
                               mean_grad.bias, d_input_mean);
            dense_backward_acc(rep.variance_grad, var_layer, var_cache, var_grad.weights,
                               var_grad.bias, d_input_var);
            for (std::size_t k = 0; k < d_input_mean.size(); ++k) {
                d_input_mean[k] += d_input_var[k];
            }
            accumulate_embedding_grad(emb_grad, id, d_input_mean);
        };
        side(d_user_sample, model.user_mean, model.user_var, cache.user_mean_cache,
             cache.user_var_cache, cache.user_var_out, noise.user_eps, grads.user_mean,
             grads.user_var, grads.user_embeddings, user);
        side(d_item_sample, model.item_mean, model.item_var, cache.item_mean_cache,
             cache.item_var_cache, cache.item_var_out, noise.item_eps, grads.item_mean,
             grads.item_var, grads.item_embeddings, item);
        return;
    }

    // Dense-stack kinds.
    std::vector<double> upstream = dpred;
    for (std::size_t l = model.mlp.size(); l-- > 0;) {
        std::vector<double> input_grad;
        dense_backward_acc(upstream, model.mlp[l], cache.mlp_caches[l], grads.mlp[l].weights,
                           grads.mlp[l].bias, input_grad);
        upstream = std::move(input_grad);
        if (l > 0 && l - 1 < noise.dropout_masks.size()) {
            const auto& mask = noise.dropout_masks[l - 1];
            for (std::size_t j = 0; j < upstream.size(); ++j) upstream[j] *= mask[j];
        }
    }
    const std::size_t K = model.user_embeddings.cols;
    std::vector<double> d_item(upstream.begin(), upstream.begin() + static_cast<std::ptrdiff_t>(K));
    std::vector<double> d_user(upstream.begin() + static_cast<std::ptrdiff_t>(K), upstream.end());
    accumulate_embedding_grad(grads.item_embeddings, item, d_item);
    accumulate_embedding_grad(grads.user_embeddings, user, d_user);
}

TrainedModel zeroed_like(const TrainedModel& model) {
    TrainedModel z = model;
    for (auto block : parameter_blocks(z)) {
        std::fill(block.begin(), block.end(), 0.0);
    }
    z.epoch_losses.clear();
    return z;
}

}  // namespace

TrainedModel build(ModelKind kind, std::size_t num_users, std::size_t num_items,
                   const RatingScale& scale, const NetConfig& config, Rng& rng) {
    if (num_users == 0 || num_items == 0 || config.latent_dim == 0) {
        throw std::invalid_argument("build: users, items, and latent_dim must be positive (got " +
                                    std::to_string(num_users) + ", " + std::to_string(num_items) +
                                    ", " + std::to_string(config.latent_dim) + ")");
    }
    if (config.hidden.size() != config.dropout.size()) {
        throw std::invalid_argument("build: hidden widths (" + std::to_string(config.hidden.size()) +
                                    ") and dropout rates (" + std::to_string(config.dropout.size()) +
                                    ") must have equal length");
    }
    if (is_classification(kind) && scale.min_rating < 0) {
        throw std::invalid_argument("build: classification needs a non-negative rating scale");
    }

    TrainedModel model;
    model.kind = kind;
    model.num_users = num_users;
    model.num_items = num_items;
    model.scale = scale;
    model.config = config;

    const std::size_t K = config.latent_dim;
    model.user_embeddings = Tensor2(num_users, K);
    model.item_embeddings = Tensor2(num_items, K);
    init_embeddings(model.user_embeddings, rng);
    init_embeddings(model.item_embeddings, rng);

    if (kind == ModelKind::vdeepmf) {
        model.user_mean = make_dense(K, K, Activation::linear, rng);
        model.user_var = make_dense(K, K, Activation::rectifier, rng);
        model.item_mean = make_dense(K, K, Activation::linear, rng);
        model.item_var = make_dense(K, K, Activation::rectifier, rng);
    }

    if (has_mlp(kind)) {
        std::size_t out_width = 1;
        if (config.output == OutputKind::softmax_classes) {
            out_width = static_cast<std::size_t>(scale.max_rating) + 1;
        }
        std::size_t in_width = 2 * K;
        for (std::size_t h : config.hidden) {
            model.mlp.push_back(make_dense(in_width, h, Activation::rectifier, rng));
            in_width = h;
        }
        model.mlp.push_back(make_dense(in_width, out_width, output_activation(config.output), rng));
    }
    return model;
}

SampleNoise draw_sample_noise(const TrainedModel& model, Rng& rng) {
    SampleNoise noise;
    for (std::size_t l = 0; l < model.config.hidden.size(); ++l) {
        noise.dropout_masks.push_back(
            dropout_mask(model.config.hidden[l], model.config.dropout[l], rng));
    }
    if (model.kind == ModelKind::vdeepmf) {
        noise.user_eps = rng.normal_vector(model.config.latent_dim);
        noise.item_eps = rng.normal_vector(model.config.latent_dim);
    }
    return noise;
}

SampleNoise inference_noise(const TrainedModel& model) {
    SampleNoise noise;
    for (std::size_t h : model.config.hidden) {
        noise.dropout_masks.emplace_back(h, 1.0);
    }
    if (model.kind == ModelKind::vdeepmf) {
        noise.user_eps.assign(model.config.latent_dim, 0.0);
        noise.item_eps.assign(model.config.latent_dim, 0.0);
    }
    return noise;
}

std::vector<std::span<double>> parameter_blocks(TrainedModel& model) {
    std::vector<std::span<double>> blocks;
    auto add_tensor = [&](Tensor2& t) { blocks.emplace_back(t.data); };
    auto add_vec = [&](std::vector<double>& v) { blocks.emplace_back(v); };
    add_tensor(model.user_embeddings);
    add_tensor(model.item_embeddings);
    if (model.kind == ModelKind::vdeepmf) {
        for (DenseLayer* layer : {&model.user_mean, &model.user_var, &model.item_mean,
                                  &model.item_var}) {
            add_tensor(layer->weights);
            add_vec(layer->bias);
        }
    }
    for (auto& layer : model.mlp) {
        add_tensor(layer.weights);
        add_vec(layer.bias);
    }
    return blocks;
}

std::vector<std::string> parameter_block_names(const TrainedModel& model) {
    std::vector<std::string> names{"user_embeddings", "item_embeddings"};
    if (model.kind == ModelKind::vdeepmf) {
        for (const char* head : {"user_mean", "user_var", "item_mean", "item_var"}) {
            names.push_back(std::string(head) + ".weights");
            names.push_back(std::string(head) + ".bias");
        }
    }
    for (std::size_t l = 0; l < model.mlp.size(); ++l) {
        names.push_back("mlp" + std::to_string(l) + ".weights");
        names.push_back("mlp" + std::to_string(l) + ".bias");
    }
    return names;
}

double training_loss(const TrainedModel& model, const std::vector<RatingTriple>& triples,
                     const std::vector<SampleNoise>& noise) {
    if (triples.size() != noise.size()) {
        throw std::invalid_argument("training_loss: need one noise plan per triple");
    }
    double total = 0.0;
    const LossKind kind = loss_kind_for(model.kind);
    for (std::size_t j = 0; j < triples.size(); ++j) {
        auto pred = model_forward(model, triples[j].user, triples[j].item, noise[j], nullptr);
        total += loss_eval(kind, pred, training_target(model, triples[j].rating)).value;
    }
    return total / static_cast<double>(triples.size());
}

std::vector<double> training_gradient(const TrainedModel& model,
                                      const std::vector<RatingTriple>& triples,
                                      const std::vector<SampleNoise>& noise) {
    if (triples.size() != noise.size()) {
        throw std::invalid_argument("training_gradient: need one noise plan per triple");
    }
    TrainedModel grads = zeroed_like(model);
    const LossKind kind = loss_kind_for(model.kind);
    for (std::size_t j = 0; j < triples.size(); ++j) {
        ForwardCache cache;
        model_forward(model, triples[j].user, triples[j].item, noise[j], &cache);
        auto loss = loss_eval(kind, cache.prediction, training_target(model, triples[j].rating));
        model_backward(model, triples[j].user, triples[j].item, cache, noise[j], loss.gradient,
                       grads);
    }
    std::vector<double> flat;
    const double inv_n = 1.0 / static_cast<double>(triples.size());
    for (auto block : parameter_blocks(grads)) {
        for (double g : block) flat.push_back(g * inv_n);
    }
    return flat;
}

void train(TrainedModel& model, const RatingDataset& train_set, Rng& rng) {
    for (const auto& t : train_set.triples) {
        if (t.user < 0 || static_cast<std::size_t>(t.user) >= model.num_users ||
            t.item < 0 || static_cast<std::size_t>(t.item) >= model.num_items) {
            throw std::out_of_range("train: triple (" + std::to_string(t.user) + ", " +
                                    std::to_string(t.item) + ") outside model dimensions " +
                                    std::to_string(model.num_users) + "x" +
                                    std::to_string(model.num_items));
        }
    }
    if (model.config.epochs == 0 || train_set.triples.empty()) return;

    TrainedModel grads = zeroed_like(model);
    auto param_views = parameter_blocks(model);
    auto grad_views = parameter_blocks(grads);
    std::vector<AdamState> states;
    states.reserve(param_views.size());
    for (const auto& block : param_views) {
        states.emplace_back(block.size(), model.config.learning_rate);
    }

    const std::size_t n = train_set.triples.size();
    const std::size_t batch = std::max<std::size_t>(1, model.config.batch_size);
    const LossKind kind = loss_kind_for(model.kind);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < model.config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            for (auto block : grad_views) std::fill(block.begin(), block.end(), 0.0);
            for (std::size_t j = start; j < end; ++j) {
                const RatingTriple& t = train_set.triples[order[j]];
                SampleNoise noise = draw_sample_noise(model, rng);
                ForwardCache cache;
                model_forward(model, t.user, t.item, noise, &cache);
                auto loss = loss_eval(kind, cache.prediction, training_target(model, t.rating));
                epoch_loss += loss.value;
                model_backward(model, t.user, t.item, cache, noise, loss.gradient, grads);
            }
            const double inv_bn = 1.0 / static_cast<double>(end - start);
            for (std::size_t b = 0; b < param_views.size(); ++b) {
                for (auto& g : grad_views[b]) g *= inv_bn;
                adam_step(param_views[b].data(), grad_views[b].data(), param_views[b].size(),
                          states[b]);
            }
        }
        model.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
    }
}

double predict_score(const TrainedModel& model, int user, int item) {
    if (is_classification(model.kind)) {
        ClassDistribution dist = predict_distribution(model, user, item);
        if (model.kind == ModelKind::ncf_classification) {
            return static_cast<double>(argmax_vote(dist));
        }
        return expected_vote(dist);
    }

    SampleNoise noise = inference_noise(model);
    auto pred = model_forward(model, user, item, noise, nullptr);
    double out = pred[0];
    if (loss_kind_for(model.kind) == LossKind::squared && model.config.normalize_targets) {
        out = model.scale.min_rating +
              out * static_cast<double>(model.scale.max_rating - model.scale.min_rating);
    }
    if (model.kind == ModelKind::ncf_regression) {
        out = std::clamp(out, static_cast<double>(model.scale.min_rating),
                         static_cast<double>(model.scale.max_rating));
    }
    return out;
}

ClassDistribution predict_distribution(const TrainedModel& model, int user, int item) {
    if (!is_classification(model.kind)) {
        throw std::invalid_argument(std::string("predict_distribution: model kind ") +
                                    to_string(model.kind) + " has no class distribution");
    }
    SampleNoise noise = inference_noise(model);
    ClassDistribution dist;
    dist.probabilities = model_forward(model, user, item, noise, nullptr);
    dist.votes.resize(dist.probabilities.size());
    std::iota(dist.votes.begin(), dist.votes.end(), 0);
    dist.min_vote = model.scale.min_rating;
    return dist;
}

int argmax_vote(const ClassDistribution& dist) {
    int best_vote = dist.min_vote;
    double best_prob = -1.0;
    for (std::size_t c = 0; c < dist.probabilities.size(); ++c) {
        if (dist.votes[c] < dist.min_vote) continue;
        if (dist.probabilities[c] >= best_prob) {  // >= breaks ties toward the higher vote
            best_prob = dist.probabilities[c];
            best_vote = dist.votes[c];
        }
    }
    return best_vote;
}

double expected_vote(const ClassDistribution& dist) {
    double mass = 0.0;
    double weighted = 0.0;
    for (std::size_t c = 0; c < dist.probabilities.size(); ++c) {
        if (dist.votes[c] < dist.min_vote) continue;
        mass += dist.probabilities[c];
        weighted += dist.probabilities[c] * dist.votes[c];
    }
    if (mass <= 0.0) {
        throw std::runtime_error("expected_vote: no probability mass on valid vote classes");
    }
    return weighted / mass;
}

}  // namespace synrec
