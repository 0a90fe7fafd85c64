#include "synrec/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace synrec {

namespace {

double activate_scalar(double x, Activation act) {
    switch (act) {
        case Activation::linear: return x;
        case Activation::rectifier: return x > 0.0 ? x : 0.0;
        case Activation::leaky_rectifier: return x > 0.0 ? x : 0.2 * x;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::softmax: break;  // handled vector-wise
    }
    return x;
}

// Derivative of the activation at preact z with output y (scalar activations only).
double activate_deriv(double z, double y, Activation act) {
    switch (act) {
        case Activation::linear: return 1.0;
        case Activation::rectifier: return z > 0.0 ? 1.0 : 0.0;
        case Activation::leaky_rectifier: return z > 0.0 ? 1.0 : 0.2;
        case Activation::sigmoid: return y * (1.0 - y);
        case Activation::softmax: break;
    }
    return 1.0;
}

}  // namespace

DenseLayer make_dense(std::size_t in_width, std::size_t out_width, Activation act, Rng& rng) {
    DenseLayer layer;
    layer.weights = Tensor2(in_width, out_width);
    layer.bias.assign(out_width, 0.0);
    layer.activation = act;
    double limit = std::sqrt(6.0 / static_cast<double>(in_width + out_width));
    for (auto& w : layer.weights.data) w = rng.uniform(-limit, limit);
    return layer;
}

std::vector<double> dense_forward(const std::vector<double>& input, const DenseLayer& layer,
                                  DenseCache* cache) {
    if (input.size() != layer.in_width()) {
        throw std::invalid_argument("dense_forward: input length " +
                                    std::to_string(input.size()) +
                                    " does not match layer input width " +
                                    std::to_string(layer.in_width()));
    }
    const std::size_t out = layer.out_width();
    std::vector<double> preact(layer.bias);
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double xi = input[i];
        if (xi == 0.0) continue;
        const double* wrow = layer.weights.row(i);
        for (std::size_t j = 0; j < out; ++j) preact[j] += xi * wrow[j];
    }

    std::vector<double> output;
    if (layer.activation == Activation::softmax) {
        output = softmax(preact);
    } else {
        output.resize(out);
        for (std::size_t j = 0; j < out; ++j) output[j] = activate_scalar(preact[j], layer.activation);
    }

    if (cache) {
        cache->input = input;
        cache->preact = std::move(preact);
        cache->output = output;
    }
    return output;
}

void dense_backward_acc(const std::vector<double>& upstream_grad, const DenseLayer& layer,
                        const DenseCache& cache, Tensor2& weight_grad_acc,
                        std::vector<double>& bias_grad_acc, std::vector<double>& input_grad) {
    if (cache.empty()) {
        throw std::runtime_error("dense_backward: no cached forward pass");
    }
    if (upstream_grad.size() != layer.out_width()) {
        throw std::invalid_argument("dense_backward: upstream length " +
                                    std::to_string(upstream_grad.size()) +
                                    " does not match layer output width " +
                                    std::to_string(layer.out_width()));
    }

    const std::size_t out = layer.out_width();
    const std::size_t in = layer.in_width();

    // Gradient w.r.t. the pre-activation.
    std::vector<double> dpre(out);
    if (layer.activation == Activation::softmax) {
        // Full softmax Jacobian: dz_i = p_i * (g_i - sum_j g_j p_j).
        double mix = 0.0;
        for (std::size_t j = 0; j < out; ++j) mix += upstream_grad[j] * cache.output[j];
        for (std::size_t j = 0; j < out; ++j) {
            dpre[j] = cache.output[j] * (upstream_grad[j] - mix);
        }
    } else {
        for (std::size_t j = 0; j < out; ++j) {
            dpre[j] = upstream_grad[j] *
                      activate_deriv(cache.preact[j], cache.output[j], layer.activation);
        }
    }

    for (std::size_t j = 0; j < out; ++j) bias_grad_acc[j] += dpre[j];
    input_grad.assign(in, 0.0);
    for (std::size_t i = 0; i < in; ++i) {
        const double xi = cache.input[i];
        const double* wrow = layer.weights.row(i);
        double* grow = weight_grad_acc.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < out; ++j) {
            grow[j] += xi * dpre[j];
            acc += wrow[j] * dpre[j];
        }
        input_grad[i] = acc;
    }
}

DenseGrads dense_backward(const std::vector<double>& upstream_grad, const DenseLayer& layer,
                          const DenseCache& cache) {
    DenseGrads grads;
    grads.weight_grad = Tensor2(layer.in_width(), layer.out_width());
    grads.bias_grad.assign(layer.out_width(), 0.0);
    dense_backward_acc(upstream_grad, layer, cache, grads.weight_grad, grads.bias_grad,
                       grads.input_grad);
    return grads;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) {
        throw std::invalid_argument("softmax: empty input");
    }
    double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - max_logit);
        total += out[i];
    }
    for (auto& v : out) v /= total;
    return out;
}

std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng) {
    std::vector<double> mask(n, 1.0);
    if (rate <= 0.0) return mask;
    if (rate >= 1.0) {
        throw std::invalid_argument("dropout_mask: rate must be < 1, got " + std::to_string(rate));
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

std::vector<double> reparameterize(const std::vector<double>& mean,
                                   const std::vector<double>& variance,
                                   const std::vector<double>& eps) {
    if (mean.size() != variance.size() || mean.size() != eps.size()) {
        throw std::invalid_argument("reparameterize: length mismatch mean=" +
                                    std::to_string(mean.size()) + " variance=" +
                                    std::to_string(variance.size()) + " eps=" +
                                    std::to_string(eps.size()));
    }
    std::vector<double> out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        if (variance[i] < 0.0) {
            throw std::invalid_argument("reparameterize: negative variance " +
                                        std::to_string(variance[i]) + " at component " +
                                        std::to_string(i));
        }
        out[i] = mean[i] + std::sqrt(variance[i]) * eps[i];
    }
    return out;
}

std::vector<double> reparameterize(const std::vector<double>& mean,
                                   const std::vector<double>& variance, Rng& rng,
                                   std::vector<double>* eps_out) {
    std::vector<double> eps = rng.normal_vector(mean.size());
    auto out = reparameterize(mean, variance, eps);
    if (eps_out) *eps_out = std::move(eps);
    return out;
}

ReparamGrads reparameterize_backward(const std::vector<double>& upstream_grad,
                                     const std::vector<double>& variance,
                                     const std::vector<double>& eps) {
    ReparamGrads grads;
    grads.mean_grad = upstream_grad;
    grads.variance_grad.assign(variance.size(), 0.0);
    for (std::size_t i = 0; i < variance.size(); ++i) {
        if (variance[i] >= 1e-12) {
            grads.variance_grad[i] = upstream_grad[i] * eps[i] / (2.0 * std::sqrt(variance[i]));
        }
    }
    return grads;
}

}  // namespace synrec
