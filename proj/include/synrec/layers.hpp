#pragma once

#include <vector>

#include "synrec/rng.hpp"
#include "synrec/tensor.hpp"

namespace synrec {

enum class Activation {
    linear,
    rectifier,
    leaky_rectifier,  // slope 0.2 on the negative side
    sigmoid,
    softmax,
};

/// Fully connected layer: output = activation(input * weights + bias).
/// weights is in_width x out_width, bias has out_width entries.
struct DenseLayer {
    Tensor2 weights;
    std::vector<double> bias;
    Activation activation = Activation::linear;

    std::size_t in_width() const { return weights.rows; }
    std::size_t out_width() const { return weights.cols; }
};

/// Glorot-uniform weights, zero bias.
DenseLayer make_dense(std::size_t in_width, std::size_t out_width, Activation act, Rng& rng);

/// Forward state consumed by dense_backward.
struct DenseCache {
    std::vector<double> input;
    std::vector<double> preact;
    std::vector<double> output;

    bool empty() const { return input.empty(); }
};

struct DenseGrads {
    std::vector<double> input_grad;
    Tensor2 weight_grad;
    std::vector<double> bias_grad;
};

std::vector<double> dense_forward(const std::vector<double>& input, const DenseLayer& layer,
                                  DenseCache* cache = nullptr);

DenseGrads dense_backward(const std::vector<double>& upstream_grad, const DenseLayer& layer,
                          const DenseCache& cache);

/// In-place accumulating variant used by the training loops; grads must be
/// pre-sized to the layer's shapes. Returns the input gradient through `input_grad`.
void dense_backward_acc(const std::vector<double>& upstream_grad, const DenseLayer& layer,
                        const DenseCache& cache, Tensor2& weight_grad_acc,
                        std::vector<double>& bias_grad_acc, std::vector<double>& input_grad);

/// Numerically stable softmax (max subtraction). Throws on empty input.
std::vector<double> softmax(const std::vector<double>& logits);

/// Inverted dropout mask: entries are 0 with probability rate, else 1/(1-rate).
/// rate 0 gives an all-ones mask.
std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng);

/// Gaussian reparameterization: mean + sqrt(variance) * eps, elementwise.
/// Throws if any variance component is negative.
std::vector<double> reparameterize(const std::vector<double>& mean,
                                   const std::vector<double>& variance,
                                   const std::vector<double>& eps);

/// Convenience overload drawing eps ~ N(0, I) from rng; eps_out receives the draw
/// so the backward pass (and tests) can replay it.
std::vector<double> reparameterize(const std::vector<double>& mean,
                                   const std::vector<double>& variance, Rng& rng,
                                   std::vector<double>* eps_out = nullptr);

struct ReparamGrads {
    std::vector<double> mean_grad;
    std::vector<double> variance_grad;
};

/// Gradient of the sample w.r.t. mean and variance for a fixed eps.
/// d/d_variance is eps/(2*sqrt(variance)); taken as 0 where variance < 1e-12
/// (the subgradient at the boundary, which keeps rectified variance heads finite).
ReparamGrads reparameterize_backward(const std::vector<double>& upstream_grad,
                                     const std::vector<double>& variance,
                                     const std::vector<double>& eps);

}  // namespace synrec
