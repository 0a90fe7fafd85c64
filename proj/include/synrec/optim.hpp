#pragma once

#include <cstddef>
#include <vector>

namespace synrec {

/// Bias-corrected adaptive-moment state for one parameter block.
struct AdamState {
    std::size_t step = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n = 0, double lr = 1e-3)
        : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {}
};

/// Standard bias-corrected update; params and grads must match the state size.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state);

/// Raw-pointer variant for parameter blocks embedded in larger structures.
void adam_step(double* params, const double* grads, std::size_t n, AdamState& state);

}  // namespace synrec
