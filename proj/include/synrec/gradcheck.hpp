#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace synrec {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

/// Compares an analytic gradient against central finite differences of `loss_at`,
/// perturbing each parameter in place by +-step. The loss function must be
/// deterministic (freeze any dropout masks or noise draws before calling).
/// Relative error uses denominator max(1, |analytic|, |numeric|), suited to
/// parameters and gradients scaled O(1).
/// Throws if the loss is non-finite at the given parameters.
GradCheckReport grad_check(const std::function<double()>& loss_at, std::span<double> params,
                           std::span<const double> analytic_grad, double step = 1e-4);

}  // namespace synrec
