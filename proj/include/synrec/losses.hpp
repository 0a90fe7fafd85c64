#pragma once

#include <vector>

namespace synrec {

enum class LossKind {
    squared,
    categorical_cross_entropy,
    binary_cross_entropy,
};

struct LossResult {
    double value = 0.0;
    std::vector<double> gradient;  // d value / d prediction
};

/// Loss over one prediction/target pair of equal length.
/// squared: sum of squared componentwise errors.
/// categorical: -sum target_i * log(prediction_i), predictions clamped at 1e-12.
/// binary: -[t log p + (1-t) log(1-p)] summed componentwise, p clamped to
/// [1e-12, 1-1e-12].
LossResult loss_eval(LossKind kind, const std::vector<double>& prediction,
                     const std::vector<double>& target);

}  // namespace synrec
