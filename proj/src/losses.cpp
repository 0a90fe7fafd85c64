#include "synrec/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace synrec {

namespace {
constexpr double kProbFloor = 1e-12;
}

LossResult loss_eval(LossKind kind, const std::vector<double>& prediction,
                     const std::vector<double>& target) {
    if (prediction.size() != target.size()) {
        throw std::invalid_argument("loss_eval: prediction length " +
                                    std::to_string(prediction.size()) +
                                    " does not match target length " +
                                    std::to_string(target.size()));
    }
    LossResult res;
    res.gradient.assign(prediction.size(), 0.0);

    switch (kind) {
        case LossKind::squared: {
            for (std::size_t i = 0; i < prediction.size(); ++i) {
                double diff = prediction[i] - target[i];
                res.value += diff * diff;
                res.gradient[i] = 2.0 * diff;
            }
            break;
        }
        case LossKind::categorical_cross_entropy: {
            for (std::size_t i = 0; i < prediction.size(); ++i) {
                double p = std::clamp(prediction[i], kProbFloor, 1.0);
                res.value -= target[i] * std::log(p);
                res.gradient[i] = -target[i] / p;
            }
            break;
        }
        case LossKind::binary_cross_entropy: {
            for (std::size_t i = 0; i < prediction.size(); ++i) {
                double p = std::clamp(prediction[i], kProbFloor, 1.0 - kProbFloor);
                double t = target[i];
                res.value -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
                res.gradient[i] = (p - t) / (p * (1.0 - p));
            }
            break;
        }
    }
    return res;
}

}  // namespace synrec
