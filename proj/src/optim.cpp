#include "synrec/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace synrec {

void adam_step(double* params, const double* grads, std::size_t n, AdamState& state) {
    if (state.first_moment.size() != n) {
        throw std::invalid_argument("adam_step: state tracks " +
                                    std::to_string(state.first_moment.size()) +
                                    " parameters, got " + std::to_string(n));
    }
    state.step += 1;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("adam_step: params length " + std::to_string(params.size()) +
                                    " does not match grads length " + std::to_string(grads.size()));
    }
    adam_step(params.data(), grads.data(), params.size(), state);
}

}  // namespace synrec
