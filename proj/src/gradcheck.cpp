#include "synrec/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace synrec {

GradCheckReport grad_check(const std::function<double()>& loss_at, std::span<double> params,
                           std::span<const double> analytic_grad, double step) {
    if (params.size() != analytic_grad.size()) {
        throw std::invalid_argument("grad_check: params length " + std::to_string(params.size()) +
                                    " does not match gradient length " +
                                    std::to_string(analytic_grad.size()));
    }
    if (!std::isfinite(loss_at())) {
        throw std::runtime_error("grad_check: loss is not finite at the given parameters");
    }

    GradCheckReport report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double plus = loss_at();
        params[i] = saved - step;
        const double minus = loss_at();
        params[i] = saved;

        const double numeric = (plus - minus) / (2.0 * step);
        const double analytic = analytic_grad[i];
        const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
        const double rel = std::fabs(analytic - numeric) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.analytic_at_worst = analytic;
            report.numeric_at_worst = numeric;
        }
    }
    return report;
}

}  // namespace synrec
