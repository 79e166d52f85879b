#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "intent/numcore/layers.hpp"

namespace intent {

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

// `loss_and_grad` evaluates the loss at the current parameter values and
// leaves the analytic gradient in each ParamRef::grad (it must zero them
// first). Every element is compared with the central difference
// (f(t+h) - f(t-h)) / 2h using |a - n| / max(|a|, |n|, 1e-8).
inline GradCheckReport grad_check_report(const std::function<double()>& loss_and_grad, std::span<const ParamRef> params,
                                         double h) {
    loss_and_grad();
    std::vector<Vector> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.emplace_back(p.grad.begin(), p.grad.end());

    GradCheckReport report;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto value = params[k].value;
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + h;
            const double up = loss_and_grad();
            value[i] = saved - h;
            const double down = loss_and_grad();
            value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[k][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            if (rel > report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_param = params[k].name;
                report.worst_index = i;
            }
        }
    }
    loss_and_grad();
    return report;
}

inline double grad_check(const std::function<double()>& loss_and_grad, std::span<const ParamRef> params, double h) {
    return grad_check_report(loss_and_grad, params, h).max_relative_error;
}

}  // namespace intent
