#pragma once

// Central finite-difference gradient oracle. Lives in test code and is
// independent of the backward implementations it checks.

#include <cmath>
#include <functional>
#include <vector>

#include "hybridlm/autodiff.hpp"

namespace testutil {

// |a - b| / max(1, |a|, |b|)
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central differences on every element of `param`, h = 1e-3. `loss_value`
// must recompute the scalar loss from scratch on each call.
inline std::vector<double> fd_gradient(hybridlm::ad::NodePtr param, const std::function<double()>& loss_value,
                                       double h = 1e-3) {
    std::vector<double> grad(param->value.numel());
    for (size_t i = 0; i < param->value.numel(); ++i) {
        const float orig = param->value.data[i];
        param->value.data[i] = orig + static_cast<float>(h);
        const double up = loss_value();
        param->value.data[i] = orig - static_cast<float>(h);
        const double down = loss_value();
        param->value.data[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

// Max relative error between an analytic gradient and its FD estimate.
inline double max_grad_rel_err(const std::vector<float>& analytic, const std::vector<double>& fd) {
    double worst = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        worst = std::max(worst, rel_err(static_cast<double>(analytic[i]), fd[i]));
    }
    return worst;
}

}  // namespace testutil
