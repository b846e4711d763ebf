#include "hybridlm/optim.hpp"

#include <cmath>

#include "hybridlm/errors.hpp"

namespace hybridlm::ad {

Adam::Adam(std::vector<NodePtr> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (!(cfg_.lr > 0.0f)) {
        throw ConfigError("adam: learning rate must be positive, got " + std::to_string(cfg_.lr));
    }
    slots_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        slots_[i].m.assign(params_[i]->value.numel(), 0.0f);
        slots_[i].v.assign(params_[i]->value.numel(), 0.0f);
    }
}

void Adam::step(float grad_scale) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(step_count_));
    for (size_t p = 0; p < params_.size(); ++p) {
        Node* n = params_[p].get();
        if (!n->requires_grad) continue;
        n->ensure_grad();
        Slot& s = slots_[p];
        float* w = n->value.data.data();
        const float* g = n->grad.data();
        for (size_t i = 0; i < n->value.numel(); ++i) {
            const float gi = g[i] * grad_scale;
            s.m[i] = cfg_.beta1 * s.m[i] + (1.0f - cfg_.beta1) * gi;
            s.v[i] = cfg_.beta2 * s.v[i] + (1.0f - cfg_.beta2) * gi * gi;
            const float mhat = static_cast<float>(s.m[i] / bc1);
            const float vhat = static_cast<float>(s.v[i] / bc2);
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

}  // namespace hybridlm::ad
