#pragma once

#include <cstdint>
#include <vector>

#include "hybridlm/autodiff.hpp"

namespace hybridlm::ad {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Standard Adam with bias correction over a fixed parameter list.
// step() consumes node->grad (scaled by grad_scale) and leaves it untouched;
// callers zero gradients between accumulation windows.
class Adam {
public:
    Adam(std::vector<NodePtr> params, AdamConfig cfg);

    void step(float grad_scale = 1.0f);
    void zero_grad();
    int64_t steps_taken() const { return step_count_; }

private:
    struct Slot {
        std::vector<float> m;
        std::vector<float> v;
    };
    std::vector<NodePtr> params_;
    std::vector<Slot> slots_;
    AdamConfig cfg_;
    int64_t step_count_ = 0;
};

}  // namespace hybridlm::ad
