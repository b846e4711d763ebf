#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hybridlm/rng.hpp"

namespace hybridlm::ad {

// Dense row-major float32 storage. Everything in this project is rank 1 or 2;
// scalars are shape {1}.
struct TensorData {
    std::vector<int> shape;
    std::vector<float> data;

    TensorData() = default;
    explicit TensorData(std::vector<int> s, float fill = 0.0f);
    TensorData(std::vector<int> s, std::vector<float> d);

    static TensorData scalar(float v) { return TensorData({1}, {v}); }
    static TensorData randn(std::vector<int> s, Rng& rng, float stddev);

    size_t numel() const { return data.size(); }
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() > 1 ? shape[1] : 1; }

    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    bool same_shape(const TensorData& other) const { return shape == other.shape; }
    bool all_finite() const;
    std::string shape_str() const;
};

size_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace hybridlm::ad
