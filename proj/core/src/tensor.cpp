#include "hybridlm/tensor.hpp"

#include <cmath>
#include <sstream>

#include "hybridlm/errors.hpp"

namespace hybridlm::ad {

size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return shape.empty() ? 0 : n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

TensorData::TensorData(std::vector<int> s, float fill) : shape(std::move(s)) {
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimension must be positive, got shape " + shape_to_string(shape));
    }
    data.assign(shape_numel(shape), fill);
}

TensorData::TensorData(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("shape " + shape_to_string(shape) + " does not match data length " +
                             std::to_string(data.size()));
    }
}

TensorData TensorData::randn(std::vector<int> s, Rng& rng, float stddev) {
    TensorData t(std::move(s));
    for (float& v : t.data) v = rng.next_normal(0.0f, stddev);
    return t;
}

bool TensorData::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string TensorData::shape_str() const { return shape_to_string(shape); }

}  // namespace hybridlm::ad
