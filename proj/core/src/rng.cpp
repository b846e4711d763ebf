#include "hybridlm/rng.hpp"

#include <cmath>

namespace hybridlm {

float Rng::next_normal(float mean, float stddev) {
    // Box–Muller on two fresh uniforms; cos branch only.
    double u1 = next_open_closed();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double z = r * std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + stddev * static_cast<float>(z);
}

}  // namespace hybridlm
