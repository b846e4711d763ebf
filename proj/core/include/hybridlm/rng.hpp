#pragma once

#include <cstdint>

namespace hybridlm {

// splitmix64: the stream mixer used everywhere seeds are derived from
// (seed, index) pairs. Keeping it self-contained makes every derived
// stream identical across standard libraries.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL));
}

// Small deterministic PRNG (xorshift-star family) with hand-rolled
// distributions. std::mt19937 would be fine on one platform, but the
// distributions in <random> are implementation-defined; these are not.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0xd1b54a32d192ed03ULL)) {
        if (state_ == 0) state_ = 0x9e3779b97f4a7c15ULL;
    }

    uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    // uniform in [0, n)
    uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    int next_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    // uniform in (0, 1]
    double next_open_closed() { return 1.0 - next_double(); }

    float next_float() { return static_cast<float>(next_double()); }

    // Box–Muller; one value per call keeps the stream layout obvious.
    float next_normal(float mean = 0.0f, float stddev = 1.0f);

private:
    uint64_t state_;
};

}  // namespace hybridlm
