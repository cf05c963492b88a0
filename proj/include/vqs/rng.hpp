#pragma once

#include <cstdint>
#include <random>

namespace vqs {

// Counter-based seed derivation: every stochastic call in a run owns a seed
// computed from (master seed, call index), so runs replay bit-for-bit and
// concurrent samplers never share generator state.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x51700e6bdf2b8d4dULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

// Monotone per-run counter handing out one fresh seed per stochastic call.
class SeedSequencer {
public:
    explicit SeedSequencer(std::uint64_t master) : master_(master) {}

    std::uint64_t next() { return derive_seed(master_, counter_++); }
    std::uint64_t master() const { return master_; }
    std::uint64_t issued() const { return counter_; }

private:
    std::uint64_t master_;
    std::uint64_t counter_ = 0;
};

} // namespace vqs
