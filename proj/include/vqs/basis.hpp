#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace vqs {

// Fixed-magnetization sector of an N-site spin-1/2 chain: all bitstrings with
// n_up set bits, ascending. Site j (1-based) is bit j-1; a set bit is spin up.
// rank() uses the combinadic of the bit positions, O(N) per lookup.
class SectorBasis {
public:
    SectorBasis(int n_sites, int n_up) : n_(n_sites), k_(n_up) {
        if (n_sites < 1 || n_sites > 30) throw std::invalid_argument("SectorBasis: n_sites out of range");
        if (n_up < 0 || n_up > n_sites) throw std::invalid_argument("SectorBasis: n_up out of range");
        binom_.assign(n_ + 1, std::vector<std::uint64_t>(n_ + 1, 0));
        for (int n = 0; n <= n_; ++n) {
            binom_[n][0] = 1;
            for (int r = 1; r <= n; ++r)
                binom_[n][r] = binom_[n - 1][r - 1] + (r <= n - 1 ? binom_[n - 1][r] : 0);
        }
        states_.reserve(binom_[n_][k_]);
        if (k_ == 0) {
            states_.push_back(0);
        } else {
            const std::uint32_t limit = 1u << n_;
            std::uint32_t v = (1u << k_) - 1;
            while (v < limit) {
                states_.push_back(v);
                // Gosper's hack: next ascending bitstring of equal popcount
                const std::uint32_t t = v | (v - 1);
                v = (t + 1) | (((~t & (t + 1)) - 1) >> (std::countr_zero(v) + 1));
            }
        }
    }

    int n_sites() const { return n_; }
    int n_up() const { return k_; }
    int magnetization() const { return 2 * k_ - n_; } // eigenvalue of sum_j sigma^z_j
    std::size_t dim() const { return states_.size(); }
    std::uint32_t state(std::size_t i) const { return states_[i]; }

    bool contains(std::uint32_t bits) const {
        return std::popcount(bits) == k_ && (bits >> n_) == 0;
    }

    std::size_t rank(std::uint32_t bits) const {
        std::uint64_t r = 0;
        int i = 0;
        std::uint32_t b = bits;
        while (b) {
            const int pos = std::countr_zero(b);
            b &= b - 1;
            ++i;
            r += binom_[pos][i];
        }
        return static_cast<std::size_t>(r);
    }

    // Shared immutable instances, keyed by (n_sites, n_up).
    static std::shared_ptr<const SectorBasis> get(int n_sites, int n_up) {
        static std::mutex mtx;
        static std::map<std::pair<int, int>, std::shared_ptr<const SectorBasis>> cache;
        std::lock_guard<std::mutex> lock(mtx);
        auto& slot = cache[{n_sites, n_up}];
        if (!slot) slot = std::make_shared<const SectorBasis>(n_sites, n_up);
        return slot;
    }

private:
    int n_, k_;
    std::vector<std::uint32_t> states_;
    std::vector<std::vector<std::uint64_t>> binom_;
};

// Reverse the site order of an N-site bitstring.
inline std::uint32_t reverse_bits_n(std::uint32_t bits, int n) {
    std::uint32_t out = 0;
    for (int i = 0; i < n; ++i)
        if (bits & (1u << i)) out |= 1u << (n - 1 - i);
    return out;
}

// CP action on a computational bitstring: reverse site order, then flip every bit.
inline std::uint32_t cp_bits(std::uint32_t bits, int n) {
    const std::uint32_t mask = (n == 32) ? ~0u : ((1u << n) - 1u);
    return ~reverse_bits_n(bits, n) & mask;
}

} // namespace vqs
