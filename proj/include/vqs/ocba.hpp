#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vqs {

struct OcbaCandidate {
    double mean = 0.0;
    double sigma = 0.0; // noise scale of one additional sample at this point
};

// Optimal Computing Budget Allocation for picking the minimum: non-best
// designs receive budget proportional to (sigma_i / delta_i)^2 with
// delta_i = mean_i - mean_best, and the best design gets the balancing share
// N_b = sigma_b * sqrt(sum_i (N_i / sigma_i)^2). Integer-rounded by largest
// remainder so the total equals extra_budget exactly.
inline std::vector<long> ocba_allocate(const std::vector<OcbaCandidate>& cands, long extra_budget) {
    const std::size_t k = cands.size();
    if (k < 2) throw std::invalid_argument("ocba_allocate: need >= 2 candidates");
    if (extra_budget <= 0) throw std::invalid_argument("ocba_allocate: extra_budget must be > 0");

    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i)
        if (cands[i].mean < cands[best].mean) best = i;

    double scale = 0.0;
    for (const auto& c : cands) scale = std::max({scale, std::abs(c.mean), c.sigma});
    const double tiny = std::max(scale, 1.0) * 1e-12;

    std::vector<double> w(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (i == best) continue;
        const double delta = std::max(std::abs(cands[i].mean - cands[best].mean), tiny);
        const double sigma = std::max(cands[i].sigma, tiny);
        w[i] = (sigma / delta) * (sigma / delta);
    }
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (i == best) continue;
        const double sigma = std::max(cands[i].sigma, tiny);
        sum_sq += (w[i] / sigma) * (w[i] / sigma);
    }
    w[best] = std::max(cands[best].sigma, tiny) * std::sqrt(sum_sq);

    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<long> alloc(k, 0);
    if (wsum <= 0.0) { // all-deterministic candidates: split evenly
        for (std::size_t i = 0; i < k; ++i) alloc[i] = extra_budget / static_cast<long>(k);
        for (std::size_t i = 0; i < static_cast<std::size_t>(extra_budget % static_cast<long>(k)); ++i) ++alloc[i];
        return alloc;
    }

    std::vector<std::pair<double, std::size_t>> rem(k);
    long assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double ideal = extra_budget * w[i] / wsum;
        alloc[i] = static_cast<long>(std::floor(ideal));
        assigned += alloc[i];
        rem[i] = {ideal - std::floor(ideal), i};
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long t = 0; t < extra_budget - assigned; ++t) ++alloc[rem[static_cast<std::size_t>(t)].second];
    return alloc;
}

} // namespace vqs
