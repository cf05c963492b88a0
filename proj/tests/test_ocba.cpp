#include <catch_amalgamated.hpp>

#include <numeric>

#include "vqs/ocba.hpp"

using namespace vqs;

TEST_CASE("two identical candidates split evenly") {
    const auto alloc = ocba_allocate({{1.0, 0.5}, {1.0, 0.5}}, 100);
    CHECK(alloc[0] + alloc[1] == 100);
    CHECK(std::abs(alloc[0] - alloc[1]) <= 1);
}

TEST_CASE("higher variance at equal gap draws more shots") {
    const auto alloc = ocba_allocate({{0.0, 0.1}, {1.0, 0.3}, {1.0, 0.95}}, 1000);
    CHECK(std::accumulate(alloc.begin(), alloc.end(), 0L) == 1000);
    CHECK(alloc[2] > alloc[1]);
}

TEST_CASE("three-candidate allocation matches direct formula recomputation") {
    const std::vector<OcbaCandidate> cands{{0.0, 0.4}, {0.5, 0.6}, {1.2, 0.8}};
    const long total = 10000;
    const auto alloc = ocba_allocate(cands, total);

    // direct recomputation: N_i proportional to (sigma_i/delta_i)^2 for the
    // non-best, N_b = sigma_b sqrt(sum (N_i/sigma_i)^2)
    const double w1 = std::pow(0.6 / 0.5, 2);
    const double w2 = std::pow(0.8 / 1.2, 2);
    const double wb = 0.4 * std::sqrt(std::pow(w1 / 0.6, 2) + std::pow(w2 / 0.8, 2));
    const double wsum = w1 + w2 + wb;
    CHECK(std::accumulate(alloc.begin(), alloc.end(), 0L) == total);
    CHECK(alloc[0] == Catch::Approx(total * wb / wsum).margin(1.0));
    CHECK(alloc[1] == Catch::Approx(total * w1 / wsum).margin(1.0));
    CHECK(alloc[2] == Catch::Approx(total * w2 / wsum).margin(1.0));
}

TEST_CASE("degenerate inputs stay well-defined") {
    const auto alloc = ocba_allocate({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}, 10);
    CHECK(std::accumulate(alloc.begin(), alloc.end(), 0L) == 10);
    CHECK_THROWS_AS(ocba_allocate({{0.0, 1.0}}, 10), std::invalid_argument);
    CHECK_THROWS_AS(ocba_allocate({{0.0, 1.0}, {1.0, 1.0}}, 0), std::invalid_argument);
}

TEST_CASE("integer rounding preserves the total for awkward budgets") {
    for (const long total : {1L, 3L, 7L, 17L, 101L}) {
        const auto alloc = ocba_allocate({{0.0, 0.3}, {0.2, 0.7}, {0.9, 0.5}, {1.4, 0.2}}, total);
        CHECK(std::accumulate(alloc.begin(), alloc.end(), 0L) == total);
        for (const long a : alloc) CHECK(a >= 0);
    }
}
