// Self-verification in isolation: measure the algorithmic error bar of the
// bare vacuum and of the exact ground state, showing the eigenstate criterion
// E^2 -> 0.

#include <iostream>

#include "vqs/cdr.hpp"
#include "vqs/ed.hpp"
#include "vqs/measure.hpp"
#include "vqs/schwinger.hpp"

int main() {
    const int n = 8;
    const vqs::SchwingerParams sp{n, 1.0, 0.1, 1.0, 0.0};
    const auto H = vqs::build_hamiltonian(sp);
    const auto plan = vqs::variance_bases(n);
    vqs::VarianceEstimator est(H, plan);

    auto measure = [&](const vqs::StateVector& state, const char* label) {
        vqs::CdrStore cdr;
        vqs::SeedSequencer seeds(99);
        Eigen::VectorXd tag = Eigen::VectorXd::Zero(1);
        for (const auto& basis : plan) {
            auto b = vqs::sample(state, basis, 20000, seeds.next());
            b.theta = tag;
            cdr.store(std::move(b));
        }
        const auto energy = vqs::estimate_energy(cdr, tag, H);
        const auto ve = vqs::estimate_variance(cdr, tag, H, energy.value);
        std::cout << label << ": E = " << energy.value << " +- " << energy.std_error
                  << ", error bar = " << ve.error_bar << " +- " << ve.error_bar_sigma << "\n";
    };

    measure(vqs::neel_state(n), "bare vacuum");
    measure(vqs::ed_ground_state(H, n / 2).state, "exact ground state");
    std::cout << "expected vacuum error bar: sqrt(N-1) = " << std::sqrt(n - 1.0) << "\n";
    return 0;
}
