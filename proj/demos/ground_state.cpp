// Minimal end-to-end example: optimize the 4-site Schwinger ground state with
// a small measurement budget and print the outcome against exact
// diagonalization.

#include <iostream>

#include "vqs/runner.hpp"

int main() {
    vqs::RunConfig cfg;
    cfg.schwinger = {4, 1.0, 0.1, 1.0, 0.0};
    cfg.n_layers = 4;
    cfg.optimizer.budget = 20000;
    cfg.optimizer.initial_shots = 30;
    cfg.checkpoints.count = 3;
    cfg.seed = 11;

    const vqs::RunReport rep = vqs::run_ground_state(cfg);

    std::cout << "estimated energy: " << rep.energy_opt << " +- " << rep.energy_opt_err << "\n";
    std::cout << "exact energy at the optimum: " << rep.exact_energy_opt << "\n";
    if (rep.ed_ground_energy) std::cout << "ED ground energy:  " << *rep.ed_ground_energy << "\n";
    if (rep.fidelity_opt) std::cout << "fidelity vs ED:    " << *rep.fidelity_opt << "\n";
    if (rep.qse) std::cout << "QSE gap estimate:  " << rep.qse->gap << "\n";
    for (const auto& c : rep.checkpoints)
        std::cout << "checkpoint @ budget " << c.budget_spent << ": error bar " << c.error_bar << " +- "
                  << c.error_bar_err << "\n";
    return 0;
}
