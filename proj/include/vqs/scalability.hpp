#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <vector>

#include "vqs/circuit.hpp"
#include "vqs/ed.hpp"
#include "vqs/nelder_mead.hpp"
#include "vqs/rng.hpp"
#include "vqs/schwinger.hpp"
#include "vqs/state.hpp"

namespace vqs {

struct ScalabilityOptions {
    double infidelity_target = 0.05;
    double m_critical = -0.7;
    int multistarts = 8;
    int nm_iters = 400;
    std::uint64_t seed = 7;
    double w = 1.0;
    double gbar = 1.0;
    bool stop_at_target = true; // skip deeper circuits once the target depth is found
};

struct ScalabilityCell {
    int n_sites = 0;
    double delta_m = 0.0; // distance from the critical point
    int n_layers = 0;
    double infidelity = 1.0;
};

struct ScalabilityResult {
    std::vector<ScalabilityCell> table;
    // (n_sites, delta_m) -> minimal depth reaching the infidelity target, or -1
    std::map<std::pair<int, double>, int> n_req;
};

// Best infidelity achievable at fixed depth: multi-start minimization of the
// exact (infinite-shot) energy, then the fidelity of the best-energy state
// against the ED ground state.
inline double optimized_infidelity(const SchwingerParams& sp, const AnsatzSpec& ansatz, const ResourceParams& rp,
                                   const StateVector& init, const StateVector& ground, int multistarts,
                                   int nm_iters, std::uint64_t seed) {
    const PauliSum H = build_hamiltonian(sp);
    const auto dims = ansatz.dimensions();
    const int d = static_cast<int>(dims.size());
    Eigen::VectorXd lo(d), hi(d), step(d);
    std::vector<bool> periodic(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        lo[i] = dims[static_cast<std::size_t>(i)].lo;
        hi[i] = dims[static_cast<std::size_t>(i)].hi;
        periodic[static_cast<std::size_t>(i)] = dims[static_cast<std::size_t>(i)].periodic;
        step[i] = 0.15 * (hi[i] - lo[i]);
    }
    auto energy = [&](const Eigen::VectorXd& th) {
        return exact_expectation(prepare_trial_state(ansatz, {th}, rp, init), H);
    };

    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    NmOptions nm;
    nm.max_iters = nm_iters;
    double best_e = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_th;
    for (int s = 0; s < multistarts; ++s) {
        Eigen::VectorXd x0(d);
        if (s == 0) {
            for (int i = 0; i < d; ++i) x0[i] = dims[static_cast<std::size_t>(i)].entangling ? 0.1 * (hi[i] - lo[i]) : 0.0;
        } else {
            for (int i = 0; i < d; ++i) x0[i] = lo[i] + uni(rng) * (hi[i] - lo[i]);
        }
        auto res = nelder_mead(energy, x0, step, lo, hi, periodic, nm);
        // polish with a tighter simplex
        res = nelder_mead(energy, res.x, 0.1 * step, lo, hi, periodic, nm);
        if (res.f < best_e) {
            best_e = res.f;
            best_th = res.x;
        }
    }
    const StateVector opt_state = prepare_trial_state(ansatz, {best_th}, rp, init);
    return 1.0 - fidelity(ground, opt_state);
}

// Appendix-style scalability sweep on the exact-expectation (infinite-shot)
// oracle: minimal circuit depth n_req(N, delta_m) reaching the infidelity
// target.
inline ScalabilityResult run_scalability_study(const std::vector<int>& n_list, const std::vector<int>& layer_list,
                                               const std::vector<double>& delta_m_list,
                                               const ScalabilityOptions& opt = {}) {
    ScalabilityResult out;
    SeedSequencer seeds(opt.seed);
    for (const int n : n_list) {
        for (const double dm : delta_m_list) {
            const double m = opt.m_critical + dm;
            SchwingerParams sp{n, opt.w, m, opt.gbar, 0.0};
            const StateVector init = neel_state(n, dm >= 0 ? NeelPhase::vacuum : NeelPhase::anti);
            const StateVector ground = ed_ground_state(build_hamiltonian(sp), n / 2).state;
            ResourceParams rp;
            rp.n_sites = n;
            rp.alpha = ResourceParams::default_alpha(n);
            int found = -1;
            for (const int layers : layer_list) {
                AnsatzSpec ansatz;
                ansatz.n_sites = n;
                ansatz.n_layers = layers;
                const double infid = optimized_infidelity(sp, ansatz, rp, init, ground, opt.multistarts,
                                                          opt.nm_iters, seeds.next());
                out.table.push_back({n, dm, layers, infid});
                if (infid <= opt.infidelity_target) {
                    found = layers;
                    if (opt.stop_at_target) break;
                }
            }
            out.n_req[{n, dm}] = found;
        }
    }
    return out;
}

inline void write_scalability_csv(const std::string& path, const ScalabilityResult& res) {
    std::ofstream f(path);
    f << "n_sites,delta_m,n_layers,infidelity\n";
    f << std::setprecision(10);
    for (const auto& c : res.table)
        f << c.n_sites << ',' << c.delta_m << ',' << c.n_layers << ',' << c.infidelity << '\n';
    f << "\nn_sites,delta_m,n_req\n";
    for (const auto& [key, depth] : res.n_req) f << key.first << ',' << key.second << ',' << depth << '\n';
}

} // namespace vqs
