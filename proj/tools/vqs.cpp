#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "vqs/runner.hpp"
#include "vqs/scalability.hpp"

namespace {

vqs::RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return vqs::RunConfig::from_json(j);
}

Eigen::VectorXd parse_theta(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

void print_report(const vqs::RunReport& rep) {
    std::cout << "energy: " << rep.energy_opt << " +- " << rep.energy_opt_err << "\n";
    std::cout << "exact energy at optimum: " << rep.exact_energy_opt << "\n";
    if (rep.ed_ground_energy) std::cout << "ED ground energy: " << *rep.ed_ground_energy << "\n";
    if (rep.fidelity_opt) std::cout << "fidelity vs ED: " << *rep.fidelity_opt << "\n";
    if (!rep.checkpoints.empty())
        std::cout << "final error bar: " << rep.checkpoints.back().error_bar << " +- "
                  << rep.checkpoints.back().error_bar_err << "\n";
    if (rep.qse) std::cout << "QSE gap: " << rep.qse->gap << "\n";
    std::cout << "budget spent: " << rep.budget_spent << " (" << rep.stop_reason << ")\n";
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"variational quantum simulation of the lattice Schwinger model (simulated co-processor)"};
    app.require_subcommand(1);

    std::string config_path, out_dir, cdr_path, theta_csv;
    std::uint64_t seed_override = 0;
    bool have_seed = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "run configuration JSON")->required();
        cmd->add_option("-o,--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed_override, "master seed (overrides config)")->each([&](const std::string&) {
            have_seed = true;
        });
    };

    auto* gs = app.add_subcommand("ground-state", "run the closed-loop ground-state optimization");
    add_common(gs);

    auto* sweep = app.add_subcommand("mass-sweep", "phase-transition sweep over bare masses");
    add_common(sweep);
    std::vector<double> masses;
    sweep->add_option("--masses", masses, "bare masses to optimize")->required();

    auto* scal = app.add_subcommand("scalability", "exact-oracle depth-requirement study");
    std::vector<int> scal_n{4, 6, 8, 10};
    std::vector<int> scal_layers{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> scal_dm{0.0, 0.5, 1.0, 2.0};
    std::string scal_out = "scalability.csv";
    int scal_starts = 8;
    scal->add_option("--sites", scal_n, "system sizes");
    scal->add_option("--layers", scal_layers, "candidate circuit depths");
    scal->add_option("--delta-m", scal_dm, "distances from the critical mass");
    scal->add_option("--starts", scal_starts, "multistart count");
    scal->add_option("-o,--out", scal_out, "output CSV");

    auto* verify = app.add_subcommand("verify", "measure the algorithmic error bar at given parameters");
    add_common(verify);
    verify->add_option("--theta", theta_csv, "comma-separated parameter vector")->required();
    long verify_shots = 1000;
    verify->add_option("--shots", verify_shots, "shots per basis");

    auto* reev = app.add_subcommand("reevaluate", "re-evaluate a CDR file under new parameters");
    add_common(reev);
    reev->add_option("--cdr", cdr_path, "CDR JSONL file")->required();
    std::string reev_out = "reevaluated.csv";
    reev->add_option("--csv", reev_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gs->parsed()) {
            vqs::RunConfig cfg = load_config(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            if (have_seed) cfg.seed = seed_override;
            print_report(vqs::run_ground_state(cfg));
        } else if (sweep->parsed()) {
            vqs::RunConfig cfg = load_config(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            if (have_seed) cfg.seed = seed_override;
            const auto points = vqs::run_mass_sweep(cfg, masses);
            std::cout << "mass,n_layers,energy,exact_energy,order_parameter,renyi2_half\n";
            for (const auto& p : points) {
                double order = 0.0, renyi = 0.0;
                for (const auto& o : p.report.observables) {
                    if (o.name == "order_parameter") order = o.value;
                    if (o.name == "renyi2_half_chain") renyi = o.value;
                }
                std::cout << p.mass << ',' << p.n_layers << ',' << p.report.energy_opt << ','
                          << p.report.exact_energy_opt << ',' << order << ',' << renyi << "\n";
            }
        } else if (scal->parsed()) {
            vqs::ScalabilityOptions opt;
            opt.multistarts = scal_starts;
            const auto res = vqs::run_scalability_study(scal_n, scal_layers, scal_dm, opt);
            vqs::write_scalability_csv(scal_out, res);
            std::cout << "wrote " << scal_out << "\n";
            for (const auto& [key, depth] : res.n_req)
                std::cout << "n=" << key.first << " delta_m=" << key.second << " n_req=" << depth << "\n";
        } else if (verify->parsed()) {
            vqs::RunConfig cfg = load_config(config_path);
            if (have_seed) cfg.seed = seed_override;
            vqs::VqsEngine eng(cfg);
            const Eigen::VectorXd theta = parse_theta(theta_csv);
            const auto ve = eng.measure_error_bar(theta, verify_shots);
            const auto energy = eng.pooled_energy(theta);
            std::cout << "energy: " << energy.value << " +- " << energy.std_error << "\n";
            std::cout << "variance <(H-E)^2>: " << ve.e2.value << " +- " << ve.e2.std_error << "\n";
            std::cout << "algorithmic error bar: " << ve.error_bar << " +- " << ve.error_bar_sigma << "\n";
            if (ve.inconsistent) std::cout << "warning: variance estimate significantly negative\n";
        } else if (reev->parsed()) {
            vqs::RunConfig cfg = load_config(config_path);
            vqs::CdrStore cdr;
            cdr.load(cdr_path);
            const auto H_new = vqs::build_hamiltonian(cfg.schwinger);
            const auto rows = vqs::reevaluate(cdr, H_new);
            vqs::write_estimates_csv(reev_out, rows);
            std::cout << "re-evaluated " << rows.size() << " parameter points -> " << reev_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
