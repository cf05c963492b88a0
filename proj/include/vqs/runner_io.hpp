#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "vqs/runner.hpp"

namespace vqs {
namespace detail {

inline nlohmann::json vec_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline void write_report_files(const RunReport& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream f(dir + "/config.json");
        f << rep.config_json.dump(2) << '\n';
    }
    {
        std::ofstream f(dir + "/trajectory.jsonl");
        for (const auto& tp : rep.trajectory) {
            nlohmann::json j;
            j["iteration"] = tp.iteration;
            j["theta"] = vec_json(tp.x);
            j["value"] = tp.value;
            j["std_error"] = tp.std_error;
            j["cell_size"] = tp.cell_size;
            j["budget_spent"] = tp.budget_spent;
            if (std::isfinite(tp.pred_min)) {
                j["pred_min"] = tp.pred_min;
                j["pred_sigma"] = tp.pred_sigma;
            } else {
                j["pred_min"] = nullptr;
                j["pred_sigma"] = nullptr;
            }
            f << j.dump() << '\n';
        }
    }
    {
        std::ofstream f(dir + "/observables.csv");
        f << "name,value,std_error,exact\n";
        f << std::setprecision(17);
        for (const auto& o : rep.observables)
            f << o.name << ',' << o.value << ',' << o.std_error << ',' << (o.exact ? 1 : 0) << '\n';
    }
    {
        std::ofstream f(dir + "/checkpoints.csv");
        f << "iteration,budget_spent,energy,energy_err,e2,e2_err,error_bar,error_bar_err,fidelity,"
             "nearest_level_distance\n";
        f << std::setprecision(17);
        for (const auto& c : rep.checkpoints) {
            f << c.iteration << ',' << c.budget_spent << ',' << c.energy << ',' << c.energy_err << ',' << c.e2
              << ',' << c.e2_err << ',' << c.error_bar << ',' << c.error_bar_err << ',';
            if (c.fidelity) f << *c.fidelity;
            f << ',';
            if (c.nearest_level_distance) f << *c.nearest_level_distance;
            f << '\n';
        }
    }
    {
        std::ofstream f(dir + "/summary.txt");
        f << std::setprecision(10);
        f << "final parameters: ";
        for (Eigen::Index i = 0; i < rep.theta_opt.size(); ++i) f << (i ? " " : "") << rep.theta_opt[i];
        f << '\n';
        f << "energy estimate: " << rep.energy_opt << " +- " << rep.energy_opt_err << " (" << rep.shots_at_opt
          << " pooled shots)\n";
        f << "exact energy at final parameters: " << rep.exact_energy_opt << " (exact)\n";
        if (rep.ed_ground_energy) f << "ED ground energy (zero magnetization): " << *rep.ed_ground_energy << '\n';
        if (rep.ed_gap) f << "ED intra-sector gap: " << *rep.ed_gap << '\n';
        if (rep.fidelity_opt) f << "fidelity vs ED ground state: " << *rep.fidelity_opt << '\n';
        if (!rep.checkpoints.empty()) {
            const auto& c = rep.checkpoints.back();
            f << "final algorithmic error bar: " << c.error_bar << " +- " << c.error_bar_err << '\n';
            if (rep.ed_gap && *rep.ed_gap > 0)
                f << "error bar / gap: " << c.error_bar / *rep.ed_gap << " +- " << c.error_bar_err / *rep.ed_gap
                  << '\n';
        }
        if (rep.qse) {
            f << "QSE lambda0: " << rep.qse->lambda0 << '\n';
            f << "QSE gap estimate: " << rep.qse->gap << " (kept dimension " << rep.qse->kept_dimension << ")\n";
        }
        f << "budget spent: " << rep.budget_spent << '\n';
        f << "stop reason: " << rep.stop_reason << '\n';
        f << "post-selected fraction: " << rep.post_selected_fraction << '\n';
        for (const auto& w : rep.warnings) f << "warning: " << w << '\n';
    }
    {
        nlohmann::json manifest;
        manifest["files"] = {"config.json", "trajectory.jsonl", "observables.csv", "checkpoints.csv", "summary.txt"};
        manifest["seed"] = rep.config_json.value("seed", std::uint64_t(0));
        manifest["stop_reason"] = rep.stop_reason;
        std::ofstream f(dir + "/manifest.json");
        f << manifest.dump(2) << '\n';
    }
}

} // namespace detail

// Re-evaluated estimator table as CSV rows (theta-id, value, std_error, shots).
inline void write_estimates_csv(const std::string& path,
                                const std::vector<std::pair<Eigen::VectorXd, EstimatorResult>>& rows) {
    std::ofstream f(path);
    f << "theta_id,value,std_error,shots\n";
    f << std::setprecision(17);
    for (const auto& [theta, est] : rows) {
        long shots = 0;
        for (const auto& [tag, s] : est.shots_used) shots += s;
        f << theta_key(theta) << ',' << est.value << ',' << est.std_error << ',' << shots << '\n';
    }
}

} // namespace vqs
