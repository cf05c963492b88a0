#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqs/cdr.hpp"
#include "vqs/circuit.hpp"
#include "vqs/direct.hpp"
#include "vqs/ed.hpp"
#include "vqs/measure.hpp"
#include "vqs/qse.hpp"
#include "vqs/schwinger.hpp"

namespace vqs {

struct NoiseConfig {
    bool init_channel = false;
    std::optional<double> init_fidelity; // per-N default when unset
    std::optional<bool> post_select;     // default: on iff channel or native mode
};

struct CheckpointConfig {
    int count = 6;               // log-spaced along the budget axis
    long shots_per_basis = 100;
};

enum class BulkPolicy { automatic, none, interval };

// One declarative file describes a run; (config, seed) replays bit-for-bit.
struct RunConfig {
    SchwingerParams schwinger;
    double resource_j0 = 1.0;
    std::optional<double> resource_alpha; // per-N default when unset
    double resource_b = 10.0;
    ResourceMode resource_mode = ResourceMode::ideal_xy;

    int n_layers = 4;
    BulkPolicy bulk_policy = BulkPolicy::automatic;
    std::pair<int, int> bulk_interval{0, 0};
    bool cp_link = true;
    bool bulk_tie = true;
    double ent_hi = M_PI;

    DirectConfig optimizer;
    NoiseConfig noise;
    CheckpointConfig checkpoints;
    std::optional<double> error_bar_threshold; // optional stopping criterion

    long observable_shots = 200;
    bool ed_reference = true;
    bool qse_enabled = true;
    bool qse_shot_mode = false;
    long qse_shots = 2000;
    int fidelity_channel_samples = 5;

    std::uint64_t seed = 1;
    std::string output_dir;

    NeelPhase init_phase = NeelPhase::vacuum;

    ResourceParams resource() const {
        ResourceParams r;
        r.n_sites = schwinger.n_sites;
        r.j0 = resource_j0;
        r.alpha = resource_alpha.value_or(ResourceParams::default_alpha(schwinger.n_sites));
        r.b_field = resource_b;
        r.mode = resource_mode;
        return r;
    }

    std::optional<std::pair<int, int>> bulk() const {
        const int n = schwinger.n_sites;
        switch (bulk_policy) {
            case BulkPolicy::none: return std::nullopt;
            case BulkPolicy::interval: return bulk_interval;
            case BulkPolicy::automatic:
            default:
                if (n >= 16) {
                    const int size = n - 6; // reproduces the reported 15-parameter schemes
                    const int lo = (n - size) / 2 + 1;
                    return std::make_pair(lo, lo + size - 1);
                }
                return std::nullopt;
        }
    }

    AnsatzSpec ansatz() const {
        AnsatzSpec a;
        a.n_sites = schwinger.n_sites;
        a.n_layers = n_layers;
        a.bulk = bulk();
        a.cp_link = cp_link;
        a.bulk_tie = bulk_tie;
        a.ent_hi = ent_hi;
        return a;
    }

    double init_fidelity_value() const {
        if (!noise.init_channel) return 1.0;
        return noise.init_fidelity.value_or(InitErrorChannel::default_fidelity(schwinger.n_sites));
    }

    bool post_select_value() const {
        if (noise.post_select) return *noise.post_select;
        return noise.init_channel || resource_mode == ResourceMode::native_ising;
    }

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
};

inline nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["schwinger"] = {{"n_sites", schwinger.n_sites}, {"w", schwinger.w},   {"m", schwinger.m},
                      {"gbar", schwinger.gbar},       {"eps0", schwinger.eps0}};
    j["resource"] = {{"j0", resource_j0},
                     {"b_field", resource_b},
                     {"mode", resource_mode == ResourceMode::ideal_xy ? "ideal-xy" : "native-ising"}};
    if (resource_alpha) j["resource"]["alpha"] = *resource_alpha;
    j["ansatz"] = {{"n_layers", n_layers}, {"cp_link", cp_link}, {"bulk_tie", bulk_tie}, {"ent_hi", ent_hi}};
    if (bulk_policy == BulkPolicy::none) j["ansatz"]["bulk"] = nullptr;
    else if (bulk_policy == BulkPolicy::interval) j["ansatz"]["bulk"] = {bulk_interval.first, bulk_interval.second};
    else j["ansatz"]["bulk"] = "auto";
    j["optimizer"] = {{"budget", optimizer.budget},
                      {"initial_shots", optimizer.initial_shots},
                      {"eps", optimizer.eps},
                      {"refit_cadence", optimizer.refit_cadence},
                      {"use_metamodel", optimizer.use_metamodel},
                      {"ocba_block", optimizer.ocba_block},
                      {"selection_reserve", optimizer.selection_reserve},
                      {"stopping", optimizer.stopping == DirectConfig::Stopping::budget ? "budget" : "stationarity"}};
    if (error_bar_threshold) j["optimizer"]["error_bar_threshold"] = *error_bar_threshold;
    j["noise"] = {{"init_channel", noise.init_channel}};
    if (noise.init_fidelity) j["noise"]["init_fidelity"] = *noise.init_fidelity;
    if (noise.post_select) j["noise"]["post_select"] = *noise.post_select;
    j["checkpoints"] = {{"count", checkpoints.count}, {"shots_per_basis", checkpoints.shots_per_basis}};
    j["observable_shots"] = observable_shots;
    j["ed_reference"] = ed_reference;
    j["qse"] = {{"enabled", qse_enabled}, {"shot_mode", qse_shot_mode}, {"shots", qse_shots}};
    j["fidelity_channel_samples"] = fidelity_channel_samples;
    j["init_phase"] = init_phase == NeelPhase::vacuum ? "vacuum" : "anti";
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    return j;
}

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    const auto& s = j.at("schwinger");
    c.schwinger = {s.at("n_sites"), s.value("w", 1.0), s.value("m", 0.1), s.value("gbar", 1.0), s.value("eps0", 0.0)};
    if (j.contains("resource")) {
        const auto& r = j["resource"];
        c.resource_j0 = r.value("j0", 1.0);
        if (r.contains("alpha") && !r["alpha"].is_null()) c.resource_alpha = r["alpha"].get<double>();
        c.resource_b = r.value("b_field", 10.0);
        c.resource_mode = r.value("mode", "ideal-xy") == std::string("native-ising") ? ResourceMode::native_ising
                                                                                     : ResourceMode::ideal_xy;
    }
    if (j.contains("ansatz")) {
        const auto& a = j["ansatz"];
        c.n_layers = a.value("n_layers", 4);
        c.cp_link = a.value("cp_link", true);
        c.bulk_tie = a.value("bulk_tie", true);
        c.ent_hi = a.value("ent_hi", M_PI);
        if (a.contains("bulk")) {
            if (a["bulk"].is_null()) c.bulk_policy = BulkPolicy::none;
            else if (a["bulk"].is_array()) {
                c.bulk_policy = BulkPolicy::interval;
                c.bulk_interval = {a["bulk"][0], a["bulk"][1]};
            } else {
                c.bulk_policy = BulkPolicy::automatic;
            }
        }
    }
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        c.optimizer.budget = o.value("budget", 1e5);
        c.optimizer.initial_shots = o.value("initial_shots", 30L);
        c.optimizer.eps = o.value("eps", 1e-4);
        c.optimizer.refit_cadence = o.value("refit_cadence", 25);
        c.optimizer.use_metamodel = o.value("use_metamodel", true);
        c.optimizer.ocba_block = o.value("ocba_block", 5L);
        c.optimizer.selection_reserve = o.value("selection_reserve", 0.04);
        c.optimizer.stopping = o.value("stopping", "budget") == std::string("stationarity")
                                   ? DirectConfig::Stopping::stationarity
                                   : DirectConfig::Stopping::budget;
        if (o.contains("error_bar_threshold")) c.error_bar_threshold = o["error_bar_threshold"].get<double>();
    }
    if (j.contains("noise")) {
        const auto& n = j["noise"];
        c.noise.init_channel = n.value("init_channel", false);
        if (n.contains("init_fidelity")) c.noise.init_fidelity = n["init_fidelity"].get<double>();
        if (n.contains("post_select")) c.noise.post_select = n["post_select"].get<bool>();
    }
    if (j.contains("checkpoints")) {
        c.checkpoints.count = j["checkpoints"].value("count", 6);
        c.checkpoints.shots_per_basis = j["checkpoints"].value("shots_per_basis", 100L);
    }
    c.observable_shots = j.value("observable_shots", 200L);
    c.ed_reference = j.value("ed_reference", true);
    if (j.contains("qse")) {
        c.qse_enabled = j["qse"].value("enabled", true);
        c.qse_shot_mode = j["qse"].value("shot_mode", false);
        c.qse_shots = j["qse"].value("shots", 2000L);
    }
    c.fidelity_channel_samples = j.value("fidelity_channel_samples", 5);
    c.init_phase = j.value("init_phase", "vacuum") == std::string("anti") ? NeelPhase::anti : NeelPhase::vacuum;
    c.seed = j.value("seed", std::uint64_t(1));
    c.output_dir = j.value("output_dir", std::string());
    return c;
}

// Binds one configuration to the simulated co-processor plus measurement
// stack: owns the CDR, hands out per-call seeds, and serves the optimizer's
// energy oracle.
class VqsEngine {
public:
    explicit VqsEngine(RunConfig cfg) : cfg_(std::move(cfg)), seeds_(cfg_.seed) {
        cfg_.schwinger.validate();
        H_ = build_hamiltonian(cfg_.schwinger);
        resource_ = cfg_.resource();
        ansatz_ = cfg_.ansatz();
        ansatz_.validate();
        energy_plan_ = energy_bases(cfg_.schwinger.n_sites);
        variance_plan_ = variance_bases(cfg_.schwinger.n_sites);
        init_ = neel_state(cfg_.schwinger.n_sites, cfg_.init_phase);
        channel_.enabled = cfg_.noise.init_channel;
        channel_.fidelity = cfg_.init_fidelity_value();
        post_select_ = cfg_.post_select_value();
        if (cfg_.ed_reference) {
            const int n = cfg_.schwinger.n_sites;
            auto basis = SectorBasis::get(n, n / 2);
            if (basis->dim() <= 200000) {
                const int k = std::min<std::size_t>(2, basis->dim());
                auto pairs = ed_spectrum(H_, n / 2, std::nullopt, k);
                ed_ground_ = std::move(pairs[0]);
                if (pairs.size() > 1) ed_gap_ = pairs[1].energy - pairs[0].energy;
            }
        }
    }

    const RunConfig& config() const { return cfg_; }
    const PauliSum& hamiltonian() const { return H_; }
    const AnsatzSpec& ansatz() const { return ansatz_; }
    CdrStore& cdr() { return cdr_; }
    const std::optional<EdPair>& ed_ground() const { return ed_ground_; }
    std::optional<double> ed_gap() const { return ed_gap_; }
    bool post_select() const { return post_select_; }

    OptDomain domain() const {
        const auto dims = ansatz_.dimensions();
        OptDomain d;
        d.lo.resize(static_cast<Eigen::Index>(dims.size()));
        d.hi.resize(static_cast<Eigen::Index>(dims.size()));
        d.periodic.resize(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) {
            d.lo[static_cast<Eigen::Index>(i)] = dims[i].lo;
            d.hi[static_cast<Eigen::Index>(i)] = dims[i].hi;
            d.periodic[i] = dims[i].periodic;
        }
        return d;
    }

    StateVector trial_state(const Eigen::VectorXd& theta) const {
        return prepare_trial_state(ansatz_, {theta}, resource_, init_);
    }

    StateVector trial_state_from_bits(const Eigen::VectorXd& theta, std::uint32_t bits) const {
        const int n = cfg_.schwinger.n_sites;
        return prepare_trial_state(ansatz_, {theta}, resource_, basis_state(n, std::popcount(bits), bits));
    }

    // Sample `shots` preparations per listed basis at theta; every
    // preparation draws the initial-state channel independently. Batches are
    // recorded in the CDR.
    void sample_bases(const Eigen::VectorXd& theta, const std::vector<MeasurementBasis>& bases, long shots) {
        const int n = cfg_.schwinger.n_sites;
        const std::uint32_t ideal = neel_bits(n, cfg_.init_phase);
        std::map<std::uint32_t, StateVector> prepared;
        for (const auto& basis : bases) {
            const std::uint64_t call_seed = seeds_.next();
            std::map<std::uint32_t, long> groups;
            if (channel_.enabled) {
                auto rng = make_rng(call_seed);
                for (long t = 0; t < shots; ++t) ++groups[channel_.draw(ideal, n, rng)];
            } else {
                groups[ideal] = shots;
            }
            ShotBatch merged;
            merged.n_sites = n;
            merged.theta = theta;
            merged.basis_tag = basis.tag;
            merged.axes = basis.axes;
            merged.seed = call_seed;
            merged.raw_shots = shots;
            for (const auto& [bits, count] : groups) {
                auto it = prepared.find(bits);
                if (it == prepared.end()) it = prepared.emplace(bits, trial_state_from_bits(theta, bits)).first;
                ShotBatch part = sample(it->second, basis, count, derive_seed(call_seed, bits));
                merged.bits.insert(merged.bits.end(), part.bits.begin(), part.bits.end());
            }
            cdr_.store(std::move(merged));
        }
    }

    // Energy oracle for the optimizer: one request samples all energy bases
    // at `shots` each and returns the pooled estimate over everything the CDR
    // holds at theta. Cost: one call per (preparation + measurement).
    Evaluation evaluate_energy(const Eigen::VectorXd& theta, long shots) {
        sample_bases(theta, energy_plan_, shots);
        EnergyEstimatorOptions opt;
        opt.post_select = post_select_;
        const EstimatorResult est = estimate_energy(cdr_, theta, H_, opt);
        Evaluation ev;
        ev.mean = est.value;
        ev.std_error = est.std_error;
        long pooled = 0;
        for (const auto& [tag, n_shots] : est.shots_used) pooled += n_shots;
        ev.shots = pooled;
        ev.cost = static_cast<double>(shots * static_cast<long>(energy_plan_.size()));
        last_post_selected_fraction_ = est.post_selected_fraction;
        return ev;
    }

    double checkpoint_cost(long shots) const {
        return static_cast<double>(shots * static_cast<long>(variance_plan_.size()));
    }

    // Full 3N-basis algorithmic-error measurement at theta (fresh shots).
    VarianceEstimate measure_error_bar(const Eigen::VectorXd& theta, long shots_per_basis) {
        sample_bases(theta, variance_plan_, shots_per_basis);
        EnergyEstimatorOptions opt;
        opt.post_select = post_select_;
        const EstimatorResult energy = estimate_energy(cdr_, theta, H_, opt);
        return estimate_variance(cdr_, theta, H_, energy.value, opt);
    }

    EstimatorResult pooled_energy(const Eigen::VectorXd& theta) const {
        EnergyEstimatorOptions opt;
        opt.post_select = post_select_;
        return estimate_energy(cdr_, theta, H_, opt);
    }

    double exact_energy(const Eigen::VectorXd& theta) const {
        return exact_expectation(trial_state(theta), H_);
    }

    // Fidelity of the prepared (channel-averaged) state against the ED ground
    // state; the channel part is Monte-Carlo averaged with fixed seeds.
    std::optional<double> fidelity_vs_ed(const Eigen::VectorXd& theta) {
        if (!ed_ground_) return std::nullopt;
        const double f_ideal = fidelity(ed_ground_->state, trial_state(theta));
        if (!channel_.enabled) return f_ideal;
        const int n = cfg_.schwinger.n_sites;
        const std::uint32_t ideal = neel_bits(n, cfg_.init_phase);
        auto rng = make_rng(derive_seed(cfg_.seed, 0xf1de717ULL));
        double f_err = 0.0;
        int samples = 0;
        for (int s = 0; s < cfg_.fidelity_channel_samples; ++s) {
            std::uint32_t bits = ideal;
            while (bits == ideal) bits = channel_.draw(ideal, n, rng); // force an error draw
            f_err += fidelity(ed_ground_->state, trial_state_from_bits(theta, bits));
            ++samples;
        }
        f_err /= std::max(samples, 1);
        return channel_.fidelity * f_ideal + (1.0 - channel_.fidelity) * f_err;
    }

    double last_post_selected_fraction() const { return last_post_selected_fraction_; }

private:
    RunConfig cfg_;
    SeedSequencer seeds_;
    PauliSum H_{2};
    ResourceParams resource_;
    AnsatzSpec ansatz_;
    std::vector<MeasurementBasis> energy_plan_, variance_plan_;
    StateVector init_;
    InitErrorChannel channel_;
    bool post_select_ = false;
    CdrStore cdr_;
    std::optional<EdPair> ed_ground_;
    std::optional<double> ed_gap_;
    double last_post_selected_fraction_ = 1.0;
};

struct CheckpointRecord {
    int iteration = 0;
    double budget_spent = 0.0;
    Eigen::VectorXd theta;
    double energy = 0.0, energy_err = 0.0;
    double e2 = 0.0, e2_err = 0.0;
    double error_bar = 0.0, error_bar_err = 0.0;
    std::optional<double> fidelity;
    std::optional<double> nearest_level_distance;
};

struct ObservableRecord {
    std::string name;
    double value = 0.0;
    double std_error = 0.0;
    bool exact = false;
};

struct RunReport {
    nlohmann::json config_json;
    Eigen::VectorXd theta_opt;
    double energy_opt = 0.0, energy_opt_err = 0.0;
    long shots_at_opt = 0;
    double exact_energy_opt = 0.0;
    std::optional<double> fidelity_opt;
    std::optional<double> ed_ground_energy;
    std::optional<double> ed_gap;
    std::vector<CheckpointRecord> checkpoints;
    std::vector<ObservableRecord> observables;
    std::optional<GapEstimate> qse;
    double budget_spent = 0.0;
    std::string stop_reason;
    double post_selected_fraction = 1.0;
    int iterations = 0;
    std::vector<TrajectoryPoint> trajectory;
    std::vector<std::string> warnings;
};

namespace detail {

inline void write_report_files(const RunReport& rep, const std::string& dir);

} // namespace detail

struct WarmStart {
    std::vector<std::pair<Eigen::VectorXd, Evaluation>> ledger;
    std::vector<Eigen::VectorXd> first_probes;
};

// The Appendix-G closed loop: optimizer proposes theta, the simulated
// co-processor prepares and measures, the CDR pools, the estimator feeds the
// optimizer; the algorithmic error bar is measured at log-spaced budget
// checkpoints.
inline RunReport run_ground_state(VqsEngine& eng, const WarmStart& warm = {}) {
    const RunConfig& cfg = eng.config();
    DirectOptimizer opt(eng.domain(), cfg.optimizer);

    std::vector<double> milestones;
    for (int i = 0; i < cfg.checkpoints.count; ++i) {
        const double f0 = 0.02, f1 = 0.90;
        const double frac = (cfg.checkpoints.count == 1)
                                ? f1
                                : std::exp(std::log(f0) + (std::log(f1) - std::log(f0)) * i / (cfg.checkpoints.count - 1));
        milestones.push_back(frac * cfg.optimizer.budget);
    }

    RunReport rep;
    rep.config_json = cfg.to_json();
    if (eng.ed_ground()) rep.ed_ground_energy = eng.ed_ground()->energy;
    rep.ed_gap = eng.ed_gap();

    // eigenvalue grid for the self-verification bound, computed once
    std::vector<double> sector_levels;
    if (eng.ed_ground()) {
        const int n_up = cfg.schwinger.n_sites / 2;
        const std::size_t dim = SectorBasis::get(cfg.schwinger.n_sites, n_up)->dim();
        const int k = dim <= 4096 ? static_cast<int>(dim) : 6;
        for (const auto& [e, s] : ed_spectrum(eng.hamiltonian(), n_up, std::nullopt, k)) sector_levels.push_back(e);
    }

    std::size_t next_milestone = 0;
    auto callback = [&](DirectOptimizer& o, int iteration) {
        while (next_milestone < milestones.size() && o.spent() >= milestones[next_milestone]) {
            const double cost = eng.checkpoint_cost(cfg.checkpoints.shots_per_basis);
            if (o.spent() + cost > o.cap()) {
                rep.warnings.push_back("checkpoint " + std::to_string(next_milestone + 1) +
                                       " skipped: insufficient budget");
                ++next_milestone;
                continue;
            }
            const auto inc = o.incumbent();
            if (!inc) break;
            const Eigen::VectorXd theta = inc->first;
            const VarianceEstimate ve = eng.measure_error_bar(theta, cfg.checkpoints.shots_per_basis);
            o.charge(cost);
            const EstimatorResult energy = eng.pooled_energy(theta);
            CheckpointRecord rec;
            rec.iteration = iteration;
            rec.budget_spent = o.spent();
            rec.theta = theta;
            rec.energy = energy.value;
            rec.energy_err = energy.std_error;
            rec.e2 = ve.e2.value;
            rec.e2_err = ve.e2.std_error;
            rec.error_bar = ve.error_bar;
            rec.error_bar_err = ve.error_bar_sigma;
            rec.fidelity = eng.fidelity_vs_ed(theta);
            if (!sector_levels.empty()) {
                double best = std::numeric_limits<double>::infinity();
                for (const double e : sector_levels) best = std::min(best, std::abs(e - rec.energy));
                rec.nearest_level_distance = best;
            }
            if (cfg.error_bar_threshold && ve.error_bar + ve.error_bar_sigma < *cfg.error_bar_threshold)
                o.request_stop("error-bar threshold met");
            rep.checkpoints.push_back(std::move(rec));
            ++next_milestone;
        }
    };

    Oracle oracle = [&](const Eigen::VectorXd& x, long shots) { return eng.evaluate_energy(x, shots); };

    // the bare Neel point (theta = 0) anchors every run, then any warm probes
    std::vector<Eigen::VectorXd> probes;
    probes.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(eng.domain().dim())));
    probes.insert(probes.end(), warm.first_probes.begin(), warm.first_probes.end());
    DirectResult res = opt.run_with_preseed(oracle, callback, warm.ledger, probes);

    rep.theta_opt = res.best_x;
    rep.energy_opt = res.best_value;
    rep.energy_opt_err = res.best_std_error;
    rep.shots_at_opt = res.best_shots;
    rep.budget_spent = res.budget_spent;
    rep.stop_reason = res.stop_reason;
    rep.iterations = res.iterations;
    rep.trajectory = std::move(res.trajectory);
    rep.exact_energy_opt = eng.exact_energy(res.best_x);
    rep.fidelity_opt = eng.fidelity_vs_ed(res.best_x);

    // post-run observables at theta_opt (not charged to the search budget)
    const int n = cfg.schwinger.n_sites;
    eng.sample_bases(res.best_x, {uniform_basis(n, 'z', "allZ")}, cfg.observable_shots);
    {
        EnergyEstimatorOptions eopt;
        eopt.post_select = eng.post_select();
        std::vector<ShotBatch> storage;
        const BatchMap zdata = collect_batches(eng.cdr(), res.best_x, {"allZ"}, eng.post_select(), storage);
        for (int j = 1; j <= n; ++j) {
            const auto est = SumEstimator(particle_density(j, n), energy_bases(n)).estimate(zdata);
            rep.observables.push_back({"density_" + std::to_string(j), est.value, est.std_error, false});
        }
        const auto op_est = SumEstimator(order_parameter(n), energy_bases(n)).estimate(zdata);
        rep.observables.push_back({"order_parameter", op_est.value, op_est.std_error, false});
        rep.post_selected_fraction = op_est.post_selected_fraction;
    }
    const StateVector opt_state = eng.trial_state(res.best_x);
    rep.observables.push_back({"renyi2_half_chain", renyi2_entropy(opt_state, 1, n / 2), 0.0, true});

    if (cfg.qse_enabled) {
        if (cfg.qse_shot_mode) {
            const auto prob = build_subspace_sampled(opt_state, eng.hamiltonian(), excitation_operators(n),
                                                     cfg.qse_shots, derive_seed(cfg.seed, 0x45e), &eng.cdr(),
                                                     res.best_x);
            rep.qse = gap_estimate(prob);
        } else {
            rep.qse = gap_estimate(opt_state, eng.hamiltonian());
        }
    }

    if (!cfg.output_dir.empty()) detail::write_report_files(rep, cfg.output_dir);
    return rep;
}

inline RunReport run_ground_state(const RunConfig& cfg) {
    VqsEngine eng(cfg);
    return run_ground_state(eng);
}

struct MassSweepPoint {
    double mass = 0.0;
    int n_layers = 0;
    RunReport report;
};

// Phase-transition protocol: per side of the critical mass, masses are
// processed from far to near; each next mass warm-starts from a CDR
// re-evaluation of everything measured so far on that side. Near-critical
// points gain one entangling layer.
inline std::vector<MassSweepPoint> run_mass_sweep(const RunConfig& base, std::vector<double> masses,
                                                  double m_critical = -0.7, double near_window = 0.35) {
    std::vector<MassSweepPoint> out;
    std::vector<double> below, above;
    for (const double m : masses) (m < m_critical ? below : above).push_back(m);
    std::sort(below.begin(), below.end());                   // most negative first: away from m_c
    std::sort(above.begin(), above.end(), std::greater<>()); // largest first: away from m_c

    for (const auto* side : {&below, &above}) {
        if (side->empty()) continue;
        std::optional<VqsEngine> engine;
        for (const double m : *side) {
            RunConfig cfg = base;
            cfg.schwinger.m = m;
            cfg.init_phase = (m < m_critical) ? NeelPhase::anti : NeelPhase::vacuum;
            if (std::abs(m - m_critical) <= near_window) cfg.n_layers = base.n_layers + 1;
            std::uint64_t mass_bits;
            std::memcpy(&mass_bits, &m, sizeof(mass_bits));
            cfg.seed = derive_seed(base.seed, mass_bits);
            if (!cfg.output_dir.empty())
                cfg.output_dir = base.output_dir + "/m_" + std::to_string(m);

            WarmStart warm;
            const int expected_dims = cfg.ansatz().n_params();
            if (engine && cfg.n_layers == engine->config().n_layers) {
                // re-evaluate the side's CDR under the new mass: a rough
                // outline of the new landscape at zero measurement cost
                const PauliSum H_new = build_hamiltonian(cfg.schwinger);
                EnergyEstimatorOptions eopt;
                eopt.post_select = engine->post_select();
                auto reeval = reevaluate(engine->cdr(), H_new, eopt);
                std::sort(reeval.begin(), reeval.end(),
                          [](const auto& a, const auto& b) { return a.second.value < b.second.value; });
                for (std::size_t i = 0; i < reeval.size(); ++i) {
                    if (reeval[i].first.size() != expected_dims) continue;
                    Evaluation ev;
                    ev.mean = reeval[i].second.value;
                    ev.std_error = reeval[i].second.std_error;
                    long shots = 0;
                    for (const auto& [tag, s] : reeval[i].second.shots_used) shots += s;
                    ev.shots = shots;
                    ev.cost = 0.0;
                    warm.ledger.emplace_back(reeval[i].first, ev);
                    if (warm.first_probes.size() < 3) warm.first_probes.push_back(reeval[i].first);
                }
            }
            VqsEngine eng(cfg);
            if (engine) {
                // replay prior side batches into the new engine's CDR
                for (const auto& theta : engine->cdr().thetas())
                    for (const auto& basis : variance_bases(cfg.schwinger.n_sites))
                        for (const ShotBatch* b : engine->cdr().query(theta, basis.tag)) eng.cdr().store(*b);
            }
            MassSweepPoint pt;
            pt.mass = m;
            pt.n_layers = cfg.n_layers;
            pt.report = run_ground_state(eng, warm);
            out.push_back(std::move(pt));
            engine.emplace(std::move(eng));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.mass < b.mass; });
    return out;
}

} // namespace vqs

#include "vqs/runner_io.hpp"
