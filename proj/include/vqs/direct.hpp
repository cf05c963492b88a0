#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "vqs/gp.hpp"
#include "vqs/nelder_mead.hpp"
#include "vqs/ocba.hpp"
#include "vqs/rng.hpp"

namespace vqs {

struct OptDomain {
    Eigen::VectorXd lo, hi;
    std::vector<bool> periodic;

    int dim() const { return static_cast<int>(lo.size()); }

    void validate() const {
        if (lo.size() == 0 || lo.size() != hi.size() || periodic.size() != static_cast<std::size_t>(lo.size()))
            throw std::invalid_argument("OptDomain: empty or inconsistent domain");
        for (int i = 0; i < dim(); ++i)
            if (!(lo[i] < hi[i])) throw std::invalid_argument("OptDomain: lo must be < hi");
    }

    Eigen::VectorXd to_physical(const Eigen::VectorXd& u) const {
        return lo.array() + u.array() * (hi - lo).array();
    }
};

// Pooled oracle response for one landscape point. `cost` charges only the
// newly requested shots; mean/std_error/shots cover everything pooled so far.
struct Evaluation {
    double mean = 0.0;
    double std_error = 0.0;
    long shots = 0;
    double cost = 0.0;
};

using Oracle = std::function<Evaluation(const Eigen::VectorXd& x, long shots)>;

struct DirectConfig {
    double budget = 1e5;            // cost cap, in simulator calls
    long initial_shots = 30;        // shot request for a first look at a point
    double eps = 1e-4;              // potentially-optimal slack vs the incumbent
    double min_cell_size = 1e-6;    // normalized; smaller cells are not split
    int refit_cadence = 25;         // evaluations between metamodel refits
    int probes_per_refit = 1;
    bool use_metamodel = true;
    int train_recent = 500;         // metamodel training-set management
    int train_best = 100;
    long ocba_block = 5;            // OCBA refinement budget, in initial_shots units
    double selection_reserve = 0.04; // budget fraction kept for the final OCBA pick
    int max_iterations = 1000000;
    std::uint64_t seed = 1;
    enum class Stopping { budget, stationarity } stopping = Stopping::budget;
    int stationarity_window = 60;    // iterations without improvement
    double stationarity_tol = 1e-9;
};

struct TrajectoryPoint {
    int iteration = 0;
    Eigen::VectorXd x; // physical coordinates
    double value = 0.0;
    double std_error = 0.0;
    long shots = 0;
    double cell_size = 0.0; // 0 for metamodel probes
    double budget_spent = 0.0;
    double pred_min = std::numeric_limits<double>::quiet_NaN();
    double pred_sigma = std::numeric_limits<double>::quiet_NaN();
};

struct PointRecord {
    Eigen::VectorXd u; // normalized coordinates
    double mean = 0.0;
    double std_error = 0.0;
    long shots = 0;
};

struct DirectResult {
    Eigen::VectorXd best_x;
    double best_value = 0.0;
    double best_std_error = 0.0;
    long best_shots = 0;
    double budget_spent = 0.0;
    int iterations = 0;
    std::string stop_reason;
    std::vector<TrajectoryPoint> trajectory;
};

// Noisy-landscape DIRECT: trisection of hypercells with potentially-optimal
// selection on pooled values, a Gaussian-process metamodel with greedy
// probing, and OCBA refinement when statistical noise blurs the selection.
class DirectOptimizer {
public:
    DirectOptimizer(OptDomain domain, DirectConfig cfg) : dom_(std::move(domain)), cfg_(cfg), seeds_(cfg.seed) {
        dom_.validate();
        if (cfg_.budget <= 0) throw std::invalid_argument("DirectOptimizer: budget must be > 0");
    }

    using IterationCallback = std::function<void(DirectOptimizer&, int iteration)>;

    double spent() const { return spent_; }
    double cap() const { return cfg_.budget; }
    double remaining() const { return cfg_.budget - spent_; }
    int iteration() const { return iter_; }

    // external budget consumers (e.g. verification checkpoints) record here
    void charge(double cost) { spent_ += cost; }

    void request_stop(const std::string& reason) {
        stop_requested_ = true;
        stop_reason_ = reason;
    }

    std::optional<std::pair<Eigen::VectorXd, PointRecord>> incumbent() const {
        if (ledger_order_.empty()) return std::nullopt;
        const PointRecord* best = nullptr;
        for (const auto& key : ledger_order_) {
            const PointRecord& r = ledger_.at(key);
            if (!best || r.mean < best->mean) best = &r;
        }
        return std::make_pair(dom_.to_physical(best->u), *best);
    }

    std::pair<double, double> incumbent_prediction() const { return {pred_min_, pred_sigma_}; }

    DirectResult run(const Oracle& oracle, const IterationCallback& on_iteration = {}) {
        return run_with_preseed(oracle, on_iteration, {}, {});
    }

    // `preseed` entries land in the ledger at zero cost (e.g. CDR
    // re-evaluations under new Hamiltonian parameters); `first_probes` are
    // evaluated with fresh shots right after the root, warm-starting a sweep.
    DirectResult run_with_preseed(const Oracle& oracle, const IterationCallback& on_iteration,
                                  const std::vector<std::pair<Eigen::VectorXd, Evaluation>>& preseed,
                                  const std::vector<Eigen::VectorXd>& first_probes) {
        oracle_ = &oracle;
        for (const auto& [x, ev] : preseed) {
            Eigen::VectorXd u = (x - dom_.lo).array() / (dom_.hi - dom_.lo).array();
            const std::string key = point_key(u);
            if (ledger_.count(key)) continue;
            ledger_.emplace(key, PointRecord{u, ev.mean, ev.std_error, ev.shots});
            ledger_order_.push_back(key);
        }
        // warm-start probes first (cheap landscape anchors), then the root
        for (const auto& x : first_probes) {
            if (!budget_left(cfg_.initial_shots, false)) break;
            Eigen::VectorXd u = (x - dom_.lo).array() / (dom_.hi - dom_.lo).array();
            current_eval_cell_size_ = 0.0;
            evaluate(u, cfg_.initial_shots);
        }
        current_eval_cell_size_ = 1.0;
        if (budget_left(cfg_.initial_shots, false)) {
            Cell root;
            root.lo = Eigen::VectorXd::Zero(dom_.dim());
            root.hi = Eigen::VectorXd::Ones(dom_.dim());
            root.center = Eigen::VectorXd::Constant(dom_.dim(), 0.5);
            root.depth.assign(dom_.dim(), 0);
            root.birth = 0;
            evaluate(root.center, cfg_.initial_shots);
            cells_.push_back(std::move(root));
        }
        if (ledger_order_.empty()) throw std::runtime_error("DirectOptimizer: budget admits no evaluation");

        std::string reason = "budget exhausted";
        double best_seen = std::numeric_limits<double>::infinity();
        int since_improve = 0;
        while (iter_ < cfg_.max_iterations && !cells_.empty()) {
            ++iter_;
            if (!budget_left(cfg_.initial_shots)) break;
            if (stop_requested_) {
                reason = stop_reason_;
                break;
            }

            auto po = select_cells();
            maybe_ocba_refine(po);
            po = select_cells();

            bool out_of_budget = false;
            for (const std::size_t ci : po) {
                if (!subdivide(ci)) {
                    out_of_budget = true;
                    break;
                }
            }

            if (cfg_.use_metamodel && evals_since_refit_ >= cfg_.refit_cadence && budget_left(cfg_.initial_shots)) {
                refit_metamodel();
                for (int p = 0; p < cfg_.probes_per_refit && budget_left(cfg_.initial_shots); ++p) greedy_probe();
            }

            if (on_iteration) on_iteration(*this, iter_);

            const auto inc = incumbent();
            if (inc && inc->second.mean < best_seen - cfg_.stationarity_tol) {
                best_seen = inc->second.mean;
                since_improve = 0;
            } else {
                ++since_improve;
            }
            if (cfg_.stopping == DirectConfig::Stopping::stationarity && since_improve >= cfg_.stationarity_window) {
                reason = "stationarity";
                break;
            }
            if (out_of_budget) break;
        }
        if (stop_requested_) reason = stop_reason_;

        final_selection();

        DirectResult res;
        const auto inc = incumbent();
        res.best_x = inc->first;
        res.best_value = inc->second.mean;
        res.best_std_error = inc->second.std_error;
        res.best_shots = inc->second.shots;
        res.budget_spent = spent_;
        res.iterations = iter_;
        res.stop_reason = reason;
        res.trajectory = std::move(trajectory_);
        return res;
    }

    // --- exposed for unit tests ---------------------------------------

    struct Cell {
        Eigen::VectorXd lo, hi, center; // normalized
        std::vector<int> depth;         // per-dim trisection count
        int birth = 0;

        int min_depth() const {
            int m = depth[0];
            for (const int d : depth) m = std::min(m, d);
            return m;
        }
        double size() const { return std::pow(3.0, -min_depth()); } // longest side
        int longest_dim() const {
            const int m = min_depth();
            for (std::size_t d = 0; d < depth.size(); ++d)
                if (depth[d] == m) return static_cast<int>(d);
            return 0;
        }
    };

    const std::vector<Cell>& cells() const { return cells_; }
    const PointRecord& record_at(const Eigen::VectorXd& u) const { return ledger_.at(point_key(u)); }

    // Potentially-optimal cells: per size group take the best pooled value,
    // then keep representatives admitting a rate K >= 0 that undercuts every
    // other group and improves on the incumbent by the eps slack. The
    // largest-size group always qualifies (exploration guarantee).
    std::vector<std::size_t> select_cells() const {
        std::map<int, std::size_t> group_best; // min_depth -> cell index
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            const double v = value_of(i);
            auto it = group_best.find(cells_[i].min_depth());
            if (it == group_best.end() || v < value_of(it->second)) group_best.emplace(cells_[i].min_depth(), i).first->second = i;
        }
        double fmin = std::numeric_limits<double>::infinity();
        for (const auto& [g, i] : group_best) fmin = std::min(fmin, value_of(i));

        std::vector<std::size_t> out;
        for (const auto& [g, i] : group_best) {
            const double sj = cells_[i].size();
            const double fj = value_of(i);
            double k_lo = 0.0, k_hi = std::numeric_limits<double>::infinity();
            for (const auto& [g2, i2] : group_best) {
                if (g2 == g) continue;
                const double si = cells_[i2].size();
                const double fi = value_of(i2);
                if (si < sj) k_lo = std::max(k_lo, (fj - fi) / (sj - si));
                else k_hi = std::min(k_hi, (fi - fj) / (si - sj));
            }
            if (k_lo > k_hi) continue;
            const double k_use = std::isfinite(k_hi) ? k_hi : 1e300;
            const double improvement_bound = fj - k_use * sj;
            if (improvement_bound <= fmin - cfg_.eps * std::abs(fmin) || g == group_best.begin()->first)
                out.push_back(i);
        }
        return out;
    }

private:
    static std::string point_key(const Eigen::VectorXd& u) {
        std::string key;
        char buf[32];
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.9f", u[i] + 0.0);
            if (i) key += ',';
            key += buf;
        }
        return key;
    }

    double value_of(std::size_t cell_index) const { return ledger_.at(point_key(cells_[cell_index].center)).mean; }

    double sigma_of(std::size_t cell_index) const { return ledger_.at(point_key(cells_[cell_index].center)).std_error; }

    bool budget_left(long shots, bool reserve = true) const {
        const double cap = reserve ? cfg_.budget * (1.0 - cfg_.selection_reserve) : cfg_.budget;
        if (cost_per_shot_ <= 0.0) return spent_ < cap;
        return spent_ + cost_per_shot_ * shots <= cap;
    }

    const PointRecord& evaluate(const Eigen::VectorXd& u, long shots) {
        const Eigen::VectorXd x = dom_.to_physical(u);
        const Evaluation ev = (*oracle_)(x, shots);
        spent_ += ev.cost;
        if (ev.shots > 0 && ev.cost > 0.0) cost_per_shot_ = ev.cost / std::max<long>(1, shots);
        const std::string key = point_key(u);
        auto it = ledger_.find(key);
        if (it == ledger_.end()) {
            it = ledger_.emplace(key, PointRecord{u, ev.mean, ev.std_error, ev.shots}).first;
            ledger_order_.push_back(key);
        } else {
            it->second.mean = ev.mean;
            it->second.std_error = ev.std_error;
            it->second.shots = ev.shots;
        }
        ++evals_since_refit_;
        ++total_evals_;
        TrajectoryPoint tp;
        tp.iteration = iter_;
        tp.x = x;
        tp.value = ev.mean;
        tp.std_error = ev.std_error;
        tp.shots = ev.shots;
        tp.cell_size = current_eval_cell_size_;
        tp.budget_spent = spent_;
        tp.pred_min = pred_min_;
        tp.pred_sigma = pred_sigma_;
        trajectory_.push_back(std::move(tp));
        return it->second;
    }

    bool subdivide(std::size_t ci) {
        Cell& parent = cells_[ci];
        if (parent.size() <= cfg_.min_cell_size) return true; // converged locally; not an error
        const int d = parent.longest_dim();
        const double w = (parent.hi[d] - parent.lo[d]) / 3.0;

        Cell left = parent, mid = parent, right = parent;
        left.hi[d] = parent.lo[d] + w;
        mid.lo[d] = parent.lo[d] + w;
        mid.hi[d] = parent.lo[d] + 2 * w;
        right.lo[d] = parent.lo[d] + 2 * w;
        for (Cell* c : {&left, &mid, &right}) {
            c->depth[d] += 1;
            c->birth = iter_;
        }
        left.center[d] = parent.center[d] - w;
        right.center[d] = parent.center[d] + w;
        // mid keeps the parent's center and inherits its pooled evaluation

        if (!budget_left(2 * cfg_.initial_shots)) return false;
        current_eval_cell_size_ = left.size();
        evaluate(left.center, cfg_.initial_shots);
        current_eval_cell_size_ = right.size();
        evaluate(right.center, cfg_.initial_shots);
        current_eval_cell_size_ = 0.0;

        cells_[ci] = std::move(mid);
        cells_.push_back(std::move(left));
        cells_.push_back(std::move(right));
        return true;
    }

    // When two potentially-optimal candidates are statistically
    // indistinguishable, spend an OCBA block on the candidate set before
    // committing to subdivisions.
    void maybe_ocba_refine(const std::vector<std::size_t>& po) {
        if (po.size() < 2) return;
        bool ambiguous = false;
        for (std::size_t a = 0; a + 1 < po.size(); ++a) {
            const double gap = std::abs(value_of(po[a]) - value_of(po[a + 1]));
            if (gap < sigma_of(po[a]) + sigma_of(po[a + 1])) ambiguous = true;
        }
        if (!ambiguous) return;
        const long extra = cfg_.ocba_block * cfg_.initial_shots;
        if (!budget_left(extra)) return;
        std::vector<OcbaCandidate> cands;
        for (const std::size_t i : po) {
            const PointRecord& r = ledger_.at(point_key(cells_[i].center));
            cands.push_back({r.mean, r.std_error * std::sqrt(std::max<long>(r.shots, 1))});
        }
        const auto alloc = ocba_allocate(cands, extra);
        for (std::size_t i = 0; i < po.size(); ++i) {
            if (alloc[i] <= 0) continue;
            current_eval_cell_size_ = cells_[po[i]].size();
            evaluate(cells_[po[i]].center, alloc[i]);
        }
        current_eval_cell_size_ = 0.0;
    }

    void refit_metamodel() {
        evals_since_refit_ = 0;
        const int n_points = static_cast<int>(ledger_order_.size());
        if (n_points < 2) return;
        // training set: most recent + best pooled values
        std::vector<std::size_t> chosen;
        const std::size_t recent_from = n_points > cfg_.train_recent ? n_points - cfg_.train_recent : 0;
        for (std::size_t i = recent_from; i < static_cast<std::size_t>(n_points); ++i) chosen.push_back(i);
        if (recent_from > 0) {
            std::vector<std::size_t> older(recent_from);
            for (std::size_t i = 0; i < recent_from; ++i) older[i] = i;
            std::stable_sort(older.begin(), older.end(), [&](std::size_t a, std::size_t b) {
                return ledger_.at(ledger_order_[a]).mean < ledger_.at(ledger_order_[b]).mean;
            });
            for (std::size_t i = 0; i < older.size() && i < static_cast<std::size_t>(cfg_.train_best); ++i)
                chosen.push_back(older[i]);
        }
        const int n = static_cast<int>(chosen.size());
        Eigen::MatrixXd X(n, dom_.dim());
        Eigen::VectorXd y(n), nv(n);
        for (int i = 0; i < n; ++i) {
            const PointRecord& r = ledger_.at(ledger_order_[chosen[static_cast<std::size_t>(i)]]);
            X.row(i) = dom_.to_physical(r.u).transpose();
            y[i] = r.mean;
            nv[i] = r.std_error * r.std_error;
        }
        Metamodel::Config mc;
        mc.periodic = dom_.periodic;
        mc.seed = seeds_.next();
        model_.fit(X, y, nv, mc);
    }

    void greedy_probe() {
        if (!model_.fitted()) return;
        auto objective = [&](const Eigen::VectorXd& x) { return model_.predict(x).mean; };
        // multi-start polish: best two distinct ledger points plus one random
        std::vector<Eigen::VectorXd> starts;
        std::vector<std::size_t> order(ledger_order_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ledger_.at(ledger_order_[a]).mean < ledger_.at(ledger_order_[b]).mean;
        });
        for (std::size_t i = 0; i < order.size() && starts.size() < 2; ++i)
            starts.push_back(dom_.to_physical(ledger_.at(ledger_order_[order[i]]).u));
        auto rng = make_rng(seeds_.next());
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        Eigen::VectorXd rnd(dom_.dim());
        for (int i = 0; i < dom_.dim(); ++i) rnd[i] = uni(rng);
        starts.push_back(dom_.to_physical(rnd));

        NmOptions nm;
        nm.max_iters = 120;
        Eigen::VectorXd step = 0.1 * (dom_.hi - dom_.lo);
        double best_f = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_x;
        for (const auto& s : starts) {
            const auto res = nelder_mead(objective, s, step, dom_.lo, dom_.hi, dom_.periodic, nm);
            if (res.f < best_f) {
                best_f = res.f;
                best_x = res.x;
            }
        }
        const auto pred = model_.predict(best_x);
        pred_min_ = pred.mean;
        pred_sigma_ = std::sqrt(std::max(pred.var, 0.0));
        // normalized coordinates, then evaluate like any other point
        Eigen::VectorXd u = (best_x - dom_.lo).array() / (dom_.hi - dom_.lo).array();
        for (int i = 0; i < dom_.dim(); ++i) u[i] = std::clamp(u[i], 0.0, 1.0);
        current_eval_cell_size_ = 0.0;
        evaluate(u, cfg_.initial_shots);
    }

    // Devote the reserved budget slice to an OCBA round over the top
    // candidates so the reported incumbent rests on trustworthy pooled means.
    void final_selection() {
        if (ledger_order_.size() < 2 || cost_per_shot_ <= 0.0) return;
        const long affordable = static_cast<long>(std::floor((cfg_.budget - spent_) / cost_per_shot_));
        if (affordable < 2) return;
        std::vector<std::size_t> order(ledger_order_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ledger_.at(ledger_order_[a]).mean < ledger_.at(ledger_order_[b]).mean;
        });
        const std::size_t k = std::min<std::size_t>(5, order.size());
        std::vector<OcbaCandidate> cands;
        for (std::size_t i = 0; i < k; ++i) {
            const PointRecord& r = ledger_.at(ledger_order_[order[i]]);
            cands.push_back({r.mean, r.std_error * std::sqrt(std::max<long>(r.shots, 1))});
        }
        if (cands.size() < 2) return;
        const auto alloc = ocba_allocate(cands, affordable);
        for (std::size_t i = 0; i < k; ++i) {
            if (alloc[i] <= 0) continue;
            evaluate(ledger_.at(ledger_order_[order[i]]).u, alloc[i]);
        }
    }

    OptDomain dom_;
    DirectConfig cfg_;
    SeedSequencer seeds_;
    const Oracle* oracle_ = nullptr;
    std::vector<Cell> cells_;
    std::unordered_map<std::string, PointRecord> ledger_;
    std::vector<std::string> ledger_order_;
    std::vector<TrajectoryPoint> trajectory_;
    Metamodel model_;
    double spent_ = 0.0;
    double cost_per_shot_ = 0.0;
    int iter_ = 0;
    int evals_since_refit_ = 0;
    long total_evals_ = 0;
    double current_eval_cell_size_ = 1.0;
    double pred_min_ = std::numeric_limits<double>::quiet_NaN();
    double pred_sigma_ = std::numeric_limits<double>::quiet_NaN();
    bool stop_requested_ = false;
    std::string stop_reason_;
};

} // namespace vqs
