#include <catch_amalgamated.hpp>

#include <map>

#include "vqs/direct.hpp"

using namespace vqs;

namespace {

// pooled noisy oracle: per-draw gaussian noise, cost 1 per draw
struct NoisyOracle {
    std::function<double(const Eigen::VectorXd&)> f;
    double sigma = 0.0;
    std::uint64_t seed = 1;
    mutable std::map<std::string, std::pair<long, double>> pool; // key -> (n, sum)
    mutable std::uint64_t counter = 0;

    Evaluation operator()(const Eigen::VectorXd& x, long shots) const {
        std::string key;
        char buf[32];
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.9f", x[i]);
            key += buf;
            key += ',';
        }
        auto& [n, sum] = pool[key];
        auto rng = make_rng(derive_seed(seed, counter++));
        std::normal_distribution<double> noise(0.0, sigma);
        const double base = f(x);
        for (long t = 0; t < shots; ++t) sum += base + (sigma > 0 ? noise(rng) : 0.0);
        n += shots;
        Evaluation ev;
        ev.mean = sum / n;
        ev.std_error = sigma > 0 ? sigma / std::sqrt(double(n)) : 0.0;
        ev.shots = n;
        ev.cost = double(shots);
        return ev;
    }
};

OptDomain unit_domain(int d) {
    OptDomain dom;
    dom.lo = Eigen::VectorXd::Zero(d);
    dom.hi = Eigen::VectorXd::Ones(d);
    dom.periodic.assign(d, false);
    return dom;
}

// classic potentially-optimal test, written directly from the pairwise rule
bool po_reference(const std::vector<std::pair<double, double>>& size_value, std::size_t j, double eps) {
    const auto [sj, fj] = size_value[j];
    double fmin = 1e300;
    for (const auto& [s, f] : size_value) fmin = std::min(fmin, f);
    double k_lo = 0.0, k_hi = 1e300;
    for (std::size_t i = 0; i < size_value.size(); ++i) {
        if (i == j) continue;
        const auto [si, fi] = size_value[i];
        if (si == sj) {
            if (fi < fj) return false;
        } else if (si < sj) {
            k_lo = std::max(k_lo, (fj - fi) / (sj - si));
        } else {
            k_hi = std::min(k_hi, (fi - fj) / (si - sj));
        }
    }
    if (k_lo > k_hi) return false;
    return fj - k_hi * sj <= fmin - eps * std::abs(fmin);
}

} // namespace

TEST_CASE("init evaluates the root center and accounts the budget") {
    DirectConfig cfg;
    cfg.budget = 10;
    cfg.initial_shots = 3;
    cfg.use_metamodel = false;
    cfg.selection_reserve = 0.0;
    DirectOptimizer opt(unit_domain(1), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return x[0]; }, 0.0, 1};
    const auto res = opt.run(oracle);
    REQUIRE(!res.trajectory.empty());
    CHECK(res.trajectory[0].x[0] == Catch::Approx(0.5));
    CHECK(res.trajectory[0].budget_spent == Catch::Approx(3.0)); // initial shots x 1 basis-equivalent
}

TEST_CASE("selection: dominance within a size group") {
    DirectConfig cfg;
    cfg.budget = 100;
    cfg.initial_shots = 1;
    cfg.use_metamodel = false;
    cfg.selection_reserve = 0.0;
    DirectOptimizer opt(unit_domain(1), cfg);
    // single cell: selected
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return (x[0] - 0.3) * (x[0] - 0.3); }, 0.0, 1};
    const auto res = opt.run(oracle);
    CHECK(res.best_x[0] == Catch::Approx(0.3).margin(1e-2));
}

TEST_CASE("hull selection matches the exhaustive pairwise-dominance oracle") {
    // five artificial groups (size, value)
    const std::vector<std::pair<double, double>> sv{{1.0, 2.0}, {1.0 / 3, 1.4}, {1.0 / 9, 1.5}, {1.0 / 27, 1.1},
                                                    {1.0 / 81, 1.3}};
    // drive the optimizer into exactly this configuration is intricate; the
    // reference rule itself is validated against hand-checked cases instead
    CHECK(po_reference(sv, 0, 1e-4));        // largest cell always qualifies
    CHECK_FALSE(po_reference(sv, 2, 1e-4));  // dominated: smaller and worse than group 1
    CHECK(po_reference(sv, 3, 1e-4));        // best value overall
    // the smallest cell only qualifies if it has the best value
    CHECK_FALSE(po_reference(sv, 4, 1e-4));
}

TEST_CASE("optimizer's select_cells agrees with the reference rule on a real run") {
    DirectConfig cfg;
    cfg.budget = 200;
    cfg.initial_shots = 1;
    cfg.use_metamodel = false;
    cfg.selection_reserve = 0.0;
    DirectOptimizer opt(unit_domain(2), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) {
                           return std::sin(5 * x[0]) * std::cos(3 * x[1]) + 0.5 * (x - Eigen::Vector2d(0.7, 0.2)).squaredNorm();
                       },
                       0.0, 1};
    opt.run(oracle);
    // rebuild (size,value) groups as the optimizer sees them
    const auto& cells = opt.cells();
    std::map<int, std::pair<double, std::size_t>> groups;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const double v = opt.record_at(cells[i].center).mean;
        const int g = cells[i].min_depth();
        auto it = groups.find(g);
        if (it == groups.end() || v < it->second.first) groups[g] = {v, i};
    }
    std::vector<std::pair<double, double>> sv;
    std::vector<std::size_t> idx;
    for (const auto& [g, pair] : groups) {
        sv.push_back({cells[pair.second].size(), pair.first});
        idx.push_back(pair.second);
    }
    const auto selected = opt.select_cells();
    for (std::size_t k = 0; k < sv.size(); ++k) {
        const bool in_selected = std::find(selected.begin(), selected.end(), idx[k]) != selected.end();
        CHECK(in_selected == po_reference(sv, k, cfg.eps));
    }
}

TEST_CASE("trisection geometry") {
    DirectConfig cfg;
    cfg.budget = 40;
    cfg.initial_shots = 1;
    cfg.use_metamodel = false;
    cfg.selection_reserve = 0.0;
    DirectOptimizer opt(unit_domain(1), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return x[0]; }, 0.0, 1};
    opt.run(oracle);
    // cells tile [0,1]: disjoint interiors, union the whole interval
    std::vector<std::pair<double, double>> spans;
    for (const auto& c : opt.cells()) spans.push_back({c.lo[0], c.hi[0]});
    std::sort(spans.begin(), spans.end());
    CHECK(spans.front().first == Catch::Approx(0.0));
    CHECK(spans.back().second == Catch::Approx(1.0));
    for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i].first == Catch::Approx(spans[i - 1].second));
    // centers inside their cells, sizes are powers of 1/3
    for (const auto& c : opt.cells()) {
        CHECK(c.center[0] > c.lo[0]);
        CHECK(c.center[0] < c.hi[0]);
        const double w = c.hi[0] - c.lo[0];
        CHECK(std::log(w) / std::log(3.0) == Catch::Approx(std::round(std::log(w) / std::log(3.0))).margin(1e-9));
    }
}

TEST_CASE("2D splits go along the longest side") {
    DirectConfig cfg;
    cfg.budget = 7;
    cfg.initial_shots = 1;
    cfg.use_metamodel = false;
    cfg.selection_reserve = 0.0;
    DirectOptimizer opt(unit_domain(2), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return x.squaredNorm(); }, 0.0, 1};
    opt.run(oracle);
    // after the first subdivision (dim 0), the next split of the middle cell
    // must go along dim 1; verify every cell has per-dim depth differing <= 1
    for (const auto& c : opt.cells()) {
        CHECK(std::abs(c.depth[0] - c.depth[1]) <= 1);
    }
}

TEST_CASE("noiseless 1D quadratic solved within budget") {
    DirectConfig cfg;
    cfg.budget = 500;
    cfg.initial_shots = 1;
    cfg.use_metamodel = true;
    cfg.refit_cadence = 25;
    cfg.seed = 3;
    DirectOptimizer opt(unit_domain(1), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return (x[0] - 0.3) * (x[0] - 0.3); }, 0.0, 1};
    const auto res = opt.run(oracle);
    CHECK(std::abs(res.best_x[0] - 0.3) < 1e-2);
    CHECK(res.budget_spent <= 500.0);
}

TEST_CASE("monotone incumbent on a noiseless landscape") {
    DirectConfig cfg;
    cfg.budget = 300;
    cfg.initial_shots = 1;
    cfg.use_metamodel = false;
    cfg.selection_reserve = 0.0;
    DirectOptimizer opt(unit_domain(2), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return std::cos(7 * x[0]) + std::sin(5 * x[1]); }, 0.0, 1};
    const auto res = opt.run(oracle);
    double best = 1e300;
    for (const auto& tp : res.trajectory) {
        best = std::min(best, tp.value);
        // the running best never regresses (values are exact here)
    }
    CHECK(res.best_value == Catch::Approx(best));
}

TEST_CASE("maximum cell size shrinks under sustained exploration") {
    DirectConfig cfg;
    cfg.budget = 2000;
    cfg.initial_shots = 1;
    cfg.use_metamodel = false;
    cfg.selection_reserve = 0.0;
    DirectOptimizer opt(unit_domain(1), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return std::sin(9 * x[0]); }, 0.0, 1};
    opt.run(oracle);
    double max_size = 0.0;
    for (const auto& c : opt.cells()) max_size = std::max(max_size, c.size());
    CHECK(max_size <= 1.0 / 27); // largest cells keep getting revisited
}

TEST_CASE("noisy quadratic: pooling and refinement find the minimum region") {
    DirectConfig cfg;
    cfg.budget = 5000;
    cfg.initial_shots = 10;
    cfg.use_metamodel = true;
    cfg.refit_cadence = 25;
    cfg.seed = 9;
    DirectOptimizer opt(unit_domain(1), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return (x[0] - 0.62) * (x[0] - 0.62); }, 0.1, 4};
    const auto res = opt.run(oracle);
    CHECK(std::abs(res.best_x[0] - 0.62) < 5e-2);
    CHECK(res.budget_spent <= 5000.0);
}

TEST_CASE("budget cap is never exceeded and stationarity stopping works") {
    DirectConfig cfg;
    cfg.budget = 400;
    cfg.initial_shots = 2;
    cfg.use_metamodel = false;
    cfg.stopping = DirectConfig::Stopping::stationarity;
    cfg.stationarity_window = 5;
    DirectOptimizer opt(unit_domain(1), cfg);
    NoisyOracle oracle{[](const Eigen::VectorXd& x) { return 1.0; }, 0.0, 2}; // flat: stalls immediately
    const auto res = opt.run(oracle);
    CHECK(res.stop_reason == "stationarity");
    CHECK(res.budget_spent <= 400.0);
}

TEST_CASE("pooled re-evaluation updates the ledger mean") {
    NoisyOracle oracle{[](const Eigen::VectorXd&) { return 2.0; }, 0.5, 11};
    Eigen::VectorXd x(1);
    x << 0.25;
    const auto first = oracle(x, 100);
    const auto second = oracle(x, 300);
    CHECK(second.shots == 400);
    // pooled mean converges toward the true value as shots accumulate
    CHECK(std::abs(second.mean - 2.0) < std::abs(first.mean - 2.0) + 0.1);
}
