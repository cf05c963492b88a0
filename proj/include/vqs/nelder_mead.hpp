#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace vqs {

struct NmOptions {
    int max_iters = 200;
    double ftol = 1e-12;
    double xtol = 1e-10;
};

struct NmResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int evals = 0;
};

// Derivative-free simplex minimization with box handling: periodic dims wrap
// into [lo, hi), bounded dims clamp. Deterministic given the start simplex.
template <class F>
NmResult nelder_mead(F&& func, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                     const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                     const std::vector<bool>& periodic, const NmOptions& opt = {}) {
    const int d = static_cast<int>(x0.size());
    auto canon = [&](Eigen::VectorXd x) {
        for (int i = 0; i < d; ++i) {
            if (periodic[i]) {
                const double period = hi[i] - lo[i];
                x[i] = lo[i] + std::fmod(std::fmod(x[i] - lo[i], period) + period, period);
            } else {
                x[i] = std::clamp(x[i], lo[i], hi[i]);
            }
        }
        return x;
    };
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return func(canon(x));
    };

    std::vector<Eigen::VectorXd> pts(d + 1, x0);
    std::vector<double> fs(d + 1);
    for (int i = 1; i <= d; ++i) pts[i][i - 1] += step[i - 1];
    for (int i = 0; i <= d; ++i) fs[i] = eval(pts[i]);

    auto order = [&]() {
        std::vector<int> idx(d + 1);
        for (int i = 0; i <= d; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<Eigen::VectorXd> p2(d + 1);
        std::vector<double> f2(d + 1);
        for (int i = 0; i <= d; ++i) {
            p2[i] = pts[idx[i]];
            f2[i] = fs[idx[i]];
        }
        pts = std::move(p2);
        fs = std::move(f2);
    };

    for (int it = 0; it < opt.max_iters; ++it) {
        order();
        if (std::abs(fs[d] - fs[0]) < opt.ftol) break;
        double spread = 0.0;
        for (int i = 1; i <= d; ++i) spread = std::max(spread, (pts[i] - pts[0]).norm());
        if (spread < opt.xtol) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) centroid += pts[i];
        centroid /= d;

        const Eigen::VectorXd refl = centroid + (centroid - pts[d]);
        const double frefl = eval(refl);
        if (frefl < fs[0]) {
            const Eigen::VectorXd expd = centroid + 2.0 * (centroid - pts[d]);
            const double fexp = eval(expd);
            if (fexp < frefl) {
                pts[d] = expd;
                fs[d] = fexp;
            } else {
                pts[d] = refl;
                fs[d] = frefl;
            }
        } else if (frefl < fs[d - 1]) {
            pts[d] = refl;
            fs[d] = frefl;
        } else {
            const bool outside = frefl < fs[d];
            const Eigen::VectorXd contr =
                outside ? centroid + 0.5 * (refl - centroid) : centroid + 0.5 * (pts[d] - centroid);
            const double fcon = eval(contr);
            if (fcon < std::min(frefl, fs[d])) {
                pts[d] = contr;
                fs[d] = fcon;
            } else {
                for (int i = 1; i <= d; ++i) {
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                    fs[i] = eval(pts[i]);
                }
            }
        }
    }
    order();
    return {canon(pts[0]), fs[0], evals};
}

} // namespace vqs
