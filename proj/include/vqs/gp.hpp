#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "vqs/nelder_mead.hpp"
#include "vqs/rng.hpp"

namespace vqs {

// Gaussian-process surrogate of the energy landscape. Squared-exponential
// kernel with per-dimension length scales; 2pi-periodic dimensions use the
// chordal sin metric so predictions are exactly periodic. Hyperparameters
// (signal variance, length scales, noise floor) come from maximizing the
// marginal likelihood with a warm-started simplex search.
class Metamodel {
public:
    struct Config {
        std::vector<bool> periodic;
        int mle_iters = 60;
        int mle_restarts = 1; // extra jittered starts beyond warm/heuristic
        double jitter = 1e-10;
        std::uint64_t seed = 0;
    };

    struct Prediction {
        double mean = 0.0;
        double var = 0.0;
    };

    bool fitted() const { return fitted_; }
    double signal_variance() const { return sf2_; }
    const Eigen::VectorXd& length_scales() const { return len_; }
    double noise_floor() const { return nf_; }

    // X: n x d training inputs; y: values; noise_var: per-point observation
    // noise variances (shot-noise squared errors).
    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& noise_var,
             const Config& cfg) {
        const int n = static_cast<int>(X.rows());
        const int d = static_cast<int>(X.cols());
        if (n < 2) throw std::invalid_argument("Metamodel: need >= 2 training points");
        if (static_cast<int>(cfg.periodic.size()) != d) throw std::invalid_argument("Metamodel: periodic flags mismatch");
        X_ = X;
        noise_ = noise_var;
        cfg_ = cfg;
        ymean_ = y.mean();
        yc_ = y.array() - ymean_;

        const double yvar = std::max(yc_.squaredNorm() / n, 1e-12);
        degenerate_ = yc_.squaredNorm() / n < 1e-14 * std::max(1.0, ymean_ * ymean_);
        if (degenerate_) {
            // flat landscape so far: constant-mean model with prior variance
            sf2_ = 1.0;
            len_ = Eigen::VectorXd::Constant(d, 1.0);
            nf_ = 1e-8;
            fitted_ = true;
            factorize();
            return;
        }

        // hyper vector: [log sf2, log len_1..d, log noise_floor]
        Eigen::VectorXd h0(d + 2);
        h0[0] = std::log(yvar);
        for (int k = 0; k < d; ++k) {
            const double span = std::max(X.col(k).maxCoeff() - X.col(k).minCoeff(), 1e-3);
            h0[1 + k] = std::log(0.3 * span);
        }
        h0[d + 1] = std::log(std::max(0.01 * yvar, 1e-10));

        std::vector<Eigen::VectorXd> starts;
        if (fitted_ && static_cast<int>(len_.size()) == d) {
            Eigen::VectorXd warm(d + 2);
            warm[0] = std::log(sf2_);
            for (int k = 0; k < d; ++k) warm[1 + k] = std::log(len_[k]);
            warm[d + 1] = std::log(nf_);
            starts.push_back(warm);
        }
        starts.push_back(h0);
        auto rng = make_rng(cfg.seed);
        std::normal_distribution<double> gauss(0.0, 0.5);
        for (int r = 0; r < cfg.mle_restarts; ++r) {
            Eigen::VectorXd s = h0;
            for (int k = 0; k < s.size(); ++k) s[k] += gauss(rng);
            starts.push_back(s);
        }

        auto neg_ll = [&](const Eigen::VectorXd& h) { return -log_marginal(h); };
        const Eigen::VectorXd lo = Eigen::VectorXd::Constant(d + 2, -30.0);
        const Eigen::VectorXd hi = Eigen::VectorXd::Constant(d + 2, 30.0);
        const std::vector<bool> nper(d + 2, false);
        NmOptions nm;
        nm.max_iters = cfg.mle_iters;
        double best = std::numeric_limits<double>::infinity();
        Eigen::VectorXd besth = h0;
        for (const auto& s : starts) {
            const auto res = nelder_mead(neg_ll, s, Eigen::VectorXd::Constant(d + 2, 0.7), lo, hi, nper, nm);
            if (res.f < best) {
                best = res.f;
                besth = res.x;
            }
        }
        sf2_ = std::exp(besth[0]);
        len_ = besth.segment(1, d).array().exp();
        nf_ = std::exp(besth[d + 1]);
        fitted_ = true;
        factorize();
    }

    // Refit the posterior for given data under fixed, externally supplied
    // hyperparameters (no likelihood search).
    void fit_fixed(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& noise_var,
                   const Config& cfg, double sf2, const Eigen::VectorXd& len, double nf) {
        X_ = X;
        noise_ = noise_var;
        cfg_ = cfg;
        ymean_ = y.mean();
        yc_ = y.array() - ymean_;
        sf2_ = sf2;
        len_ = len;
        nf_ = nf;
        fitted_ = true;
        degenerate_ = false;
        factorize();
    }

    Prediction predict(const Eigen::VectorXd& x) const {
        if (!fitted_) throw std::logic_error("Metamodel: predict before fit");
        const int n = static_cast<int>(X_.rows());
        Eigen::VectorXd ks(n);
        for (int i = 0; i < n; ++i) ks[i] = kernel(X_.row(i).transpose(), x);
        Prediction out;
        out.mean = ymean_ + ks.dot(alpha_);
        const Eigen::VectorXd v = chol_.matrixL().solve(ks);
        out.var = std::max(sf2_ - v.squaredNorm(), 0.0) + nf_; // includes observation noise
        return out;
    }

private:
    double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        return kernel_h(a, b, sf2_, len_);
    }

    double kernel_h(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double sf2,
                    const Eigen::VectorXd& len) const {
        double q = 0.0;
        for (int k = 0; k < a.size(); ++k) {
            double u;
            if (cfg_.periodic[k]) {
                u = 2.0 * std::sin(0.5 * (a[k] - b[k])) / len[k];
            } else {
                u = (a[k] - b[k]) / len[k];
            }
            q += u * u;
        }
        return sf2 * std::exp(-0.5 * q);
    }

    double log_marginal(const Eigen::VectorXd& h) const {
        const int n = static_cast<int>(X_.rows());
        const int d = static_cast<int>(X_.cols());
        const double sf2 = std::exp(h[0]);
        const Eigen::VectorXd len = h.segment(1, d).array().exp();
        const double nf = std::exp(h[d + 1]);
        Eigen::MatrixXd K(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j) {
                const double v = kernel_h(X_.row(i).transpose(), X_.row(j).transpose(), sf2, len);
                K(i, j) = v;
                K(j, i) = v;
            }
            K(i, i) += noise_[i] + nf + cfg_.jitter;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() != Eigen::Success) return -1e300;
        const Eigen::VectorXd a = llt.solve(yc_);
        double logdet = 0.0;
        for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
        return -0.5 * yc_.dot(a) - logdet - 0.5 * n * std::log(2.0 * M_PI);
    }

    void factorize() {
        const int n = static_cast<int>(X_.rows());
        Eigen::MatrixXd K(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j) {
                const double v = kernel(X_.row(i).transpose(), X_.row(j).transpose());
                K(i, j) = v;
                K(j, i) = v;
            }
            K(i, i) += noise_[i] + nf_ + cfg_.jitter;
        }
        chol_.compute(K);
        if (chol_.info() != Eigen::Success) throw std::runtime_error("Metamodel: covariance not PSD");
        alpha_ = chol_.solve(yc_);
    }

    Eigen::MatrixXd X_;
    Eigen::VectorXd yc_, noise_, alpha_;
    Eigen::VectorXd len_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Config cfg_;
    double ymean_ = 0.0, sf2_ = 1.0, nf_ = 1e-8;
    bool fitted_ = false;
    bool degenerate_ = false;
};

} // namespace vqs
