#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace vqs {

struct KrylovOptions {
    int max_subspace = 40;
    double tol = 1e-10;       // residual tolerance per substep
    int max_substeps = 4096;
};

// Computes exp(-i * theta * A) * v for a real symmetric operator A acting on
// complex vectors, via Hermitian Lanczos with full reorthogonalization and
// adaptive time substepping. `apply_op(x, y)` must set y = A x.
template <class ApplyOp>
Eigen::VectorXcd expm_apply(const ApplyOp& apply_op, double theta, const Eigen::VectorXcd& v,
                            const KrylovOptions& opt = {}) {
    using Vec = Eigen::VectorXcd;
    const Eigen::Index dim = v.size();
    if (dim == 0) throw std::invalid_argument("expm_apply: empty vector");
    if (theta == 0.0) return v;

    Vec cur = v;
    double remaining = theta;
    const double dir = (theta > 0) ? 1.0 : -1.0;
    int steps = 0;

    while (std::abs(remaining) > 1e-15) {
        if (++steps > opt.max_substeps) throw std::runtime_error("expm_apply: too many substeps");
        const double nrm = cur.norm();
        if (nrm < 1e-300) return cur;

        const int m_max = static_cast<int>(std::min<Eigen::Index>(opt.max_subspace, dim));
        Eigen::MatrixXcd V(dim, m_max);
        Eigen::VectorXd alpha(m_max), beta(m_max);
        V.col(0) = cur / nrm;
        int m = 0;
        double beta_last = 0.0;
        bool breakdown = false;
        Vec w(dim);
        while (m < m_max) {
            apply_op(V.col(m), w);
            const double a = V.col(m).dot(w).real();
            alpha[m] = a;
            w -= a * V.col(m);
            if (m > 0) w -= beta[m - 1] * V.col(m - 1);
            for (int pass = 0; pass < 2; ++pass)
                w -= V.leftCols(m + 1) * (V.leftCols(m + 1).adjoint() * w);
            beta_last = w.norm();
            ++m;
            if (beta_last < 1e-13) {
                breakdown = true;
                break;
            }
            if (m < m_max) {
                beta[m - 1] = beta_last;
                V.col(m) = w / beta_last;
            }
        }

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);

        double tau = remaining;
        Eigen::VectorXcd u;
        while (true) {
            const Eigen::VectorXd phases = es.eigenvalues() * (-tau);
            Eigen::VectorXcd diag(m);
            for (int i = 0; i < m; ++i) diag[i] = std::polar(1.0, phases[i]);
            const Eigen::VectorXd e1_in_eig = es.eigenvectors().row(0).transpose();
            u = es.eigenvectors() * diag.cwiseProduct(e1_in_eig.cast<std::complex<double>>());
            if (breakdown) break; // subspace is invariant: exact in exact arithmetic
            const double err = beta_last * std::abs(u[m - 1]);
            if (err <= opt.tol) break;
            tau *= 0.5;
            if (std::abs(tau) < 1e-15) throw std::runtime_error("expm_apply: substep underflow");
        }

        cur = nrm * (V.leftCols(m) * u);
        remaining -= tau;
        if (remaining * dir < 0) remaining = 0.0;
    }
    return cur;
}

} // namespace vqs
