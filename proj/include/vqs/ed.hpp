#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vqs/basis.hpp"
#include "vqs/pauli.hpp"
#include "vqs/rng.hpp"
#include "vqs/state.hpp"

namespace vqs {

// Real symmetric CSR matrix of a Hermitian PauliSum restricted to a sector.
// Rows are built target-side: A[r, c] with c = r ^ x_mask of each term.
class SectorMatrix {
public:
    static SectorMatrix build(const PauliSum& O, std::shared_ptr<const SectorBasis> basis) {
        O.require_hermitian();
        if (O.n_sites() != basis->n_sites()) throw std::invalid_argument("SectorMatrix: size mismatch");
        SectorMatrix A;
        A.basis_ = std::move(basis);
        const auto& b = *A.basis_;
        const std::size_t dim = b.dim();
        const auto terms = O.sorted_terms();
        A.row_ptr_.reserve(dim + 1);
        A.row_ptr_.push_back(0);
        std::vector<std::pair<std::uint32_t, double>> row;
        for (std::size_t r = 0; r < dim; ++r) {
            row.clear();
            const std::uint32_t rb = b.state(r);
            for (const auto& [p, coeff] : terms) {
                const std::uint32_t cb = rb ^ p.x_mask();
                if (!b.contains(cb)) continue;
                const cplx v = coeff * detail::pauli_bits_phase(p, cb);
                if (std::abs(v.imag()) > 1e-9)
                    throw std::logic_error("SectorMatrix: complex matrix element from " + p.str());
                row.emplace_back(static_cast<std::uint32_t>(b.rank(cb)), v.real());
            }
            std::sort(row.begin(), row.end());
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (!A.col_.empty() && A.col_.size() > A.row_ptr_.back() && A.col_.back() == row[i].first) {
                    A.val_.back() += row[i].second;
                } else {
                    A.col_.push_back(row[i].first);
                    A.val_.push_back(row[i].second);
                }
            }
            // drop numerically cancelled entries? keep: harmless
            A.row_ptr_.push_back(A.col_.size());
        }
        return A;
    }

    std::size_t dim() const { return row_ptr_.size() - 1; }
    const SectorBasis& basis() const { return *basis_; }
    std::shared_ptr<const SectorBasis> basis_ptr() const { return basis_; }

    template <class Vec, class VecOut>
    void apply(const Vec& x, VecOut& y) const {
        const std::size_t n = dim();
        for (std::size_t r = 0; r < n; ++r) {
            auto acc = x[0] * 0.0;
            for (std::size_t idx = row_ptr_[r]; idx < row_ptr_[r + 1]; ++idx)
                acc += val_[idx] * x[col_[idx]];
            y[r] = acc;
        }
    }

    Eigen::VectorXd operator*(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y(x.size());
        apply(x, y);
        return y;
    }

    Eigen::VectorXcd operator*(const Eigen::VectorXcd& x) const {
        Eigen::VectorXcd y(x.size());
        apply(x, y);
        return y;
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
        for (std::size_t r = 0; r < dim(); ++r)
            for (std::size_t idx = row_ptr_[r]; idx < row_ptr_[r + 1]; ++idx)
                D(static_cast<Eigen::Index>(r), col_[idx]) += val_[idx];
        return D;
    }

    // max row 1-norm; cheap upper bound on the spectral radius
    double norm_bound() const {
        double best = 0.0;
        for (std::size_t r = 0; r < dim(); ++r) {
            double s = 0.0;
            for (std::size_t idx = row_ptr_[r]; idx < row_ptr_[r + 1]; ++idx) s += std::abs(val_[idx]);
            best = std::max(best, s);
        }
        return best;
    }

private:
    std::shared_ptr<const SectorBasis> basis_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> col_;
    std::vector<double> val_;
};

namespace detail {

// Lanczos with full reorthogonalization for the k lowest eigenpairs of a
// real symmetric operator. `project`, when given, is applied after every
// matvec to confine the iteration to an invariant subspace.
struct LanczosOut {
    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs; // dim x k
};

template <class MatVec>
LanczosOut lanczos_lowest(const MatVec& apply_op, std::size_t dim, int k, double tol, int max_iter,
                          std::uint64_t seed, const std::function<void(Eigen::VectorXd&)>& project = {}) {
    const int m_cap = static_cast<int>(std::min<std::size_t>(dim, max_iter));
    if (k > m_cap) throw std::invalid_argument("lanczos: k exceeds reachable subspace");
    Eigen::MatrixXd V(dim, m_cap);
    std::vector<double> alpha, beta;

    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[static_cast<Eigen::Index>(i)] = gauss(rng);
    if (project) project(v);
    if (v.norm() < 1e-12) throw std::logic_error("lanczos: start vector annihilated by projector");
    v.normalize();
    V.col(0) = v;

    Eigen::VectorXd w(dim);
    int m = 0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    while (m < m_cap) {
        apply_op(V.col(m), w);
        if (project) project(w);
        const double a = V.col(m).dot(w);
        alpha.push_back(a);
        w -= a * V.col(m);
        if (m > 0) w -= beta.back() * V.col(m - 1);
        // two-pass full reorthogonalization
        for (int pass = 0; pass < 2; ++pass)
            w -= V.leftCols(m + 1) * (V.leftCols(m + 1).transpose() * w);
        const double b = w.norm();
        ++m;

        bool exhausted = false;
        if (b < 1e-12) {
            // invariant subspace found; restart direction unless done
            if (m >= static_cast<int>(dim) || m >= m_cap) {
                exhausted = true;
            } else {
                Eigen::VectorXd fresh(dim);
                for (std::size_t i = 0; i < dim; ++i) fresh[static_cast<Eigen::Index>(i)] = gauss(rng);
                if (project) project(fresh);
                for (int pass = 0; pass < 2; ++pass)
                    fresh -= V.leftCols(m) * (V.leftCols(m).transpose() * fresh);
                if (fresh.norm() < 1e-10) {
                    exhausted = true;
                } else {
                    fresh.normalize();
                    beta.push_back(0.0);
                    if (m < m_cap) V.col(m) = fresh;
                }
            }
        } else {
            beta.push_back(b);
            if (m < m_cap) V.col(m) = w / b;
        }

        const bool check_now = exhausted || m >= m_cap || (m >= k + 2 && m % 5 == 0);
        if (check_now && m >= k) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            es.compute(T);
            const double scale = std::max(1.0, std::abs(es.eigenvalues()[0]));
            bool ok = true;
            const double beta_last = beta.empty() ? 0.0 : beta.back();
            for (int i = 0; i < k; ++i) {
                const double resid = std::abs(beta_last * es.eigenvectors()(m - 1, i));
                if (resid > tol * scale) ok = false;
            }
            if (ok || exhausted || m >= m_cap) {
                if (!ok && !exhausted && m >= m_cap)
                    throw std::runtime_error("lanczos: not converged within max_iter");
                LanczosOut out;
                out.evals = es.eigenvalues().head(k);
                out.evecs = V.leftCols(m) * es.eigenvectors().leftCols(k);
                for (int i = 0; i < k; ++i) out.evecs.col(i).normalize();
                return out;
            }
        }
        if (exhausted) break;
    }
    throw std::runtime_error("lanczos: failed to converge");
}

// Orbits of the CP involution on a zero-magnetization sector basis.
struct CpOrbits {
    std::vector<std::size_t> perm;               // CP permutation of basis indices
    std::vector<std::pair<std::size_t, std::size_t>> orbits; // i <= j representatives
    std::size_t parity_dim(int parity) const {
        std::size_t d = 0;
        for (const auto& [i, j] : orbits)
            if (i != j || parity > 0) ++d;
        return d;
    }
};

inline CpOrbits cp_orbits(const SectorBasis& basis) {
    if (basis.n_up() * 2 != basis.n_sites())
        throw std::invalid_argument("cp_orbits: CP closes only the zero-magnetization sector");
    CpOrbits out;
    out.perm.resize(basis.dim());
    for (std::size_t i = 0; i < basis.dim(); ++i)
        out.perm[i] = basis.rank(cp_bits(basis.state(i), basis.n_sites()));
    for (std::size_t i = 0; i < basis.dim(); ++i)
        if (i <= out.perm[i]) out.orbits.emplace_back(i, out.perm[i]);
    return out;
}

} // namespace detail

struct EdOptions {
    std::size_t dense_cap = 4096;   // dense diagonalization below, Lanczos above
    double lanczos_tol = 1e-11;
    int max_iter = 500;
    std::uint64_t seed = 0x5eed;
};

struct EdPair {
    double energy;
    StateVector state;
};

// k lowest eigenpairs of H in the fixed-magnetization sector with n_up up
// spins, optionally further restricted to a CP parity (+1/-1, zero
// magnetization only). Energies ascend; states are normalized and live in the
// sector basis.
inline std::vector<EdPair> ed_spectrum(const PauliSum& H, int n_up, std::optional<int> cp_parity, int k,
                                       const EdOptions& opt = {}) {
    const int n = H.n_sites();
    if (n_up < 0 || n_up > n) throw std::invalid_argument("ed_spectrum: empty sector");
    auto basis = SectorBasis::get(n, n_up);
    const std::size_t dim = basis->dim();
    if (k < 1) throw std::invalid_argument("ed_spectrum: k must be >= 1");

    const SectorMatrix A = SectorMatrix::build(H, basis);

    std::vector<EdPair> out;
    if (!cp_parity) {
        if (static_cast<std::size_t>(k) > dim) throw std::invalid_argument("ed_spectrum: k exceeds sector dimension");
        if (dim <= opt.dense_cap) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.to_dense());
            for (int i = 0; i < k; ++i) {
                StateVector s;
                s.n_sites = n;
                s.sector = basis;
                s.amp = es.eigenvectors().col(i).cast<cplx>();
                out.push_back({es.eigenvalues()[i], std::move(s)});
            }
        } else {
            auto res = detail::lanczos_lowest([&](const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& y) { A.apply(x, y); },
                                              dim, k, opt.lanczos_tol, opt.max_iter, opt.seed);
            for (int i = 0; i < k; ++i) {
                StateVector s;
                s.n_sites = n;
                s.sector = basis;
                s.amp = res.evecs.col(i).cast<cplx>();
                out.push_back({res.evals[i], std::move(s)});
            }
        }
    } else {
        if (*cp_parity != 1 && *cp_parity != -1) throw std::invalid_argument("ed_spectrum: cp_parity must be +1/-1");
        const auto orb = detail::cp_orbits(*basis);
        const double sign = *cp_parity;
        const std::size_t dp = orb.parity_dim(*cp_parity);
        if (static_cast<std::size_t>(k) > dp) throw std::invalid_argument("ed_spectrum: k exceeds CP-sector dimension");

        if (dp <= opt.dense_cap) {
            // orthonormal orbit basis S: fixed points (even only) and
            // (e_i + sign e_j)/sqrt(2) pairs
            std::vector<std::pair<std::size_t, std::size_t>> cols;
            for (const auto& [i, j] : orb.orbits)
                if (i != j || sign > 0) cols.emplace_back(i, j);
            Eigen::MatrixXd HS = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dp));
            Eigen::VectorXd col(dim), hcol(dim);
            Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dp));
            for (std::size_t c = 0; c < dp; ++c) {
                col.setZero();
                const auto [i, j] = cols[c];
                if (i == j) {
                    col[static_cast<Eigen::Index>(i)] = 1.0;
                } else {
                    col[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(2.0);
                    col[static_cast<Eigen::Index>(j)] = sign / std::sqrt(2.0);
                }
                S.col(static_cast<Eigen::Index>(c)) = col;
                A.apply(col, hcol);
                HS.col(static_cast<Eigen::Index>(c)) = hcol;
            }
            Eigen::MatrixXd Hp = S.transpose() * HS;
            Hp = 0.5 * (Hp + Hp.transpose());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hp);
            for (int i = 0; i < k; ++i) {
                StateVector s;
                s.n_sites = n;
                s.sector = basis;
                s.amp = (S * es.eigenvectors().col(i)).cast<cplx>();
                out.push_back({es.eigenvalues()[i], std::move(s)});
            }
        } else {
            auto project = [&](Eigen::VectorXd& v) {
                Eigen::VectorXd pv(v.size());
                for (std::size_t i = 0; i < dim; ++i)
                    pv[static_cast<Eigen::Index>(i)] =
                        0.5 * (v[static_cast<Eigen::Index>(i)] + sign * v[static_cast<Eigen::Index>(orb.perm[i])]);
                v = pv;
            };
            auto res = detail::lanczos_lowest([&](const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& y) { A.apply(x, y); },
                                              dim, k, opt.lanczos_tol, opt.max_iter, opt.seed, project);
            for (int i = 0; i < k; ++i) {
                StateVector s;
                s.n_sites = n;
                s.sector = basis;
                s.amp = res.evecs.col(i).cast<cplx>();
                out.push_back({res.evals[i], std::move(s)});
            }
        }
    }

    // eigen-residual contract: ||H psi - E psi|| <= 1e-8 per returned pair
    for (const auto& [e, s] : out) {
        Eigen::VectorXcd hs(s.amp.size());
        A.apply(s.amp, hs);
        if ((hs - e * s.amp).norm() > 1e-8 * std::max(1.0, std::abs(e)))
            throw std::runtime_error("ed_spectrum: eigen-residual exceeds tolerance");
    }
    return out;
}

inline EdPair ed_ground_state(const PauliSum& H, int n_up, const EdOptions& opt = {}) {
    return ed_spectrum(H, n_up, std::nullopt, 1, opt).front();
}

} // namespace vqs
