#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vqs/cdr.hpp"
#include "vqs/measure.hpp"
#include "vqs/pauli.hpp"
#include "vqs/rng.hpp"
#include "vqs/state.hpp"

namespace vqs {

// CP-symmetric elementary excitations: nearest-neighbour pair creation /
// annihilation plus its mirror image,
//   O_j = XX + YY at (j, j+1) and at (N-j, N+1-j),  j = 1..N/2,  O_0 = 1.
// Each commutes with sigma^z_tot and is CP-covariant by construction.
inline std::vector<PauliSum> excitation_operators(int n) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("excitation_operators: n must be even");
    std::vector<PauliSum> ops;
    ops.push_back(PauliSum::identity(n));
    for (int j = 1; j <= n / 2; ++j) {
        PauliSum o(n);
        for (const int a : {j, n - j}) {
            o.add(PauliString(n).with_op(a, 'X').with_op(a + 1, 'X'), 1.0);
            o.add(PauliString(n).with_op(a, 'Y').with_op(a + 1, 'Y'), 1.0);
        }
        ops.push_back(std::move(o));
    }
    return ops;
}

// Effective Hamiltonian and overlap matrices on span{O_q |Psi>}. With real
// expansion coefficients only the Hermitian parts of O_q H O_q' and O_q O_q'
// enter the quadratic form, hence real symmetric matrices.
struct SubspaceProblem {
    Eigen::MatrixXd h_eff;
    Eigen::MatrixXd overlap;
    bool shot_estimated = false;
    Eigen::MatrixXd h_eff_err;   // entrywise std errors (shot mode)
    Eigen::MatrixXd overlap_err;
};

inline SubspaceProblem build_subspace_exact(const StateVector& state, const PauliSum& H,
                                            const std::vector<PauliSum>& ops) {
    const int q = static_cast<int>(ops.size());
    SubspaceProblem p;
    p.h_eff.resize(q, q);
    p.overlap.resize(q, q);
    std::vector<StateVector> phi;
    phi.reserve(ops.size());
    for (const auto& o : ops) phi.push_back(apply_projected(o, state));
    std::vector<StateVector> hphi;
    hphi.reserve(ops.size());
    for (const auto& f : phi) hphi.push_back(apply_projected(H, f));
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) {
            p.h_eff(a, b) = phi[static_cast<std::size_t>(a)].amp.dot(hphi[static_cast<std::size_t>(b)].amp).real();
            p.overlap(a, b) = phi[static_cast<std::size_t>(a)].amp.dot(phi[static_cast<std::size_t>(b)].amp).real();
        }
    p.h_eff = 0.5 * (p.h_eff + p.h_eff.transpose()).eval();
    p.overlap = 0.5 * (p.overlap + p.overlap.transpose()).eval();
    return p;
}

// Hermitian part of a product sum: Pauli strings are Hermitian, so taking
// the real part of every coefficient yields (A + A^dagger)/2.
inline PauliSum hermitian_part(const PauliSum& A) {
    PauliSum out(A.n_sites());
    for (const auto& [p, c] : A.sorted_terms()) out.add(p, c.real());
    return out;
}

// Measurement plan covering every string of all O_q H O_q' and O_q O_q'
// sandwiches: starts from the 3N variance bases (reusing CDR-style data) and
// greedily adds z-padded bases for anything left uncovered.
inline std::vector<MeasurementBasis> qse_bases(const PauliSum& H, const std::vector<PauliSum>& ops) {
    const int n = H.n_sites();
    std::vector<MeasurementBasis> plan = variance_bases(n);
    PauliSum all(n);
    for (const auto& oa : ops)
        for (const auto& ob : ops) {
            all += hermitian_part(sum_multiply(sum_multiply(oa, H), ob));
            all += hermitian_part(sum_multiply(oa, ob));
        }
    for (int round = 0; round < 4; ++round) {
        const auto missing = uncovered_strings(all, plan);
        if (missing.empty()) return plan;
        for (const auto& p : missing) {
            bool covered = false;
            for (const auto& b : plan)
                if (b.evaluates(p)) {
                    covered = true;
                    break;
                }
            if (covered) continue;
            std::string axes(static_cast<std::size_t>(n), 'z');
            for (int j = 1; j <= n; ++j) {
                const char op = p.op_at(j);
                if (op != 'I') axes[j - 1] = static_cast<char>(std::tolower(op));
            }
            plan.push_back({"ax:" + axes, axes});
        }
    }
    if (!uncovered_strings(all, plan).empty()) throw std::logic_error("qse_bases: coverage not reached");
    return plan;
}

// Shot-estimated subspace matrices. Samples every plan basis on the state,
// optionally pooling through / recording into a CDR at the given theta.
inline SubspaceProblem build_subspace_sampled(const StateVector& state, const PauliSum& H,
                                              const std::vector<PauliSum>& ops, long shots_per_basis,
                                              std::uint64_t seed, CdrStore* cdr = nullptr,
                                              const Eigen::VectorXd& theta = {}) {
    const auto plan = qse_bases(H, ops);
    SeedSequencer seeds(seed);
    std::vector<ShotBatch> local;
    BatchMap data;
    for (const auto& basis : plan) {
        ShotBatch b = sample(state, basis, shots_per_basis, seeds.next());
        b.theta = theta;
        if (cdr) {
            cdr->store(std::move(b));
        } else {
            local.push_back(std::move(b));
        }
    }
    if (cdr) {
        for (const auto& basis : plan)
            for (const ShotBatch* pb : cdr->query(theta, basis.tag)) data[basis.tag].push_back(pb);
    } else {
        for (const auto& b : local) data[b.basis_tag].push_back(&b);
    }

    const int q = static_cast<int>(ops.size());
    SubspaceProblem p;
    p.shot_estimated = true;
    p.h_eff.resize(q, q);
    p.overlap.resize(q, q);
    p.h_eff_err.resize(q, q);
    p.overlap_err.resize(q, q);
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) {
            const PauliSum hqq = hermitian_part(
                sum_multiply(sum_multiply(ops[static_cast<std::size_t>(a)], H), ops[static_cast<std::size_t>(b)]));
            const PauliSum mqq =
                hermitian_part(sum_multiply(ops[static_cast<std::size_t>(a)], ops[static_cast<std::size_t>(b)]));
            const auto eh = SumEstimator(hqq, plan).estimate(data);
            const auto em = SumEstimator(mqq, plan).estimate(data);
            p.h_eff(a, b) = eh.value;
            p.h_eff_err(a, b) = eh.std_error;
            p.overlap(a, b) = em.value;
            p.overlap_err(a, b) = em.std_error;
        }
    p.h_eff = 0.5 * (p.h_eff + p.h_eff.transpose()).eval();
    p.overlap = 0.5 * (p.overlap + p.overlap.transpose()).eval();
    p.h_eff_err = 0.5 * (p.h_eff_err + p.h_eff_err.transpose()).eval();
    p.overlap_err = 0.5 * (p.overlap_err + p.overlap_err.transpose()).eval();
    return p;
}

struct SubspaceSolution {
    Eigen::VectorXd eigenvalues;        // ascending
    Eigen::MatrixXd eigenvectors;       // columns, in excitation-operator coordinates
    int kept_dimension = 0;
};

// Generalized eigenproblem H_eff v = lambda M v, solved on the
// well-conditioned subspace of M: eigendirections of M below
// trunc * max_eigenvalue are discarded before the whitening transform.
inline SubspaceSolution solve_subspace(const SubspaceProblem& p, double trunc = 1e-6) {
    const Eigen::Index q = p.overlap.rows();
    if (q != p.overlap.cols() || q != p.h_eff.rows() || q != p.h_eff.cols())
        throw std::invalid_argument("solve_subspace: matrices must be square and same size");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(p.overlap);
    const double smax = em.eigenvalues().maxCoeff();
    if (smax <= 0.0) throw std::runtime_error("solve_subspace: overlap matrix has no positive direction");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < q; ++i)
        if (em.eigenvalues()[i] > trunc * smax) keep.push_back(i);
    Eigen::MatrixXd W(q, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
        W.col(static_cast<Eigen::Index>(i)) = em.eigenvectors().col(keep[i]) / std::sqrt(em.eigenvalues()[keep[i]]);
    Eigen::MatrixXd Ht = W.transpose() * p.h_eff * W;
    Ht = 0.5 * (Ht + Ht.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(Ht);
    SubspaceSolution sol;
    sol.eigenvalues = eh.eigenvalues();
    sol.eigenvectors = W * eh.eigenvectors();
    sol.kept_dimension = static_cast<int>(keep.size());
    return sol;
}

struct GapEstimate {
    double lambda0 = 0.0;
    double gap = 0.0;
    int kept_dimension = 0;
};

inline GapEstimate gap_estimate(const SubspaceProblem& p, double trunc = 1e-6) {
    const auto sol = solve_subspace(p, trunc);
    if (sol.eigenvalues.size() < 2)
        throw std::runtime_error("gap_estimate: subspace too small for a gap");
    return {sol.eigenvalues[0], sol.eigenvalues[1] - sol.eigenvalues[0], sol.kept_dimension};
}

inline GapEstimate gap_estimate(const StateVector& state, const PauliSum& H, double trunc = 1e-6) {
    return gap_estimate(build_subspace_exact(state, H, excitation_operators(state.n_sites)), trunc);
}

} // namespace vqs
