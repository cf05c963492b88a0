#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <optional>
#include <stdexcept>

#include "vqs/basis.hpp"
#include "vqs/pauli.hpp"

namespace vqs {

// Pure state over either a fixed-magnetization sector (sector != nullptr) or
// the full 2^N space. Values are immutable by convention: operations return
// new states.
struct StateVector {
    int n_sites = 0;
    std::shared_ptr<const SectorBasis> sector; // null => full space
    Eigen::VectorXcd amp;

    std::size_t dim() const { return static_cast<std::size_t>(amp.size()); }

    std::uint32_t bits_of(std::size_t i) const {
        return sector ? sector->state(i) : static_cast<std::uint32_t>(i);
    }

    std::optional<std::size_t> index_of(std::uint32_t bits) const {
        if (!sector) return static_cast<std::size_t>(bits);
        if (!sector->contains(bits)) return std::nullopt;
        return sector->rank(bits);
    }

    double norm() const { return amp.norm(); }

    bool in_sector() const { return sector != nullptr; }
};

inline StateVector sector_state(int n_sites, int n_up) {
    StateVector s;
    s.n_sites = n_sites;
    s.sector = SectorBasis::get(n_sites, n_up);
    s.amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(s.sector->dim()));
    return s;
}

inline StateVector full_state(int n_sites) {
    StateVector s;
    s.n_sites = n_sites;
    s.amp = Eigen::VectorXcd::Zero(Eigen::Index(1) << n_sites);
    return s;
}

inline StateVector basis_state(int n_sites, int n_up, std::uint32_t bits) {
    StateVector s = sector_state(n_sites, n_up);
    auto idx = s.index_of(bits);
    if (!idx) throw std::invalid_argument("basis_state: bits not in sector");
    s.amp[static_cast<Eigen::Index>(*idx)] = 1.0;
    return s;
}

enum class NeelPhase { vacuum, anti };

inline std::uint32_t neel_bits(int n_sites, NeelPhase phase) {
    const std::uint32_t mask = (1u << n_sites) - 1u;
    const std::uint32_t vac = 0x55555555u & mask; // odd sites up
    return phase == NeelPhase::vacuum ? vac : (~vac & mask);
}

// Neel product state in the zero-magnetization sector. vacuum = |up down ...>,
// the bare vacuum of the staggered encoding; anti = |down up ...>.
inline StateVector neel_state(int n_sites, NeelPhase phase = NeelPhase::vacuum) {
    if (n_sites % 2 != 0) throw std::invalid_argument("neel_state: n_sites must be even");
    return basis_state(n_sites, n_sites / 2, neel_bits(n_sites, phase));
}

inline StateVector to_full(const StateVector& s) {
    if (!s.sector) return s;
    StateVector out = full_state(s.n_sites);
    for (std::size_t i = 0; i < s.dim(); ++i)
        out.amp[s.sector->state(i)] = s.amp[static_cast<Eigen::Index>(i)];
    return out;
}

namespace detail {

// P|b> = phase * |b ^ x_mask> for a Pauli string P acting on bitstring b.
inline cplx pauli_bits_phase(const PauliString& p, std::uint32_t bits) {
    const std::uint32_t y = p.x_mask() & p.z_mask();
    const std::uint32_t z_only = p.z_mask() & ~p.x_mask();
    // Y|up> = i|down>, Y|down> = -i|up>; Z gives -1 on down spins.
    const int up_y = std::popcount(y & bits);
    const int down_y = std::popcount(y & ~bits & ((p.n_sites() == 32) ? ~0u : ((1u << p.n_sites()) - 1u)));
    const int minus = std::popcount(z_only & ~bits & ((p.n_sites() == 32) ? ~0u : ((1u << p.n_sites()) - 1u)));
    int e = (up_y - down_y) % 4;
    if (e < 0) e += 4;
    static const cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    cplx ph = ipow[e];
    if (minus % 2) ph = -ph;
    return ph;
}

} // namespace detail

// <state| O |state> for Hermitian O. Matrix elements leaving the sector hit
// zero amplitudes and drop out, so sector states evaluate correctly.
inline double exact_expectation(const StateVector& s, const PauliSum& O) {
    if (O.n_sites() != s.n_sites) throw std::invalid_argument("exact_expectation: size mismatch");
    O.require_hermitian();
    cplx acc = 0.0;
    for (const auto& [p, c] : O.sorted_terms()) {
        cplx term = 0.0;
        for (std::size_t i = 0; i < s.dim(); ++i) {
            const std::uint32_t b = s.bits_of(i);
            const auto tgt = s.index_of(b ^ p.x_mask());
            if (!tgt) continue;
            term += std::conj(s.amp[static_cast<Eigen::Index>(*tgt)]) * detail::pauli_bits_phase(p, b) *
                    s.amp[static_cast<Eigen::Index>(i)];
        }
        acc += c * term;
    }
    return acc.real();
}

// P_basis * O |state>, i.e. the result projected back onto the state's basis.
// Exact for operators that preserve the sector.
inline StateVector apply_projected(const PauliSum& O, const StateVector& s) {
    if (O.n_sites() != s.n_sites) throw std::invalid_argument("apply_projected: size mismatch");
    StateVector out = s;
    out.amp.setZero();
    for (const auto& [p, c] : O.sorted_terms()) {
        for (std::size_t i = 0; i < s.dim(); ++i) {
            const std::uint32_t b = s.bits_of(i);
            const auto tgt = s.index_of(b ^ p.x_mask());
            if (!tgt) continue;
            out.amp[static_cast<Eigen::Index>(*tgt)] += c * detail::pauli_bits_phase(p, b) * s.amp[static_cast<Eigen::Index>(i)];
        }
    }
    return out;
}

// F = |<a|b>|^2.
inline double fidelity(const StateVector& a, const StateVector& b) {
    if (a.n_sites != b.n_sites || a.dim() != b.dim() || a.sector != b.sector)
        throw std::invalid_argument("fidelity: dimension mismatch");
    const cplx ov = a.amp.dot(b.amp);
    return std::norm(ov);
}

// CP = (reverse site order) . (flip every spin); an involution. Maps the
// n_up sector onto the (N - n_up) sector, so zero magnetization is preserved.
inline StateVector cp_apply(const StateVector& s) {
    StateVector out = s;
    if (s.sector) {
        const int n = s.n_sites;
        auto target = SectorBasis::get(n, n - s.sector->n_up());
        out.sector = target;
        out.amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(target->dim()));
        for (std::size_t i = 0; i < s.dim(); ++i)
            out.amp[static_cast<Eigen::Index>(target->rank(cp_bits(s.sector->state(i), n)))] =
                s.amp[static_cast<Eigen::Index>(i)];
    } else {
        for (std::size_t i = 0; i < s.dim(); ++i)
            out.amp[cp_bits(static_cast<std::uint32_t>(i), s.n_sites)] = s.amp[static_cast<Eigen::Index>(i)];
    }
    return out;
}

// <state| CP |state>; +/-1 on CP eigenstates.
inline double cp_expectation(const StateVector& s) {
    const StateVector t = cp_apply(s);
    if (t.sector != s.sector) throw std::invalid_argument("cp_expectation: state not in a CP-closed sector");
    return s.amp.dot(t.amp).real();
}

// Second-order Renyi entropy -log2 Tr(rho_A^2) of the contiguous partition
// [a_first, a_last] (1-based, inclusive).
inline double renyi2_entropy(const StateVector& s, int a_first, int a_last) {
    const int n = s.n_sites;
    if (a_first < 1 || a_last > n || a_first > a_last || (a_last - a_first + 1) >= n)
        throw std::invalid_argument("renyi2_entropy: invalid partition");
    const int na = a_last - a_first + 1;
    const std::uint32_t a_mask = ((na == 32) ? ~0u : ((1u << na) - 1u)) << (a_first - 1);
    const std::size_t da = std::size_t(1) << na;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(da), static_cast<Eigen::Index>(da));
    std::unordered_map<std::uint32_t, std::vector<std::pair<std::uint32_t, cplx>>> groups;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        const cplx a = s.amp[static_cast<Eigen::Index>(i)];
        if (std::abs(a) < 1e-300) continue;
        const std::uint32_t b = s.bits_of(i);
        groups[b & ~a_mask].emplace_back((b & a_mask) >> (a_first - 1), a);
    }
    for (const auto& [env, entries] : groups)
        for (const auto& [ai, va] : entries)
            for (const auto& [aj, vb] : entries)
                rho(static_cast<Eigen::Index>(ai), static_cast<Eigen::Index>(aj)) += va * std::conj(vb);
    const double purity = rho.squaredNorm(); // Tr(rho^2) for Hermitian rho
    return -std::log2(std::max(purity, 1e-300));
}

// Eigenvalue of sigma^z_tot when the state lives in a sector.
inline std::optional<int> magnetization(const StateVector& s) {
    if (!s.sector) return std::nullopt;
    return s.sector->magnetization();
}

} // namespace vqs
