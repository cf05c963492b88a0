#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "vqs/pauli.hpp"
#include "vqs/state.hpp"

namespace vqs {

// Couplings of the gauge-eliminated lattice Schwinger spin Hamiltonian
//   H_T = w sum_j (s+_j s-_{j+1} + h.c.) + (m/2) sum_j (-1)^j sz_j
//         + gbar sum_{j<N} L_j^2,
//   L_j = eps0 - (1/2) sum_{l<=j} (sz_l + (-1)^l),
// with w the energy unit. Site indexing is 1-based, site 1 odd.
struct SchwingerParams {
    int n_sites = 8;
    double w = 1.0;
    double m = 0.1;
    double gbar = 1.0;
    double eps0 = 0.0;

    void validate() const {
        if (n_sites < 2 || n_sites % 2 != 0)
            throw std::invalid_argument("SchwingerParams: n_sites must be even and >= 2");
        if (gbar < 0.0) throw std::invalid_argument("SchwingerParams: gbar must be >= 0");
    }
};

// Eliminated electric-field operator L_j as a diagonal PauliSum.
inline PauliSum gauge_field(int j, const SchwingerParams& p) {
    p.validate();
    if (j < 1 || j > p.n_sites - 1) throw std::invalid_argument("gauge_field: site index out of range");
    PauliSum L = PauliSum::identity(p.n_sites, p.eps0);
    for (int l = 1; l <= j; ++l) {
        L.add(PauliString::single(p.n_sites, l, 'Z'), -0.5);
        L.add(PauliString(p.n_sites), -0.5 * ((l % 2) ? -1.0 : 1.0));
    }
    return L;
}

inline PauliSum build_hamiltonian(const SchwingerParams& p) {
    p.validate();
    const int n = p.n_sites;
    PauliSum H(n);
    // flip-flop term: w (s+ s- + h.c.) = (w/2)(XX + YY) on each bond
    for (int j = 1; j < n; ++j) {
        H.add(PauliString(n).with_op(j, 'X').with_op(j + 1, 'X'), 0.5 * p.w);
        H.add(PauliString(n).with_op(j, 'Y').with_op(j + 1, 'Y'), 0.5 * p.w);
    }
    for (int j = 1; j <= n; ++j)
        H.add(PauliString::single(n, j, 'Z'), 0.5 * p.m * ((j % 2) ? -1.0 : 1.0));
    for (int j = 1; j < n; ++j) {
        const PauliSum L = gauge_field(j, p);
        H += p.gbar * sum_multiply(L, L);
    }
    return H;
}

// H_T split into the three product-basis-measurable components
//   Lambda_X = (w/2) sum XX,  Lambda_Y = (w/2) sum YY,
//   Lambda_Z = everything diagonal including the scalar offset;
// d_j and c_{j,j'} mirror Lambda_Z's Z and ZZ coefficients.
struct LambdaDecomposition {
    PauliSum lambda_x, lambda_y, lambda_z;
    std::vector<double> d;                     // d[j-1] multiplies Z_j
    std::map<std::pair<int, int>, double> c;   // (j, j') -> coeff of Z_j Z_j', j < j'
};

inline LambdaDecomposition lambda_decompose(const PauliSum& H, const SchwingerParams& p) {
    const int n = p.n_sites;
    LambdaDecomposition out{PauliSum(n), PauliSum(n), PauliSum(n), std::vector<double>(n, 0.0), {}};
    for (const auto& [str, coeff] : H.sorted_terms()) {
        if (std::abs(coeff.imag()) > 1e-10)
            throw std::logic_error("lambda_decompose: non-Hermitian Hamiltonian");
        const double c = coeff.real();
        if (str.diagonal()) {
            out.lambda_z.add(str, c);
            if (str.weight() == 1) {
                for (int j = 1; j <= n; ++j)
                    if (str.op_at(j) == 'Z') out.d[j - 1] = c;
            } else if (str.weight() == 2) {
                int a = 0, b = 0;
                for (int j = 1; j <= n; ++j)
                    if (str.op_at(j) == 'Z') (a == 0 ? a : b) = j;
                out.c[{a, b}] = c;
            } else if (!str.is_identity()) {
                throw std::logic_error("lambda_decompose: diagonal term beyond ZZ: " + str.str());
            }
        } else {
            int a = 0, b = 0;
            char op = 0;
            for (int j = 1; j <= n; ++j) {
                const char o = str.op_at(j);
                if (o == 'I') continue;
                if (a == 0) {
                    a = j;
                    op = o;
                } else if (b == 0 && o == op) {
                    b = j;
                } else {
                    b = -1;
                }
            }
            if (b != a + 1 || (op != 'X' && op != 'Y'))
                throw std::logic_error("lambda_decompose: unclassifiable term: " + str.str());
            (op == 'X' ? out.lambda_x : out.lambda_y).add(str, c);
        }
    }
    return out;
}

// Normalized two-point density correlator distinguishing the bare-vacuum
// phase (0) from the pair-proliferated phase (1).
inline PauliSum order_parameter(int n_sites) {
    if (n_sites < 2) throw std::invalid_argument("order_parameter: need n_sites >= 2");
    const double norm = 1.0 / (2.0 * n_sites * (n_sites - 1));
    PauliSum O(n_sites);
    for (int i = 1; i <= n_sites; ++i)
        for (int j = i + 1; j <= n_sites; ++j) {
            const double si = (i % 2) ? -1.0 : 1.0;
            const double sj = (j % 2) ? -1.0 : 1.0;
            O.add(PauliString(n_sites), norm);
            O.add(PauliString::single(n_sites, i, 'Z'), norm * si);
            O.add(PauliString::single(n_sites, j, 'Z'), norm * sj);
            O.add(PauliString(n_sites).with_op(i, 'Z').with_op(j, 'Z'), norm * si * sj);
        }
    return O;
}

// n_j = (1 + (-1)^j sz_j)/2.
inline PauliSum particle_density(int j, int n_sites) {
    if (j < 1 || j > n_sites) throw std::invalid_argument("particle_density: site out of range");
    PauliSum n(n_sites);
    n.add(PauliString(n_sites), 0.5);
    n.add(PauliString::single(n_sites, j, 'Z'), 0.5 * ((j % 2) ? -1.0 : 1.0));
    return n;
}

// CP transformation: product of swaps W_{j,N+1-j} followed by a global X
// flip. On a computational bitstring: reverse site order, then flip all bits.
struct CpOperator {
    int n_sites;

    explicit CpOperator(int n) : n_sites(n) {
        if (n % 2 != 0) throw std::invalid_argument("CpOperator: n_sites must be even");
    }

    std::uint32_t map_bits(std::uint32_t bits) const { return cp_bits(bits, n_sites); }

    StateVector apply(const StateVector& s) const {
        if (s.n_sites != n_sites) throw std::invalid_argument("CpOperator: size mismatch");
        return cp_apply(s);
    }
};

inline CpOperator cp_operator(int n_sites) { return CpOperator(n_sites); }

} // namespace vqs
