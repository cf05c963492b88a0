#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "vqs/ed.hpp"
#include "vqs/krylov.hpp"
#include "vqs/pauli.hpp"
#include "vqs/rng.hpp"
#include "vqs/state.hpp"

namespace vqs {

enum class ResourceMode { ideal_xy, native_ising };

// Entangling resource: long-range XY couplings J_ij = J0/|i-j|^alpha with a
// uniform field B. ideal_xy propagates the flip-flop form inside the
// magnetization sector; native_ising propagates the Ising+field form on the
// full space (sector leakage O(J0^2/B)).
struct ResourceParams {
    int n_sites = 8;
    double j0 = 1.0;
    double alpha = 1.34;
    double b_field = 10.0;
    ResourceMode mode = ResourceMode::ideal_xy;

    // hardware-reported coupling ranges: 1.34 at 8 ions, 0.98 at 20 ions,
    // interpolated linearly in between
    static double default_alpha(int n) {
        if (n <= 8) return 1.34;
        if (n >= 20) return 0.98;
        return 1.34 + (n - 8) * (0.98 - 1.34) / 12.0;
    }

    double coupling(int i, int j) const {
        if (i == j) throw std::invalid_argument("ResourceParams: i == j");
        return j0 / std::pow(std::abs(i - j), alpha);
    }

    void validate() const {
        if (n_sites < 2) throw std::invalid_argument("ResourceParams: n_sites < 2");
        if (j0 <= 0) throw std::invalid_argument("ResourceParams: j0 must be > 0");
        if (alpha <= 0 || alpha >= 3) throw std::invalid_argument("ResourceParams: alpha must be in (0,3)");
    }
};

inline PauliSum xy_resource_hamiltonian(const ResourceParams& r) {
    r.validate();
    PauliSum H(r.n_sites);
    for (int i = 1; i <= r.n_sites; ++i) {
        for (int j = i + 1; j <= r.n_sites; ++j) {
            const double half = 0.5 * r.coupling(i, j);
            H.add(PauliString(r.n_sites).with_op(i, 'X').with_op(j, 'X'), half);
            H.add(PauliString(r.n_sites).with_op(i, 'Y').with_op(j, 'Y'), half);
        }
        H.add(PauliString::single(r.n_sites, i, 'Z'), r.b_field);
    }
    return H;
}

inline PauliSum native_ising_hamiltonian(const ResourceParams& r) {
    r.validate();
    PauliSum H(r.n_sites);
    for (int i = 1; i <= r.n_sites; ++i) {
        for (int j = i + 1; j <= r.n_sites; ++j)
            H.add(PauliString(r.n_sites).with_op(i, 'X').with_op(j, 'X'), r.coupling(i, j));
        H.add(PauliString::single(r.n_sites, i, 'Z'), r.b_field);
    }
    return H;
}

namespace detail {

// Shared sector-restricted XY generators; the N=20 matrix is ~200 MB and
// takes seconds to assemble, so it is built once per parameter set.
inline std::shared_ptr<const SectorMatrix> xy_sector_matrix(const ResourceParams& r, int n_up) {
    static std::mutex mtx;
    static std::map<std::string, std::shared_ptr<const SectorMatrix>> cache;
    std::ostringstream key;
    key << r.n_sites << ':' << n_up << ':' << r.j0 << ':' << r.alpha << ':' << r.b_field;
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[key.str()];
    if (!slot)
        slot = std::make_shared<const SectorMatrix>(
            SectorMatrix::build(xy_resource_hamiltonian(r), SectorBasis::get(r.n_sites, n_up)));
    return slot;
}

// Matrix-free full-space Ising + field matvec.
struct FullIsingOp {
    const ResourceParams* r;

    void operator()(const Eigen::Ref<const Eigen::VectorXcd>& x, Eigen::VectorXcd& y) const {
        const int n = r->n_sites;
        const std::size_t dim = std::size_t(1) << n;
        y.setZero();
        for (std::size_t b = 0; b < dim; ++b) {
            const int mz = 2 * std::popcount(static_cast<std::uint32_t>(b)) - n;
            y[static_cast<Eigen::Index>(b)] += r->b_field * mz * x[static_cast<Eigen::Index>(b)];
        }
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j) {
                const double jij = r->coupling(i, j);
                const std::uint32_t flip = (1u << (i - 1)) | (1u << (j - 1));
                for (std::size_t b = 0; b < dim; ++b)
                    y[static_cast<Eigen::Index>(b ^ flip)] += jij * x[static_cast<Eigen::Index>(b)];
            }
    }
};

} // namespace detail

// Signed tie system for one local-rotation layer: CP linking imposes
// theta_j = -theta_{N+1-j}, bulk ties impose theta_j = theta_{j+2} inside the
// bulk interval. A site whose constraints force theta = -theta is pinned to 0.
struct LocalPattern {
    int n_free = 0;
    std::vector<int> param_of_site;   // per site, free-parameter index or -1 (pinned 0)
    std::vector<double> sign_of_site;

    std::vector<double> expand(const double* free_params) const {
        std::vector<double> angles(param_of_site.size(), 0.0);
        for (std::size_t s = 0; s < param_of_site.size(); ++s)
            if (param_of_site[s] >= 0) angles[s] = sign_of_site[s] * free_params[param_of_site[s]];
        return angles;
    }
};

// Symmetry-protected layered ansatz: alternating entangling / local layers,
// entangling first. Layer count includes both kinds.
struct AnsatzSpec {
    int n_sites = 8;
    int n_layers = 4;
    std::optional<std::pair<int, int>> bulk; // inclusive 1-based interval
    bool cp_link = true;
    bool bulk_tie = true;
    double ent_lo = 0.0;
    double ent_hi = M_PI; // one J0-cycle of the entangling dynamics

    void validate() const {
        if (n_sites < 2 || n_sites % 2 != 0)
            throw std::invalid_argument("AnsatzSpec: n_sites must be even and >= 2");
        if (n_layers < 1) throw std::invalid_argument("AnsatzSpec: n_layers must be >= 1");
        if (bulk && (bulk->first < 1 || bulk->second > n_sites || bulk->first > bulk->second))
            throw std::invalid_argument("AnsatzSpec: bad bulk interval");
        if (!(ent_lo < ent_hi)) throw std::invalid_argument("AnsatzSpec: bad entangling bounds");
    }

    int n_entangling_layers() const { return (n_layers + 1) / 2; }
    int n_local_layers() const { return n_layers / 2; }

    LocalPattern local_pattern() const {
        validate();
        const int n = n_sites;
        std::vector<int> parent(n);
        std::vector<double> sgn(n, 1.0); // sign relative to parent
        std::vector<bool> zero_root(n, false);
        for (int i = 0; i < n; ++i) parent[i] = i;

        std::function<std::pair<int, double>(int)> find = [&](int i) -> std::pair<int, double> {
            if (parent[i] == i) return {i, 1.0};
            auto [root, s] = find(parent[i]);
            parent[i] = root;
            sgn[i] *= s;
            return {root, sgn[i]};
        };
        auto unite = [&](int a, int b, double rel) { // theta_a = rel * theta_b
            auto [ra, sa] = find(a);
            auto [rb, sb] = find(b);
            if (ra == rb) {
                if (sa != rel * sb) zero_root[ra] = true;
                return;
            }
            // attach rb under ra: theta_b = sgn... solve sign of rb:
            // theta_a = sa*theta_ra, theta_b = sb*theta_rb, theta_a = rel*theta_b
            // => theta_rb = (sa / (rel*sb)) * theta_ra
            parent[rb] = ra;
            sgn[rb] = sa / (rel * sb);
            if (zero_root[rb]) zero_root[ra] = true;
        };

        if (cp_link)
            for (int j = 1; j <= n / 2; ++j) unite(j - 1, n - j, -1.0);
        if (bulk && bulk_tie)
            for (int j = bulk->first; j + 2 <= bulk->second; ++j) unite(j - 1, j + 1, 1.0);

        LocalPattern pat;
        pat.param_of_site.assign(n, -1);
        pat.sign_of_site.assign(n, 0.0);
        std::map<int, int> index_of_root;
        std::vector<double> root_ref_sign;
        for (int i = 0; i < n; ++i) {
            auto [root, s] = find(i);
            if (zero_root[root]) continue;
            auto it = index_of_root.find(root);
            if (it == index_of_root.end()) {
                it = index_of_root.emplace(root, pat.n_free++).first;
                root_ref_sign.push_back(s); // first site of the class carries +theta
            }
            pat.param_of_site[i] = it->second;
            pat.sign_of_site[i] = s * root_ref_sign[it->second];
        }
        return pat;
    }

    int params_per_local_layer() const { return local_pattern().n_free; }

    int n_params() const {
        return n_entangling_layers() + n_local_layers() * params_per_local_layer();
    }

    struct Dimension {
        bool entangling;
        double lo, hi;
        bool periodic;
    };

    // optimizer-facing search domain, one entry per free parameter
    std::vector<Dimension> dimensions() const {
        std::vector<Dimension> dims;
        const int per_local = params_per_local_layer();
        for (int l = 1; l <= n_layers; ++l) {
            if (l % 2 == 1) {
                dims.push_back({true, ent_lo, ent_hi, false});
            } else {
                for (int p = 0; p < per_local; ++p) dims.push_back({false, 0.0, 2.0 * M_PI, true});
            }
        }
        return dims;
    }
};

// Variational parameter vector in ansatz order (entangling angle, then the
// free local angles of the following layer, repeated).
struct ParamPoint {
    Eigen::VectorXd theta;
};

inline StateVector apply_local_layer(const StateVector& s, const std::vector<double>& angles) {
    if (static_cast<int>(angles.size()) != s.n_sites)
        throw std::invalid_argument("apply_local_layer: angle count != n_sites");
    StateVector out = s;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        const std::uint32_t bits = s.bits_of(i);
        double phase = 0.0;
        for (int j = 0; j < s.n_sites; ++j)
            phase += (bits & (1u << j)) ? -angles[j] : angles[j];
        out.amp[static_cast<Eigen::Index>(i)] *= std::polar(1.0, 0.5 * phase);
    }
    return out;
}

inline StateVector apply_entangling(const StateVector& s, double theta, const ResourceParams& r,
                                    double lo = 0.0, double hi = M_PI) {
    if (theta < lo - 1e-12 || theta > hi + 1e-12)
        throw std::invalid_argument("apply_entangling: theta out of bounds");
    if (std::abs(s.norm() - 1.0) > 1e-8) throw std::invalid_argument("apply_entangling: unnormalized state");
    StateVector out = s;
    if (r.mode == ResourceMode::ideal_xy) {
        if (!s.sector) throw std::invalid_argument("apply_entangling: ideal_xy needs a sector state");
        auto H = detail::xy_sector_matrix(r, s.sector->n_up());
        out.amp = expm_apply([&](const Eigen::Ref<const Eigen::VectorXcd>& x, Eigen::VectorXcd& y) { H->apply(x, y); },
                             theta, s.amp);
    } else {
        StateVector full = to_full(s);
        detail::FullIsingOp op{&r};
        full.amp = expm_apply(op, theta, full.amp);
        out = std::move(full);
    }
    return out;
}

// |Psi(theta)> = U_L ... U_1 |init>, alternating entangling and local layers.
inline StateVector prepare_trial_state(const AnsatzSpec& spec, const ParamPoint& p, const ResourceParams& r,
                                       const StateVector& init) {
    spec.validate();
    if (init.n_sites != spec.n_sites || r.n_sites != spec.n_sites)
        throw std::invalid_argument("prepare_trial_state: size mismatch");
    if (p.theta.size() != spec.n_params())
        throw std::invalid_argument("prepare_trial_state: parameter-count mismatch");
    const LocalPattern pat = spec.local_pattern();
    StateVector s = init;
    int offset = 0;
    for (int l = 1; l <= spec.n_layers; ++l) {
        if (l % 2 == 1) {
            s = apply_entangling(s, p.theta[offset], r, spec.ent_lo, spec.ent_hi);
            offset += 1;
        } else {
            s = apply_local_layer(s, pat.expand(p.theta.data() + offset));
            offset += pat.n_free;
        }
    }
    return s;
}

// Imperfect Neel preparation: with probability 1 - fidelity the loaded string
// has one up and one down spin swapped, uniformly at random (magnetization
// preserved). Defaults follow the reported per-N preparation fidelities.
struct InitErrorChannel {
    bool enabled = false;
    double fidelity = 1.0;

    static double default_fidelity(int n) {
        if (n <= 8) return 0.98;
        if (n >= 20) return 0.91;
        return 0.98 + (n - 8) * (0.91 - 0.98) / 12.0;
    }

    std::uint32_t draw(std::uint32_t ideal_bits, int n, std::mt19937_64& rng) const {
        if (!enabled) return ideal_bits;
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        if (uni(rng) < fidelity) return ideal_bits;
        std::vector<int> ups, downs;
        for (int j = 0; j < n; ++j)
            ((ideal_bits >> j) & 1u ? ups : downs).push_back(j);
        if (ups.empty() || downs.empty()) return ideal_bits;
        std::uniform_int_distribution<std::size_t> pick_up(0, ups.size() - 1), pick_down(0, downs.size() - 1);
        return ideal_bits ^ (1u << ups[pick_up(rng)]) ^ (1u << downs[pick_down(rng)]);
    }
};

} // namespace vqs
