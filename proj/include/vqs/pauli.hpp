#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace vqs {

using cplx = std::complex<double>;

// N-qubit Pauli string stored as an (X-part, Z-part) bitmask pair:
// site j (1-based) maps to bit j-1; per site I=(0,0), X=(1,0), Y=(1,1), Z=(0,1).
// Products and commutation parity are O(1) bit operations.
class PauliString {
public:
    static constexpr int max_sites = 30;

    explicit PauliString(int n_sites) : n_(n_sites) {
        if (n_sites < 1 || n_sites > max_sites)
            throw std::invalid_argument("PauliString: n_sites out of range");
    }

    static PauliString from_masks(int n_sites, std::uint32_t x, std::uint32_t z) {
        PauliString p(n_sites);
        const std::uint32_t fit = (n_sites == 32) ? ~0u : ((1u << n_sites) - 1u);
        if ((x | z) & ~fit) throw std::invalid_argument("PauliString: mask exceeds n_sites");
        p.x_ = x;
        p.z_ = z;
        return p;
    }

    // Single-site factory, e.g. single(4, 2, 'Y') = Y on site 2 of 4.
    static PauliString single(int n_sites, int site, char op) {
        return PauliString(n_sites).with_op(site, op);
    }

    PauliString with_op(int site, char op) const {
        if (site < 1 || site > n_) throw std::invalid_argument("PauliString: site out of range");
        PauliString p = *this;
        const std::uint32_t bit = 1u << (site - 1);
        p.x_ &= ~bit;
        p.z_ &= ~bit;
        switch (op) {
            case 'I': break;
            case 'X': p.x_ |= bit; break;
            case 'Y': p.x_ |= bit; p.z_ |= bit; break;
            case 'Z': p.z_ |= bit; break;
            default: throw std::invalid_argument("PauliString: op must be I/X/Y/Z");
        }
        return p;
    }

    // Parse the canonical text form, e.g. "X1 X2 Z5"; "I" is the identity.
    static PauliString parse(int n_sites, const std::string& text) {
        PauliString p(n_sites);
        std::istringstream in(text);
        std::string tok;
        while (in >> tok) {
            if (tok == "I") continue;
            if (tok.size() < 2) throw std::invalid_argument("PauliString: bad token '" + tok + "'");
            p = p.with_op(std::stoi(tok.substr(1)), tok[0]);
        }
        return p;
    }

    int n_sites() const { return n_; }
    std::uint32_t x_mask() const { return x_; }
    std::uint32_t z_mask() const { return z_; }
    bool is_identity() const { return x_ == 0 && z_ == 0; }
    std::uint32_t support() const { return x_ | z_; }
    int weight() const { return std::popcount(support()); }

    char op_at(int site) const {
        const std::uint32_t bit = 1u << (site - 1);
        const bool x = x_ & bit, z = z_ & bit;
        return x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
    }

    bool diagonal() const { return x_ == 0; }

    // Even number of anticommuting site pairs <=> strings commute.
    bool commutes_with(const PauliString& o) const {
        require_same_sites(o);
        const int par = std::popcount(x_ & o.z_) + std::popcount(z_ & o.x_);
        return (par % 2) == 0;
    }

    std::uint64_t key() const { return (std::uint64_t(x_) << 32) | z_; }

    bool operator==(const PauliString& o) const {
        return n_ == o.n_ && x_ == o.x_ && z_ == o.z_;
    }

    std::string str() const {
        if (is_identity()) return "I";
        std::string s;
        for (int j = 1; j <= n_; ++j) {
            const char op = op_at(j);
            if (op == 'I') continue;
            if (!s.empty()) s += ' ';
            s += op;
            s += std::to_string(j);
        }
        return s;
    }

    void require_same_sites(const PauliString& o) const {
        if (n_ != o.n_) throw std::invalid_argument("PauliString: size mismatch");
    }

private:
    int n_;
    std::uint32_t x_ = 0, z_ = 0;
};

struct PauliProduct {
    cplx phase;        // one of {+1, -1, +i, -i}
    PauliString string;
};

namespace detail {

// Exponent of i for single-site products, indexed [a][b] with I=0,X=1,Y=2,Z=3.
// Cyclic order XY=iZ, YZ=iX, ZX=iY; reversed pairs pick up -i.
inline constexpr int pauli_phase_exp[4][4] = {
    {0, 0, 0, 0},
    {0, 0, 1, 3},
    {0, 3, 0, 1},
    {0, 1, 3, 0},
};

} // namespace detail

inline PauliProduct multiply(const PauliString& a, const PauliString& b) {
    a.require_same_sites(b);
    int exp = 0;
    std::uint32_t both = (a.x_mask() | a.z_mask()) & (b.x_mask() | b.z_mask());
    while (both) {
        const std::uint32_t bit = both & (~both + 1u);
        both ^= bit;
        const int ca = ((a.x_mask() & bit) ? 1 : 0) | ((a.z_mask() & bit) ? 2 : 0);
        const int cb = ((b.x_mask() & bit) ? 1 : 0) | ((b.z_mask() & bit) ? 2 : 0);
        // remap (x,z) code -> I=0,X=1,Y=2,Z=3
        static constexpr int lut[4] = {0, 1, 3, 2};
        exp += detail::pauli_phase_exp[lut[ca]][lut[cb]];
    }
    static const cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return {ipow[exp % 4],
            PauliString::from_masks(a.n_sites(), a.x_mask() ^ b.x_mask(), a.z_mask() ^ b.z_mask())};
}

inline bool commutes(const PauliString& a, const PauliString& b) { return a.commutes_with(b); }

// Weighted sum of Pauli strings. Coefficients are stored complex so that
// intermediate products are exact; Hermitian sums are exactly the ones whose
// coefficients are all real, which is_hermitian() checks.
class PauliSum {
public:
    static constexpr double prune_threshold = 1e-12;

    explicit PauliSum(int n_sites) : n_(n_sites) {
        if (n_sites < 1 || n_sites > PauliString::max_sites)
            throw std::invalid_argument("PauliSum: n_sites out of range");
    }

    static PauliSum zero(int n_sites) { return PauliSum(n_sites); }

    static PauliSum identity(int n_sites, cplx coeff = 1.0) {
        PauliSum s(n_sites);
        s.add(PauliString(n_sites), coeff);
        return s;
    }

    static PauliSum term(const PauliString& p, cplx coeff = 1.0) {
        PauliSum s(p.n_sites());
        s.add(p, coeff);
        return s;
    }

    int n_sites() const { return n_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    void add(const PauliString& p, cplx coeff) {
        if (p.n_sites() != n_) throw std::invalid_argument("PauliSum: size mismatch");
        auto it = terms_.find(p.key());
        if (it == terms_.end()) {
            if (std::abs(coeff) > prune_threshold) terms_.emplace(p.key(), coeff);
        } else {
            it->second += coeff;
            if (std::abs(it->second) <= prune_threshold) terms_.erase(it);
        }
    }

    cplx coeff(const PauliString& p) const {
        auto it = terms_.find(p.key());
        return it == terms_.end() ? cplx(0.0) : it->second;
    }

    cplx scalar() const { return coeff(PauliString(n_)); }

    bool is_hermitian(double tol = 1e-10) const {
        for (const auto& [k, c] : terms_)
            if (std::abs(c.imag()) > tol) return false;
        return true;
    }

    void require_hermitian() const {
        if (!is_hermitian()) throw std::logic_error("PauliSum: non-real coefficient in Hermitian context");
    }

    // Terms in deterministic (mask-sorted) order; every consumer that folds
    // floating point sums iterates through this to keep runs reproducible.
    std::vector<std::pair<PauliString, cplx>> sorted_terms() const {
        std::vector<std::pair<std::uint64_t, cplx>> keys(terms_.begin(), terms_.end());
        std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::pair<PauliString, cplx>> out;
        out.reserve(keys.size());
        for (const auto& [k, c] : keys)
            out.emplace_back(PauliString::from_masks(n_, std::uint32_t(k >> 32), std::uint32_t(k & 0xffffffffu)), c);
        return out;
    }

    PauliSum& operator+=(const PauliSum& o) {
        if (o.n_ != n_) throw std::invalid_argument("PauliSum: size mismatch");
        for (const auto& [k, c] : o.terms_)
            add(PauliString::from_masks(n_, std::uint32_t(k >> 32), std::uint32_t(k & 0xffffffffu)), c);
        return *this;
    }

    PauliSum& operator*=(cplx s) {
        if (std::abs(s) <= prune_threshold) {
            terms_.clear();
            return *this;
        }
        for (auto& [k, c] : terms_) c *= s;
        return *this;
    }

    friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
    friend PauliSum operator*(PauliSum a, cplx s) { return a *= s; }
    friend PauliSum operator*(cplx s, PauliSum a) { return a *= s; }
    friend PauliSum operator-(PauliSum a, const PauliSum& b) {
        PauliSum nb = b;
        nb *= -1.0;
        return a += nb;
    }

    std::string str() const {
        std::ostringstream out;
        bool first = true;
        for (const auto& [p, c] : sorted_terms()) {
            if (!first) out << " + ";
            first = false;
            if (std::abs(c.imag()) > prune_threshold)
                out << "(" << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)";
            else
                out << c.real();
            out << "*" << p.str();
        }
        return first ? "0" : out.str();
    }

    const std::unordered_map<std::uint64_t, cplx>& raw_terms() const { return terms_; }

private:
    int n_;
    std::unordered_map<std::uint64_t, cplx> terms_;
};

// Fully expanded, simplified product A*B.
inline PauliSum sum_multiply(const PauliSum& A, const PauliSum& B) {
    if (A.n_sites() != B.n_sites()) throw std::invalid_argument("sum_multiply: size mismatch");
    PauliSum out(A.n_sites());
    const auto ta = A.sorted_terms();
    const auto tb = B.sorted_terms();
    for (const auto& [pa, ca] : ta)
        for (const auto& [pb, cb] : tb) {
            const PauliProduct pr = multiply(pa, pb);
            out.add(pr.string, ca * cb * pr.phase);
        }
    return out;
}

// {A, B} = AB + BA; pairs of anticommuting strings cancel exactly.
inline PauliSum anticommutator(const PauliSum& A, const PauliSum& B) {
    return sum_multiply(A, B) + sum_multiply(B, A);
}

} // namespace vqs
