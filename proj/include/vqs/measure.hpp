#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqs/pauli.hpp"
#include "vqs/rng.hpp"
#include "vqs/state.hpp"

namespace vqs {

// Product measurement basis: one axis per site. A Pauli string is evaluable
// in a basis iff every non-identity site matches the basis axis there.
struct MeasurementBasis {
    std::string tag;
    std::string axes; // length n_sites, chars 'x','y','z'

    int n_sites() const { return static_cast<int>(axes.size()); }

    bool evaluates(const PauliString& p) const {
        if (p.n_sites() != n_sites()) return false;
        for (int j = 1; j <= p.n_sites(); ++j) {
            const char op = p.op_at(j);
            if (op == 'I') continue;
            const char ax = axes[j - 1];
            if ((op == 'X' && ax != 'x') || (op == 'Y' && ax != 'y') || (op == 'Z' && ax != 'z'))
                return false;
        }
        return true;
    }

    bool all_z() const { return axes.find_first_not_of('z') == std::string::npos; }

    // sign of the z-readout estimator for p in this basis: the y-axis
    // rotation exp(i pi sigma^x / 4) maps the z readout onto -Y, so every
    // y-site in the support flips the sign
    double readout_sign(const PauliString& p) const {
        int ys = 0;
        for (int j = 1; j <= p.n_sites(); ++j)
            if (p.op_at(j) != 'I' && axes[j - 1] == 'y') ++ys;
        return (ys % 2) ? -1.0 : 1.0;
    }
};

inline MeasurementBasis uniform_basis(int n, char axis, const std::string& tag) {
    return {tag, std::string(static_cast<std::size_t>(n), axis)};
}

// The 3 bases evaluating <H_T>: all-x, all-y, all-z.
inline std::vector<MeasurementBasis> energy_bases(int n) {
    if (n < 2) throw std::invalid_argument("energy_bases: n < 2");
    return {uniform_basis(n, 'x', "allX"), uniform_basis(n, 'y', "allY"), uniform_basis(n, 'z', "allZ")};
}

// The 3N bases evaluating <H_T^2>: the energy bases plus, for each bond j,
// x/x at {j,j+1} with z elsewhere, y/y at {j,j+1} with z elsewhere, and
// x/x at {j,j+1} with y elsewhere.
inline std::vector<MeasurementBasis> variance_bases(int n) {
    auto bases = energy_bases(n);
    for (int j = 1; j < n; ++j) {
        MeasurementBasis xz = uniform_basis(n, 'z', "varXZ@" + std::to_string(j));
        xz.axes[j - 1] = xz.axes[j] = 'x';
        MeasurementBasis yz = uniform_basis(n, 'z', "varYZ@" + std::to_string(j));
        yz.axes[j - 1] = yz.axes[j] = 'y';
        MeasurementBasis xy = uniform_basis(n, 'y', "varXY@" + std::to_string(j));
        xy.axes[j - 1] = xy.axes[j] = 'x';
        bases.push_back(std::move(xz));
        bases.push_back(std::move(yz));
        bases.push_back(std::move(xy));
    }
    return bases;
}

// Reduced scheme valid under perfect magnetization symmetry (<L_X> = <L_Y>):
// 2 bases for the energy, 2N for the variance.
inline std::vector<MeasurementBasis> reduced_energy_bases(int n) {
    return {uniform_basis(n, 'x', "allX"), uniform_basis(n, 'z', "allZ")};
}

inline std::vector<MeasurementBasis> reduced_variance_bases(int n) {
    auto bases = reduced_energy_bases(n);
    bases.push_back(uniform_basis(n, 'y', "allY"));
    for (int j = 1; j < n; ++j) {
        MeasurementBasis xz = uniform_basis(n, 'z', "varXZ@" + std::to_string(j));
        xz.axes[j - 1] = xz.axes[j] = 'x';
        MeasurementBasis xy = uniform_basis(n, 'y', "varXY@" + std::to_string(j));
        xy.axes[j - 1] = xy.axes[j] = 'x';
        bases.push_back(std::move(xz));
        bases.push_back(std::move(xy));
    }
    return bases;
}

// Basis rotation prior to z detection: exp(i pi sigma^y/4) on x-sites,
// exp(i pi sigma^x/4) on y-sites, identity on z-sites.
inline StateVector rotate_to_basis(const StateVector& s, const MeasurementBasis& basis) {
    if (basis.n_sites() != s.n_sites) throw std::invalid_argument("rotate_to_basis: size mismatch");
    if (basis.all_z()) return s;
    StateVector out = to_full(s);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < s.n_sites; ++j) {
        const char ax = basis.axes[j];
        if (ax == 'z') continue;
        const std::uint32_t bit = 1u << j;
        const std::size_t dim = out.dim();
        for (std::size_t b = 0; b < dim; ++b) {
            if (b & bit) continue;
            const Eigen::Index down = static_cast<Eigen::Index>(b);
            const Eigen::Index up = static_cast<Eigen::Index>(b | bit);
            const cplx au = out.amp[up], ad = out.amp[down];
            if (ax == 'x') { // exp(i pi sigma^y/4): rows [1 1; -1 1]/sqrt2
                out.amp[up] = (au + ad) * inv_sqrt2;
                out.amp[down] = (-au + ad) * inv_sqrt2;
            } else { // exp(i pi sigma^x/4): rows [1 i; i 1]/sqrt2
                out.amp[up] = (au + cplx(0, 1) * ad) * inv_sqrt2;
                out.amp[down] = (cplx(0, 1) * au + ad) * inv_sqrt2;
            }
        }
    }
    return out;
}

// One batch of projective measurements: the CDR storage unit.
struct ShotBatch {
    int n_sites = 0;
    Eigen::VectorXd theta;  // variational parameters the state was prepared at
    std::string basis_tag;
    std::string axes;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> bits;
    long raw_shots = 0; // pre-post-selection count; equals bits.size() if unfiltered

    long shots() const { return static_cast<long>(bits.size()); }
};

// i.i.d. samples from the Born distribution after rotating into `basis`.
inline ShotBatch sample(const StateVector& s, const MeasurementBasis& basis, long shots, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("sample: shots must be >= 1");
    const StateVector rotated = rotate_to_basis(s, basis);
    std::vector<double> cdf(rotated.dim());
    double acc = 0.0;
    for (std::size_t i = 0; i < rotated.dim(); ++i) {
        acc += std::norm(rotated.amp[static_cast<Eigen::Index>(i)]);
        cdf[i] = acc;
    }
    ShotBatch batch;
    batch.n_sites = s.n_sites;
    batch.basis_tag = basis.tag;
    batch.axes = basis.axes;
    batch.seed = seed;
    batch.bits.reserve(static_cast<std::size_t>(shots));
    batch.raw_shots = shots;
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> uni(0.0, acc);
    for (long t = 0; t < shots; ++t) {
        const double u = uni(rng);
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
        batch.bits.push_back(rotated.bits_of(std::min(idx, rotated.dim() - 1)));
    }
    return batch;
}

// Zero-magnetization post-selection; z-basis data only.
inline std::pair<ShotBatch, double> post_select_zero_mag(const ShotBatch& batch) {
    MeasurementBasis b{batch.basis_tag, batch.axes};
    if (!b.all_z()) throw std::invalid_argument("post_select_zero_mag: batch is not z-basis");
    ShotBatch out = batch;
    out.bits.clear();
    for (const std::uint32_t bits : batch.bits)
        if (2 * std::popcount(bits) == batch.n_sites) out.bits.push_back(bits);
    const double fraction = batch.bits.empty() ? 0.0 : double(out.bits.size()) / double(batch.bits.size());
    out.raw_shots = batch.raw_shots;
    return {out, fraction};
}

namespace detail {

inline double term_outcome(const PauliString& p, std::uint32_t bits, double sign) {
    const int ones = std::popcount(p.support() & bits);
    const int minus = p.weight() - ones;
    return (minus % 2) ? -sign : sign;
}

} // namespace detail

// Sample mean and population shot variance of a single Pauli string over
// pooled batches. With a single shot the variance is 0 by definition and no
// spread information exists; callers wanting error bars need >= 2 shots.
inline std::pair<double, double> estimate_term(const std::vector<const ShotBatch*>& records,
                                               const PauliString& gamma) {
    long total = 0;
    double sum = 0.0;
    for (const ShotBatch* b : records) {
        MeasurementBasis basis{b->basis_tag, b->axes};
        if (!basis.evaluates(gamma)) throw std::invalid_argument("estimate_term: incompatible basis " + b->basis_tag);
        const double sign = basis.readout_sign(gamma);
        for (const std::uint32_t bits : b->bits) sum += detail::term_outcome(gamma, bits, sign);
        total += b->shots();
    }
    if (total == 0) throw std::invalid_argument("estimate_term: no shots");
    const double mean = sum / static_cast<double>(total);
    double var = 0.0;
    for (const ShotBatch* b : records) {
        const double sign = MeasurementBasis{b->basis_tag, b->axes}.readout_sign(gamma);
        for (const std::uint32_t bits : b->bits) {
            const double d = detail::term_outcome(gamma, bits, sign) - mean;
            var += d * d;
        }
    }
    return {mean, var / static_cast<double>(total)};
}

struct EstimatorResult {
    double value = 0.0;
    double std_error = 0.0;
    std::map<std::string, long> shots_used;
    double post_selected_fraction = 1.0;
};

// How the statistical error of a weighted sum of term estimates is formed:
//   basis_grouped  - exact standard error of the per-basis partial sums
//                    (accounts for covariance of terms sharing shots)
//   weighted_terms - sqrt(sum_q h_q^2 Var_q / s_q), terms treated independent
//   paper_printed  - sqrt(sum_q h_q Var_q), kept for comparability
enum class ErrorModel { basis_grouped, weighted_terms, paper_printed };

using BatchMap = std::map<std::string, std::vector<const ShotBatch*>>;

struct MissingBasesError : std::runtime_error {
    std::vector<std::string> missing;
    explicit MissingBasesError(std::vector<std::string> tags)
        : std::runtime_error("incomplete data; missing bases: " + join(tags)), missing(std::move(tags)) {}
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& t : v) s += (s.empty() ? "" : ", ") + t;
        return s;
    }
};

// Estimator for <O> = scalar + sum_q h_q <Gamma_q> from shot records.
// Every string is assigned to the first basis in the plan that evaluates it,
// so parallel correlators reuse the all-x/all-y/all-z energy data.
class SumEstimator {
public:
    SumEstimator(const PauliSum& O, std::vector<MeasurementBasis> plan) : plan_(std::move(plan)) {
        O.require_hermitian();
        scalar_ = O.scalar().real();
        std::vector<PauliString> uncovered;
        for (const auto& [p, c] : O.sorted_terms()) {
            if (p.is_identity()) continue;
            bool placed = false;
            for (std::size_t b = 0; b < plan_.size(); ++b) {
                if (plan_[b].evaluates(p)) {
                    assigned_[plan_[b].tag].emplace_back(p, c.real() * plan_[b].readout_sign(p));
                    placed = true;
                    break;
                }
            }
            if (!placed) uncovered.push_back(p);
        }
        if (!uncovered.empty()) {
            std::string names;
            for (const auto& p : uncovered) names += (names.empty() ? "" : ", ") + p.str();
            throw std::runtime_error("SumEstimator: strings not evaluable in plan: " + names);
        }
    }

    const std::vector<MeasurementBasis>& plan() const { return plan_; }

    std::vector<std::string> required_tags() const {
        std::vector<std::string> tags;
        for (const auto& [tag, terms] : assigned_) tags.push_back(tag);
        return tags;
    }

    EstimatorResult estimate(const BatchMap& data, ErrorModel model = ErrorModel::basis_grouped) const {
        std::vector<std::string> missing;
        for (const auto& [tag, terms] : assigned_) {
            auto it = data.find(tag);
            if (it == data.end() || it->second.empty()) missing.push_back(tag);
        }
        if (!missing.empty()) throw MissingBasesError(std::move(missing));

        EstimatorResult out;
        out.value = scalar_;
        double var_acc = 0.0;
        long raw_total = 0, kept_total = 0;
        for (const auto& [tag, terms] : assigned_) {
            const auto& batches = data.at(tag);
            long shots = 0;
            for (const ShotBatch* b : batches) {
                shots += b->shots();
                raw_total += b->raw_shots;
                kept_total += b->shots();
            }
            if (shots == 0) throw MissingBasesError({tag});
            out.shots_used[tag] = shots;

            if (model == ErrorModel::basis_grouped) {
                double mean = 0.0, m2 = 0.0;
                long count = 0;
                for (const ShotBatch* b : batches)
                    for (const std::uint32_t bits : b->bits) {
                        double v = 0.0;
                        for (const auto& [p, h] : terms) v += h * detail::term_outcome(p, bits, 1.0);
                        ++count;
                        const double d = v - mean;
                        mean += d / static_cast<double>(count);
                        m2 += d * (v - mean);
                    }
                out.value += mean;
                var_acc += (m2 / static_cast<double>(count)) / static_cast<double>(count);
            } else {
                for (const auto& [p, h] : terms) {
                    double mean = 0.0, m2 = 0.0;
                    long count = 0;
                    for (const ShotBatch* b : batches)
                        for (const std::uint32_t bits : b->bits) {
                            const double v = detail::term_outcome(p, bits, 1.0);
                            ++count;
                            const double d = v - mean;
                            mean += d / static_cast<double>(count);
                            m2 += d * (v - mean);
                        }
                    const double var = m2 / static_cast<double>(count);
                    out.value += h * mean;
                    var_acc += (model == ErrorModel::weighted_terms) ? h * h * var / static_cast<double>(count)
                                                                     : h * var;
                }
            }
        }
        out.std_error = std::sqrt(std::max(var_acc, 0.0));
        out.post_selected_fraction = raw_total > 0 ? double(kept_total) / double(raw_total) : 1.0;
        return out;
    }

private:
    double scalar_ = 0.0;
    std::vector<MeasurementBasis> plan_;
    std::map<std::string, std::vector<std::pair<PauliString, double>>> assigned_;
};

// Strings of O with no evaluating basis in the plan (coverage diagnostics).
inline std::vector<PauliString> uncovered_strings(const PauliSum& O, const std::vector<MeasurementBasis>& plan) {
    std::vector<PauliString> missing;
    for (const auto& [p, c] : O.sorted_terms()) {
        if (p.is_identity()) continue;
        bool ok = false;
        for (const auto& b : plan)
            if (b.evaluates(p)) {
                ok = true;
                break;
            }
        if (!ok) missing.push_back(p);
    }
    return missing;
}

struct VarianceEstimate {
    EstimatorResult e2;        // estimate of <(H - E)^2> with its statistical error
    double error_bar = 0.0;    // algorithmic error bar: sqrt(max(e2, 0))
    double error_bar_sigma = 0.0;
    bool inconsistent = false; // e2 < -3 sigma: shots contradict positivity
};

// Assembles the algorithmic error bar from the 3N-basis shot data. E is the
// fixed energy reference; the estimator stays linear in the term averages.
class VarianceEstimator {
public:
    VarianceEstimator(const PauliSum& H, std::vector<MeasurementBasis> plan)
        : H_(H), H2_(sum_multiply(H, H)), plan_(std::move(plan)) {}

    const PauliSum& h_squared() const { return H2_; }

    VarianceEstimate estimate(const BatchMap& data, double energy_ref,
                              ErrorModel model = ErrorModel::basis_grouped) const {
        PauliSum shifted = H2_;
        shifted += (-2.0 * energy_ref) * H_;
        shifted += PauliSum::identity(H_.n_sites(), energy_ref * energy_ref);
        SumEstimator est(shifted, plan_);
        VarianceEstimate out;
        out.e2 = est.estimate(data, model);
        out.error_bar = std::sqrt(std::max(out.e2.value, 0.0));
        // delta method away from zero, sqrt scale at zero
        const double sig2 = out.e2.std_error;
        out.error_bar_sigma = sig2 / (2.0 * std::max(out.error_bar, std::sqrt(std::max(sig2, 1e-300))));
        out.inconsistent = out.e2.value < -3.0 * sig2;
        return out;
    }

private:
    PauliSum H_, H2_;
    std::vector<MeasurementBasis> plan_;
};

} // namespace vqs
