#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqs/measure.hpp"

namespace vqs {

// Canonical key for a parameter vector: components rounded to 1e-9 before
// formatting, so re-visited points hash identically across float formatting
// drift.
inline std::string theta_key(const Eigen::VectorXd& theta) {
    std::string key;
    char buf[32];
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9f", theta[i] + 0.0); // normalize -0
        if (i) key += ',';
        key += buf;
    }
    return key;
}

// Append-only store of shot batches keyed by (canonical theta, basis tag).
// Records are never mutated; re-queries return supersets over time. Batches
// always hold raw outcomes; post-selection happens at estimation time.
class CdrStore {
public:
    void store(ShotBatch batch) {
        const std::string key = theta_key(batch.theta);
        if (!index_.count(key)) {
            index_.emplace(key, thetas_.size());
            thetas_.push_back(batch.theta);
        }
        if (persist_.is_open()) write_record(batch);
        data_[{key, batch.basis_tag}].push_back(std::move(batch));
    }

    std::vector<const ShotBatch*> query(const Eigen::VectorXd& theta, const std::string& tag) const {
        return query_key(theta_key(theta), tag);
    }

    std::vector<const ShotBatch*> query_key(const std::string& key, const std::string& tag) const {
        std::vector<const ShotBatch*> out;
        auto it = data_.find({key, tag});
        if (it != data_.end())
            for (const auto& b : it->second) out.push_back(&b);
        return out;
    }

    long shots_at(const Eigen::VectorXd& theta, const std::string& tag) const {
        long n = 0;
        for (const ShotBatch* b : query(theta, tag)) n += b->shots();
        return n;
    }

    // all distinct theta vectors, in first-seen order
    const std::vector<Eigen::VectorXd>& thetas() const { return thetas_; }

    std::size_t batch_count() const {
        std::size_t n = 0;
        for (const auto& [k, v] : data_) n += v.size();
        return n;
    }

    // Attach a JSONL file; every subsequent store() appends one record.
    void open_persist(const std::string& path) {
        persist_.open(path, std::ios::app);
        if (!persist_) throw std::runtime_error("CdrStore: cannot open " + path);
        persist_path_ = path;
    }

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("CdrStore: cannot open " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            ShotBatch b;
            b.theta = Eigen::VectorXd(j.at("theta").size());
            for (std::size_t i = 0; i < j.at("theta").size(); ++i) b.theta[static_cast<Eigen::Index>(i)] = j.at("theta")[i];
            b.basis_tag = j.at("basis").get<std::string>();
            b.seed = j.at("seed").get<std::uint64_t>();
            const auto& bits = j.at("bits");
            b.bits.reserve(bits.size());
            for (const auto& row : bits) {
                std::uint32_t v = 0;
                for (std::size_t i = 0; i < row.size(); ++i)
                    if (row[i].get<int>()) v |= 1u << i;
                b.bits.push_back(v);
                b.n_sites = static_cast<int>(row.size());
            }
            b.raw_shots = j.at("shots").get<long>();
            b.axes = axes_from_tag(b.basis_tag, b.n_sites);
            store(std::move(b));
        }
    }

    static std::string axes_from_tag(const std::string& tag, int n) {
        if (tag == "allX") return std::string(n, 'x');
        if (tag == "allY") return std::string(n, 'y');
        if (tag == "allZ") return std::string(n, 'z');
        if (tag.rfind("ax:", 0) == 0) return tag.substr(3);
        const auto at = tag.find('@');
        if (at != std::string::npos) {
            const int j = std::stoi(tag.substr(at + 1));
            const std::string kind = tag.substr(0, at);
            std::string axes;
            if (kind == "varXZ") axes.assign(n, 'z');
            else if (kind == "varYZ") axes.assign(n, 'z');
            else if (kind == "varXY") axes.assign(n, 'y');
            else throw std::invalid_argument("CdrStore: unknown basis tag " + tag);
            axes[j - 1] = axes[j] = (kind == "varYZ") ? 'y' : 'x';
            return axes;
        }
        throw std::invalid_argument("CdrStore: unknown basis tag " + tag);
    }

private:
    void write_record(const ShotBatch& b) {
        nlohmann::json j;
        j["theta"] = std::vector<double>(b.theta.data(), b.theta.data() + b.theta.size());
        j["basis"] = b.basis_tag;
        j["seed"] = b.seed;
        j["shots"] = b.shots();
        std::vector<std::vector<int>> rows;
        rows.reserve(b.bits.size());
        for (const std::uint32_t v : b.bits) {
            std::vector<int> row(b.n_sites);
            for (int i = 0; i < b.n_sites; ++i) row[i] = (v >> i) & 1;
            rows.push_back(std::move(row));
        }
        j["bits"] = rows;
        persist_ << j.dump() << '\n';
        persist_.flush();
    }

    std::map<std::pair<std::string, std::string>, std::vector<ShotBatch>> data_;
    std::map<std::string, std::size_t> index_;
    std::vector<Eigen::VectorXd> thetas_;
    std::ofstream persist_;
    std::string persist_path_;
};

// Collect the batches needed by `tags` at theta, optionally post-selecting
// z-basis data on zero magnetization. Filtered copies live in `storage`.
inline BatchMap collect_batches(const CdrStore& cdr, const Eigen::VectorXd& theta,
                                const std::vector<std::string>& tags, bool post_select,
                                std::vector<ShotBatch>& storage) {
    BatchMap out;
    for (const auto& tag : tags) {
        auto batches = cdr.query(theta, tag);
        if (batches.empty()) continue;
        const bool zfilter = post_select && MeasurementBasis{tag, batches.front()->axes}.all_z();
        if (!zfilter) {
            out[tag] = std::move(batches);
        } else {
            for (const ShotBatch* b : batches) {
                auto [kept, fraction] = post_select_zero_mag(*b);
                (void)fraction;
                if (kept.shots() > 0) {
                    storage.push_back(std::move(kept));
                }
            }
        }
    }
    // storage may reallocate while filling; wire up pointers afterwards
    for (const auto& b : storage) out[b.basis_tag].push_back(&b);
    return out;
}

struct EnergyEstimatorOptions {
    bool post_select = false;
    ErrorModel error_model = ErrorModel::basis_grouped;
};

// <H_T> from the 3 energy bases stored at theta.
inline EstimatorResult estimate_energy(const CdrStore& cdr, const Eigen::VectorXd& theta, const PauliSum& H,
                                       const EnergyEstimatorOptions& opt = {}) {
    SumEstimator est(H, energy_bases(H.n_sites()));
    std::vector<ShotBatch> storage;
    const BatchMap data = collect_batches(cdr, theta, est.required_tags(), opt.post_select, storage);
    return est.estimate(data, opt.error_model);
}

// Algorithmic error bar at theta from the 3N variance bases stored there.
inline VarianceEstimate estimate_variance(const CdrStore& cdr, const Eigen::VectorXd& theta, const PauliSum& H,
                                          double energy_ref, const EnergyEstimatorOptions& opt = {}) {
    VarianceEstimator est(H, variance_bases(H.n_sites()));
    std::vector<std::string> tags;
    for (const auto& b : variance_bases(H.n_sites())) tags.push_back(b.tag);
    std::vector<ShotBatch> storage;
    const BatchMap data = collect_batches(cdr, theta, tags, opt.post_select, storage);
    return est.estimate(data, energy_ref, opt.error_model);
}

// Energy estimates for every stored theta under a (possibly new) Hamiltonian.
// Bases depend only on N, so any SchwingerParams change stays measurable.
inline std::vector<std::pair<Eigen::VectorXd, EstimatorResult>> reevaluate(
    const CdrStore& cdr, const PauliSum& H_new, const EnergyEstimatorOptions& opt = {}) {
    std::vector<std::pair<Eigen::VectorXd, EstimatorResult>> out;
    for (const auto& theta : cdr.thetas()) {
        try {
            out.emplace_back(theta, estimate_energy(cdr, theta, H_new, opt));
        } catch (const MissingBasesError&) {
            // theta seen only in non-energy bases; skip
        }
    }
    return out;
}

} // namespace vqs
