#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vqs/ed.hpp"
#include "vqs/measure.hpp"
#include "vqs/schwinger.hpp"

using namespace vqs;

namespace {

StateVector random_sector_state(int n, int k, std::uint64_t seed) {
    auto s = sector_state(n, k);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < s.dim(); ++i) s.amp[static_cast<Eigen::Index>(i)] = cplx(g(rng), g(rng));
    s.amp.normalize();
    return s;
}

BatchMap wrap(const std::vector<ShotBatch>& batches) {
    BatchMap m;
    for (const auto& b : batches) m[b.basis_tag].push_back(&b);
    return m;
}

} // namespace

TEST_CASE("basis counts") {
    CHECK(energy_bases(8).size() == 3);
    CHECK(variance_bases(8).size() == 24);
    for (int n = 2; n <= 12; n += 2) CHECK(variance_bases(n).size() == static_cast<std::size_t>(3 * n));
    CHECK(reduced_variance_bases(8).size() == 16); // 2N under perfect symmetry
}

TEST_CASE("every H_T term is evaluable in an energy basis") {
    for (int n = 2; n <= 12; n += 2) {
        const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
        CHECK(uncovered_strings(build_hamiltonian(p), energy_bases(n)).empty());
        const auto lam = lambda_decompose(build_hamiltonian(p), p);
        CHECK(uncovered_strings(lam.lambda_z, {uniform_basis(n, 'z', "allZ")}).empty());
    }
}

TEST_CASE("3N-basis plan covers the full expansion of H_T^2") {
    for (int n = 2; n <= 8; n += 2) {
        const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
        const auto H = build_hamiltonian(p);
        CHECK(uncovered_strings(sum_multiply(H, H), variance_bases(n)).empty());
    }
    // a specific witness string: X3 X4 Z6 Z7 lives in the j=3 xz-basis
    const auto plan = variance_bases(8);
    const auto witness = PauliString::parse(8, "X3 X4 Z6 Z7");
    bool in_j3 = false;
    for (const auto& b : plan)
        if (b.tag == "varXZ@3") in_j3 = b.evaluates(witness);
    CHECK(in_j3);
}

TEST_CASE("rotations expose X and Y to the z readout") {
    // state with nonzero <X>, <Y>, <Z> on one site embedded in two qubits
    auto s = full_state(2);
    s.amp[0b00] = cplx(0.8, 0.1);
    s.amp[0b01] = cplx(0.35, -0.45);
    s.amp.normalize();
    const long shots = 400000;
    for (const char axis : {'x', 'y', 'z'}) {
        MeasurementBasis basis = uniform_basis(2, axis, std::string("all") + char(std::toupper(axis)));
        const auto batch = sample(s, basis, shots, 99);
        const PauliString op = PauliString::single(2, 1, static_cast<char>(std::toupper(axis)));
        const auto [mean, var] = estimate_term({&batch}, op);
        const double exact = exact_expectation(s, PauliSum::term(op));
        INFO(axis);
        CHECK(std::abs(mean - exact) < 4.0 * std::sqrt(std::max(var, 1e-12) / shots) + 1e-3);
    }
}

TEST_CASE("sampled two-site correlator matches the exact expectation") {
    const auto s = random_sector_state(4, 2, 8);
    const auto basis = uniform_basis(4, 'x', "allX");
    const auto batch = sample(s, basis, 200000, 5);
    const auto op = PauliString::parse(4, "X1 X2");
    const auto [mean, var] = estimate_term({&batch}, op);
    CHECK(std::abs(mean - exact_expectation(s, PauliSum::term(op))) < 4.0 * std::sqrt(var / 200000));
}

TEST_CASE("z-basis sampling of a Neel state is deterministic") {
    const auto s = neel_state(8);
    const auto batch = sample(s, uniform_basis(8, 'z', "allZ"), 50, 123);
    for (const auto bits : batch.bits) CHECK(bits == neel_bits(8, NeelPhase::vacuum));
    // identical seeds give identical batches
    const auto batch2 = sample(s, uniform_basis(8, 'z', "allZ"), 50, 123);
    CHECK(batch.bits == batch2.bits);
    const auto batch3 = sample(s, uniform_basis(8, 'x', "allX"), 50, 124);
    const auto batch4 = sample(s, uniform_basis(8, 'x', "allX"), 50, 124);
    CHECK(batch3.bits == batch4.bits);
}

TEST_CASE("post-selection keeps zero-magnetization outcomes") {
    ShotBatch b;
    b.n_sites = 4;
    b.basis_tag = "allZ";
    b.axes = "zzzz";
    b.raw_shots = 4;
    b.bits = {0b0101, 0b1111, 0b0011, 0b0001};
    const auto [kept, fraction] = post_select_zero_mag(b);
    CHECK(fraction == Catch::Approx(0.5));
    CHECK(kept.bits.size() == 2);
    ShotBatch bad = b;
    bad.axes = "xzzz";
    CHECK_THROWS_AS(post_select_zero_mag(bad), std::invalid_argument);

    // perfect sector state: fraction 1
    const auto zb = sample(neel_state(4), uniform_basis(4, 'z', "allZ"), 100, 3);
    CHECK(post_select_zero_mag(zb).second == Catch::Approx(1.0));
}

TEST_CASE("estimator: deterministic outcomes and single-shot variance") {
    const auto zb = sample(neel_state(4), uniform_basis(4, 'z', "allZ"), 100, 3);
    const auto [mean, var] = estimate_term({&zb}, PauliString::single(4, 1, 'Z'));
    CHECK(mean == Catch::Approx(1.0));
    CHECK(var == Catch::Approx(0.0));

    const auto one = sample(random_sector_state(4, 2, 9), uniform_basis(4, 'x', "allX"), 1, 4);
    const auto [m1, v1] = estimate_term({&one}, PauliString::parse(4, "X1 X2"));
    CHECK(v1 == 0.0); // definitional at a single shot
}

TEST_CASE("energy estimator: Neel vacuum against -mN/2 at 3 sigma") {
    const int n = 4;
    const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
    const auto H = build_hamiltonian(p);
    const auto s = neel_state(n);
    std::vector<ShotBatch> batches;
    SeedSequencer seeds(42);
    for (const auto& basis : energy_bases(n)) batches.push_back(sample(s, basis, 10000, seeds.next()));
    SumEstimator est(H, energy_bases(n));
    const auto res = est.estimate(wrap(batches));
    CHECK(std::abs(res.value - (-0.1 * n / 2)) <= 3.0 * res.std_error);
    CHECK(res.shots_used.at("allZ") == 10000);
}

TEST_CASE("estimator linearity in coefficients") {
    const int n = 4;
    const auto s = random_sector_state(n, 2, 10);
    std::vector<ShotBatch> batches;
    SeedSequencer seeds(1);
    for (const auto& basis : energy_bases(n)) batches.push_back(sample(s, basis, 500, seeds.next()));
    const auto data = wrap(batches);

    PauliSum A(n), B(n);
    A.add(PauliString::parse(n, "X1 X2"), 0.7);
    A.add(PauliString::parse(n, "Z3"), -0.2);
    B.add(PauliString::parse(n, "Y2 Y3"), 1.3);
    B.add(PauliString::parse(n, "Z1 Z4"), 0.5);
    PauliSum AB = A + B;
    const double ea = SumEstimator(A, energy_bases(n)).estimate(data).value;
    const double eb = SumEstimator(B, energy_bases(n)).estimate(data).value;
    const double eab = SumEstimator(AB, energy_bases(n)).estimate(data).value;
    CHECK(eab == Catch::Approx(ea + eb).margin(1e-12));
}

TEST_CASE("missing bases raise a listing error") {
    const int n = 4;
    const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
    SumEstimator est(build_hamiltonian(p), energy_bases(n));
    std::vector<ShotBatch> only_z{sample(neel_state(n), uniform_basis(n, 'z', "allZ"), 10, 1)};
    try {
        est.estimate(wrap(only_z));
        FAIL("expected MissingBasesError");
    } catch (const MissingBasesError& e) {
        CHECK(e.missing.size() == 2);
    }
}

TEST_CASE("variance estimator: exact eigenstate gives E^2 = 0 within errors") {
    const int n = 4;
    const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
    const auto H = build_hamiltonian(p);
    const auto gs = ed_ground_state(H, n / 2);
    std::vector<ShotBatch> batches;
    SeedSequencer seeds(77);
    const auto plan = variance_bases(n);
    for (const auto& basis : plan) batches.push_back(sample(gs.state, basis, 20000, seeds.next()));
    VarianceEstimator est(H, plan);
    const auto ve = est.estimate(wrap(batches), gs.energy);
    CHECK(std::abs(ve.e2.value) <= 3.0 * ve.e2.std_error);
    CHECK_FALSE(ve.inconsistent);
}

TEST_CASE("variance estimator: Neel vacuum gives (N-1) w^2") {
    const int n = 4;
    const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
    const auto H = build_hamiltonian(p);
    // dense-matrix oracle for the identity: <(H-E)^2> on the vacuum
    const auto vac_full = oracle::dense_state(neel_state(n));
    const auto Hd = oracle::dense_sum(H);
    const double e_vac = -0.1 * n / 2;
    const oracle::Mat shifted = Hd - e_vac * oracle::Mat::Identity(1 << n, 1 << n);
    const double exact_var = (vac_full.adjoint() * shifted * shifted * vac_full)(0).real();
    CHECK(exact_var == Catch::Approx(double(n - 1)).margin(1e-10));

    std::vector<ShotBatch> batches;
    SeedSequencer seeds(13);
    const auto plan = variance_bases(n);
    for (const auto& basis : plan) batches.push_back(sample(neel_state(n), basis, 20000, seeds.next()));
    const auto ve = VarianceEstimator(H, plan).estimate(wrap(batches), e_vac);
    CHECK(std::abs(ve.e2.value - (n - 1)) <= 3.0 * ve.e2.std_error);
    CHECK(ve.error_bar == Catch::Approx(std::sqrt(ve.e2.value)));
}

TEST_CASE("std error scales as one over sqrt shots") {
    const int n = 4;
    const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
    const auto H = build_hamiltonian(p);
    const auto s = random_sector_state(n, 2, 21);
    SumEstimator est(H, energy_bases(n));
    std::vector<double> log_shots, log_err;
    SeedSequencer seeds(5);
    for (const long shots : {100L, 400L, 1600L, 6400L, 25600L}) {
        std::vector<ShotBatch> batches;
        for (const auto& basis : energy_bases(n)) batches.push_back(sample(s, basis, shots, seeds.next()));
        const auto res = est.estimate(wrap(batches));
        log_shots.push_back(std::log(double(shots)));
        log_err.push_back(std::log(res.std_error));
    }
    // least-squares slope on the log-log data
    const int k = static_cast<int>(log_shots.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < k; ++i) {
        sx += log_shots[i];
        sy += log_err[i];
        sxx += log_shots[i] * log_shots[i];
        sxy += log_shots[i] * log_err[i];
    }
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    CHECK(std::abs(slope + 0.5) < 0.05);
}

TEST_CASE("error model variants stay ordered and finite") {
    const int n = 4;
    const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
    const auto H = build_hamiltonian(p);
    const auto s = random_sector_state(n, 2, 30);
    std::vector<ShotBatch> batches;
    SeedSequencer seeds(8);
    for (const auto& basis : energy_bases(n)) batches.push_back(sample(s, basis, 2000, seeds.next()));
    SumEstimator est(H, energy_bases(n));
    const auto grouped = est.estimate(wrap(batches), ErrorModel::basis_grouped);
    const auto weighted = est.estimate(wrap(batches), ErrorModel::weighted_terms);
    const auto printed = est.estimate(wrap(batches), ErrorModel::paper_printed);
    CHECK(grouped.value == Catch::Approx(weighted.value));
    CHECK(grouped.value == Catch::Approx(printed.value));
    CHECK(grouped.std_error > 0.0);
    CHECK(weighted.std_error > 0.0);
    CHECK(std::isfinite(printed.std_error));
}
