#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "vqs/ed.hpp"
#include "vqs/schwinger.hpp"

using namespace vqs;

namespace {

double closed_form_ground_n2(double m, double w, double g) {
    return 0.5 * g - std::sqrt((m + 0.5 * g) * (m + 0.5 * g) + w * w);
}

} // namespace

TEST_CASE("N=2 ground energy closed form") {
    for (const double m : {-0.5, 0.0, 0.1, 1.0}) {
        for (const double g : {0.0, 0.5, 1.0, 2.0}) {
            const SchwingerParams p{2, 1.0, m, g, 0.0};
            const auto pair = ed_ground_state(build_hamiltonian(p), 1);
            CHECK(pair.energy == Catch::Approx(closed_form_ground_n2(m, 1.0, g)).margin(1e-12));
        }
    }
}

TEST_CASE("bare vacuum energy is -mN/2") {
    for (const int n : {2, 4, 8}) {
        const SchwingerParams p{n, 1.0, 0.37, 1.3, 0.0};
        const auto H = build_hamiltonian(p);
        CHECK(exact_expectation(neel_state(n), H) == Catch::Approx(-0.37 * n / 2).margin(1e-12));
    }
}

TEST_CASE("Hamiltonian matches a direct dense construction through L_j") {
    for (const int n : {2, 4, 6, 8}) {
        const SchwingerParams p{n, 1.0, 0.23, 0.9, 0.15}; // nonzero eps0 exercises the plumbing
        const auto H = build_hamiltonian(p);
        oracle::Mat dense = oracle::Mat::Zero(1 << n, 1 << n);
        for (int j = 1; j < n; ++j) {
            // w(s+ s- + h.c.) = (w/2)(XX + YY)
            dense += 0.5 * p.w * oracle::dense_string(PauliString(n).with_op(j, 'X').with_op(j + 1, 'X'));
            dense += 0.5 * p.w * oracle::dense_string(PauliString(n).with_op(j, 'Y').with_op(j + 1, 'Y'));
        }
        for (int j = 1; j <= n; ++j)
            dense += 0.5 * p.m * ((j % 2) ? -1.0 : 1.0) * oracle::dense_string(PauliString::single(n, j, 'Z'));
        for (int j = 1; j < n; ++j) {
            oracle::Mat L = oracle::Mat::Identity(1 << n, 1 << n) * p.eps0;
            for (int l = 1; l <= j; ++l) {
                L -= 0.5 * oracle::dense_string(PauliString::single(n, l, 'Z'));
                L -= 0.5 * ((l % 2) ? -1.0 : 1.0) * oracle::Mat::Identity(1 << n, 1 << n);
            }
            dense += p.gbar * L * L;
        }
        CHECK((oracle::dense_sum(H) - dense).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("H_T commutes with total magnetization symbolically") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 4 + 2 * static_cast<int>(rng() % 3);
        const SchwingerParams p{n, 1.0, u(rng), std::abs(u(rng)), u(rng)};
        const auto H = build_hamiltonian(p);
        PauliSum sz(n);
        for (int j = 1; j <= n; ++j) sz.add(PauliString::single(n, j, 'Z'), 1.0);
        const auto comm = sum_multiply(H, sz) - sum_multiply(sz, H);
        CHECK(comm.empty());
    }
}

TEST_CASE("lambda decomposition recomposes and classifies") {
    for (const int n : {2, 4, 8}) {
        const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
        const auto H = build_hamiltonian(p);
        const auto lam = lambda_decompose(H, p);
        const auto recomposed = lam.lambda_x + lam.lambda_y + lam.lambda_z;
        CHECK((recomposed - H).empty());
        for (int j = 1; j < n; ++j) {
            CHECK(lam.lambda_x.coeff(PauliString(n).with_op(j, 'X').with_op(j + 1, 'X')) == cplx(0.5 * p.w));
            CHECK(lam.lambda_y.coeff(PauliString(n).with_op(j, 'Y').with_op(j + 1, 'Y')) == cplx(0.5 * p.w));
        }
        // d and c mirror Lambda_Z
        for (int j = 1; j <= n; ++j)
            CHECK(lam.d[j - 1] == Catch::Approx(lam.lambda_z.coeff(PauliString::single(n, j, 'Z')).real()));
    }
}

TEST_CASE("c_{1,2} coefficient from the dense trace inner product at N=4") {
    const SchwingerParams p{4, 1.0, 0.0, 1.0, 0.0};
    const auto H = build_hamiltonian(p);
    const auto lam = lambda_decompose(H, p);
    const auto z1z2 = oracle::dense_string(PauliString::parse(4, "Z1 Z2"));
    const double proj = (z1z2 * oracle::dense_sum(H)).trace().real() / 16.0;
    CHECK(lam.c.at({1, 2}) == Catch::Approx(proj).margin(1e-12));
}

TEST_CASE("gauge field expectations") {
    const SchwingerParams p{4, 1.0, 0.1, 1.0, 0.0};
    for (int j = 1; j <= 3; ++j)
        CHECK(exact_expectation(neel_state(4), gauge_field(j, p)) == Catch::Approx(0.0).margin(1e-12));
    const SchwingerParams p2{2, 1.0, 0.1, 1.0, 0.0};
    CHECK(exact_expectation(basis_state(2, 1, 0b10), gauge_field(1, p2)) == Catch::Approx(1.0));
    CHECK_THROWS_AS(gauge_field(4, p), std::invalid_argument);
}

TEST_CASE("CP transforms L_j by half the total magnetization (dense, N=4)") {
    const SchwingerParams p{4, 1.0, 0.1, 1.0, 0.0};
    const auto cp = oracle::dense_cp(4);
    PauliSum sz(4);
    for (int j = 1; j <= 4; ++j) sz.add(PauliString::single(4, j, 'Z'), 1.0);
    for (int j = 1; j <= 3; ++j) {
        const auto L = oracle::dense_sum(gauge_field(j, p));
        const auto lhs = cp * L * cp.adjoint();
        const auto rhs = L + 0.5 * oracle::dense_sum(sz);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("CP operator is an involution and fixes the bare vacuum") {
    const auto cp = cp_operator(4);
    CHECK(cp.map_bits(cp.map_bits(0b0110)) == 0b0110u);
    CHECK(cp.map_bits(0b0101) == 0b0101u); // vacuum Neel bitstring
    CHECK_THROWS_AS(cp_operator(5), std::invalid_argument);
    const auto dense = oracle::dense_cp(4);
    CHECK((dense * dense - oracle::Mat::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("CP commutes with H_T only inside the zero-magnetization sector") {
    for (const int n : {4, 6}) {
        const SchwingerParams p{n, 1.0, 0.3, 1.0, 0.0};
        const auto Hd = oracle::dense_sum(build_hamiltonian(p));
        const auto cp = oracle::dense_cp(n);
        const auto full_comm = (Hd * cp - cp * Hd).cwiseAbs().maxCoeff();
        CHECK(full_comm > 1e-6); // not a symmetry of the full space

        const auto basis = SectorBasis::get(n, n / 2);
        const Eigen::Index d = static_cast<Eigen::Index>(basis->dim());
        oracle::Mat S = oracle::Mat::Zero(Eigen::Index(1) << n, d);
        for (Eigen::Index i = 0; i < d; ++i) S(basis->state(static_cast<std::size_t>(i)), i) = 1.0;
        const auto Hp = S.adjoint() * Hd * S;
        const auto cpp = S.adjoint() * cp * S;
        CHECK((Hp * cpp - cpp * Hp).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("order parameter endpoints") {
    for (const int n : {4, 8}) {
        const auto O = order_parameter(n);
        CHECK(exact_expectation(neel_state(n, NeelPhase::vacuum), O) == Catch::Approx(0.0).margin(1e-12));
        CHECK(exact_expectation(neel_state(n, NeelPhase::anti), O) == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("particle density endpoints and ground-state profile") {
    const int n = 8;
    const auto vac = neel_state(n, NeelPhase::vacuum);
    const auto anti = neel_state(n, NeelPhase::anti);
    for (int j = 1; j <= n; ++j) {
        CHECK(exact_expectation(vac, particle_density(j, n)) == Catch::Approx(0.0).margin(1e-12));
        CHECK(exact_expectation(anti, particle_density(j, n)) == Catch::Approx(1.0).margin(1e-12));
    }
    // ED profile is reflection symmetric for the CP-even ground state
    const SchwingerParams p{n, 1.0, 0.1, 1.0, 0.0};
    const auto gs = ed_ground_state(build_hamiltonian(p), n / 2).state;
    for (int j = 1; j <= n / 2; ++j)
        CHECK(exact_expectation(gs, particle_density(j, n)) ==
              Catch::Approx(exact_expectation(gs, particle_density(n + 1 - j, n))).margin(1e-8));
}

TEST_CASE("order parameter rises across the transition (ED sweep)") {
    const int n = 8;
    double left = 0.0, right = 0.0;
    for (const double m : {-2.0, 0.8}) {
        const SchwingerParams p{n, 1.0, m, 1.0, 0.0};
        const auto gs = ed_ground_state(build_hamiltonian(p), n / 2).state;
        (m < 0 ? left : right) = exact_expectation(gs, order_parameter(n));
    }
    CHECK(left > 0.8);
    CHECK(right < 0.1);
}

TEST_CASE("odd N is rejected") {
    SchwingerParams p;
    p.n_sites = 5;
    CHECK_THROWS_AS(build_hamiltonian(p), std::invalid_argument);
}
