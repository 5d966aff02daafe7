#include "doctest.h"

#include "tenseg/errors.hpp"
#include "tenseg/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

using namespace tenseg;

namespace {

DenseMatrix random_matrix(Rng& rng, int rows, int cols) {
    DenseMatrix a(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
    }
    return a;
}

DenseMatrix random_spd(Rng& rng, int n) {
    const DenseMatrix b = random_matrix(rng, n, n);
    return b * b.transpose() + n * DenseMatrix::Identity(n, n);
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("solve_spd on a 2x2 system") {
    DenseMatrix a(2, 2);
    a << 4, 2, 2, 3;
    Vector b(2);
    b << 2, 1;
    const Vector x = solve_spd(a, b);
    CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(x[1]) < 1e-15);
}

TEST_CASE("solve_spd with the identity returns the right-hand side") {
    Vector b(3);
    b << 1.5, -2.0, 7.0;
    CHECK((solve_spd(DenseMatrix::Identity(3, 3), b) - b).norm() == 0.0);
}

TEST_CASE("solve_spd rejects indefinite and non-symmetric matrices") {
    DenseMatrix indef(2, 2);
    indef << 1, 2, 2, 1;
    CHECK_THROWS_AS(solve_spd(indef, Vector::Ones(2)), NotPositiveDefinite);
    DenseMatrix nonsym(2, 2);
    nonsym << 2, 1, 0, 2;
    CHECK_THROWS_AS(solve_spd(nonsym, Vector::Ones(2)), ContractViolation);
    CHECK_THROWS_AS(solve_spd(DenseMatrix::Identity(3, 3), Vector::Ones(2)), DimensionMismatch);
}

TEST_CASE("solve_spd: residual is small on 1000 random SPD systems") {
    Rng rng(2024);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int n = 1 + static_cast<int>(rng.below(24));
        const DenseMatrix a = random_spd(rng, n);
        Vector b(n);
        for (int i = 0; i < n; ++i) b[i] = rng.uniform(-1.0, 1.0);
        const Vector x = solve_spd(a, b);
        worst = std::max(worst, (a * x - b).norm() / (a.norm() * x.norm() + b.norm()));
    }
    CHECK(worst < 1e-14);
}

TEST_CASE("sym_eig of a diagonal matrix sorts ascending") {
    DenseMatrix a = DenseMatrix::Zero(3, 3);
    a.diagonal() << 3, -1, 2;
    const auto e = sym_eig(a);
    CHECK(e.values[0] == -1.0);
    CHECK(e.values[1] == 2.0);
    CHECK(e.values[2] == 3.0);
}

TEST_CASE("sym_eig of the 2x2 [[2,1],[1,2]]") {
    DenseMatrix a(2, 2);
    a << 2, 1, 1, 2;
    const auto e = sym_eig(a);
    CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-14));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(e.vectors(0, 0)) - s) < 1e-14);
    CHECK(std::abs(e.vectors(0, 0) + e.vectors(1, 0)) < 1e-14);
}

TEST_CASE("sym_eig: reconstruction, orthonormality, similarity invariance") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const int n = 2 + static_cast<int>(rng.below(20));
        DenseMatrix a = random_matrix(rng, n, n);
        a = (0.5 * (a + a.transpose())).eval();
        const auto e = sym_eig(a);
        CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a).norm() <= 1e-12 * a.norm());
        CHECK((e.vectors.transpose() * e.vectors - DenseMatrix::Identity(n, n)).norm() < 1e-12);
        for (int i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);

        // Orthogonal similarity keeps the spectrum.
        const DenseMatrix q = Eigen::HouseholderQR<DenseMatrix>(random_matrix(rng, n, n)).householderQ();
        DenseMatrix rotated = q * a * q.transpose();
        rotated = 0.5 * (rotated + rotated.transpose()).eval();
        const auto e2 = sym_eig(rotated);
        CHECK((e2.values - e.values).cwiseAbs().maxCoeff() <= 1e-12 * a.norm());
    }
}

TEST_CASE("sym_eig rejects non-symmetric input") {
    DenseMatrix a(2, 2);
    a << 1, 2, 0, 1;
    CHECK_THROWS_AS(sym_eig(a), ContractViolation);
}

TEST_CASE("gen_sym_eig with identity mass reduces to sym_eig") {
    DenseMatrix k(2, 2);
    k << 2, -1, -1, 2;
    const auto e = gen_sym_eig(k, DenseMatrix::Identity(2, 2));
    CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("gen_sym_eig of a two-mass spring chain") {
    // K = k [[2,-1],[-1,1]], M = m I: lambda = (k/m)(3 -+ sqrt 5)/2.
    const double k = 1000.0;
    const double m = 2.0;
    DenseMatrix kk(2, 2);
    kk << 2 * k, -k, -k, k;
    const auto e = gen_sym_eig(kk, m * DenseMatrix::Identity(2, 2));
    CHECK(e.values[0] == doctest::Approx(k / m * (3 - std::sqrt(5.0)) / 2).epsilon(1e-13));
    CHECK(e.values[1] == doctest::Approx(k / m * (3 + std::sqrt(5.0)) / 2).epsilon(1e-13));
}

TEST_CASE("gen_sym_eig: M-orthonormality and congruence invariance") {
    Rng rng(99);
    for (int t = 0; t < 30; ++t) {
        const int n = 2 + static_cast<int>(rng.below(15));
        DenseMatrix k = random_matrix(rng, n, n);
        k = (0.5 * (k + k.transpose())).eval();
        const DenseMatrix m = random_spd(rng, n);
        const auto e = gen_sym_eig(k, m);
        CHECK((e.vectors.transpose() * m * e.vectors - DenseMatrix::Identity(n, n)).norm() < 1e-11);
        CHECK((k * e.vectors - m * e.vectors * e.values.asDiagonal()).norm() < 1e-11 * (k.norm() + 1.0));

        // (P^T K P, P^T M P) has the same generalized spectrum for invertible P.
        const DenseMatrix p = random_matrix(rng, n, n) + 3.0 * DenseMatrix::Identity(n, n);
        DenseMatrix kp = p.transpose() * k * p;
        DenseMatrix mp = p.transpose() * m * p;
        kp = 0.5 * (kp + kp.transpose()).eval();
        mp = 0.5 * (mp + mp.transpose()).eval();
        const auto e2 = gen_sym_eig(kp, mp);
        CHECK((e2.values - e.values).cwiseAbs().maxCoeff() < 1e-9 * (e.values.cwiseAbs().maxCoeff() + 1.0));
    }
}

TEST_CASE("gen_sym_eig rejects a singular mass matrix") {
    DenseMatrix m = DenseMatrix::Identity(2, 2);
    m(1, 1) = 0.0;
    CHECK_THROWS_AS(gen_sym_eig(DenseMatrix::Identity(2, 2), m), MassError);
}

TEST_CASE("minimize_scalar on a parabola") {
    const auto r = minimize_scalar([](double a) { return (a - 0.3) * (a - 0.3); }, 0.0, 1.0);
    CHECK(std::abs(r.argmin - 0.3) < 1e-7);
    CHECK(r.value < 1e-14);
}

TEST_CASE("minimize_scalar: monotone decreasing objective goes to the upper end") {
    const auto r = minimize_scalar([](double a) { return -a; }, 0.0, 1.0);
    CHECK(r.argmin == 1.0);
}

TEST_CASE("minimize_scalar: cos(3a) on [0, 2] has its minimum at pi/3") {
    const auto r = minimize_scalar([](double a) { return std::cos(3 * a); }, 0.0, 2.0);
    CHECK(std::abs(r.argmin - std::numbers::pi / 3) < 1e-7);
}

TEST_CASE("minimize_scalar: increasing objective returns a point near but above lo") {
    const auto r = minimize_scalar([](double a) { return a; }, 0.0, 1.0);
    CHECK(r.argmin > 0.0);
    CHECK(r.argmin < 1e-7);
}

TEST_CASE("minimize_scalar rejects bad intervals and non-finite values") {
    CHECK_THROWS_AS(minimize_scalar([](double a) { return a; }, 1.0, 0.0), InvalidParameter);
    CHECK_THROWS_AS(minimize_scalar([](double) { return std::nan(""); }, 0.0, 1.0), LineSearchError);
}

TEST_CASE("kron_identity3 layout") {
    DenseMatrix a(2, 2);
    a << 1, 2, 3, 4;
    const DenseMatrix k = kron_identity3(a);
    REQUIRE(k.rows() == 6);
    CHECK(k(0, 3) == 2.0);
    CHECK(k(4, 1) == 3.0);
    CHECK(k(5, 5) == 4.0);
    CHECK(k(0, 4) == 0.0);
}

TEST_CASE("Rng: fixed seed gives a fixed sequence") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    // SplitMix64 reference value for seed 0.
    Rng z(0);
    CHECK(z.next_u64() == 0xe220a8397b1dcdafULL);
}

TEST_CASE("Rng: uniform draws stay in range with the right mean") {
    Rng rng(5);
    double sum = 0.0;
    const int n = 200000;
    std::vector<int> bins(10, 0);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform(-1.0, 0.0);
        REQUIRE(u >= -1.0);
        REQUIRE(u < 0.0);
        sum += u;
        ++bins[std::min(9, static_cast<int>((u + 1.0) * 10))];
    }
    CHECK(std::abs(sum / n + 0.5) < 0.005);
    for (int c : bins) CHECK(std::abs(c - n / 10) < 5 * std::sqrt(n / 10.0));
}

TEST_CASE("Rng::below covers every value without bias") {
    Rng rng(11);
    std::vector<int> hist(7, 0);
    for (int i = 0; i < 70000; ++i) ++hist[rng.below(7)];
    for (int c : hist) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(7, s));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("parallel_for visits each index once and rethrows") {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](int i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](int i) {
                                     if (i == 6) throw InvalidParameter("boom");
                                 }),
                    InvalidParameter);
}

}  // TEST_SUITE
