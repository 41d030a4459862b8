#include <doctest.h>

#include <random>

#include "gsched/error.hpp"
#include "gsched/linalg.hpp"
#include "support.hpp"

using namespace gsched;

TEST_CASE("eigenvalues match a spectrum fixed by construction") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 5;
        auto ks = testsupport::random_known_spectrum(rng, n, 1.0);
        const auto got = eigenvalues(ks.A);
        REQUIRE(got.size() == ks.eig.size());
        // every expected eigenvalue has a match
        for (const auto& e : ks.eig) {
            double best = 1e300;
            for (const auto& g : got) {
                best = std::min(best, std::abs(g - e));
            }
            CHECK(best < 1e-8 * std::max(1.0, ks.A.norm()));
        }
        for (std::size_t i = 1; i < got.size(); ++i) {
            CHECK(got[i - 1].real() >= got[i].real());
        }
    }
}

TEST_CASE("eigenvalue residual contract on the published closed-loop sizes") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        MatX a(6, 6);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            a.data()[i] = nd(rng);
        }
        // residual of det(A - lambda I) through the smallest singular value
        for (const auto& l : eigenvalues(a)) {
            const Eigen::MatrixXcd shifted = a.cast<std::complex<double>>() -
                                             l * Eigen::MatrixXcd::Identity(6, 6);
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
            CHECK(svd.singularValues()(5) <= 1e-8 * a.norm());
        }
    }
}

TEST_CASE("spectral abscissa and Hurwitz test") {
    MatX a(2, 2);
    a << -1, 5, 0, -2;
    CHECK(spectral_abscissa(a) == doctest::Approx(-1.0));
    CHECK(is_hurwitz(a));
    a(1, 1) = 0.0;
    CHECK_FALSE(is_hurwitz(a));
    CHECK_THROWS_AS((void)eigenvalues(MatX(2, 3)), InvalidInput);
}

TEST_CASE("symmetric extreme eigenvalues agree with a Jacobi oracle") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + trial % 7;
        MatX m(n, n);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = nd(rng);
        }
        const MatX s = m + m.transpose();
        const auto ev = testsupport::jacobi_eigenvalues(s);
        CHECK(sym_lambda_min(s) == doctest::Approx(ev.front()).epsilon(1e-10));
        CHECK(sym_lambda_max(s) == doctest::Approx(ev.back()).epsilon(1e-10));
    }
}

TEST_CASE("matrix norms") {
    MatX a(2, 2);
    a << 3, 0, 0, 4;
    CHECK(matrix_norm(a, MatrixNorm::Spectral) == doctest::Approx(4.0));
    CHECK(matrix_norm(a, MatrixNorm::Frobenius) == doctest::Approx(5.0));
    CHECK(all_finite(a));
    a(0, 1) = std::nan("");
    CHECK_FALSE(all_finite(a));
}
