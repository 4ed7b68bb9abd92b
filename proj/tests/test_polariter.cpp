#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "symopt/polar_iter.hpp"
#include "symopt/rng.hpp"
#include "symopt/svd.hpp"
#include "symopt/symmetry.hpp"

using namespace symopt;

namespace {

// Random matrix with prescribed singular values (orthogonal factors seeded).
Mat with_spectrum(int m, int n, const std::vector<double>& sigma, std::uint64_t seed) {
    const int r = std::min(m, n);
    const Mat p = random_orthogonal(m, mix_seed(seed, 1));
    const Mat q = random_orthogonal(n, mix_seed(seed, 2));
    Mat a(m, n);
    for (int k = 0; k < r; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) a(i, j) += sigma[static_cast<std::size_t>(k)] * p(i, k) * q(j, k);
    return a;
}

std::vector<double> log_uniform_sigmas(int r, double lo, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 3));
    std::vector<double> s(static_cast<std::size_t>(r));
    for (auto& x : s) x = std::exp(std::log(lo) + rng.uniform() * (0.0 - std::log(lo)));
    return s;
}

} // namespace

TEST_CASE("coeff table repeats its last triple") {
    CoeffTable t{{{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}}};
    CHECK(t.at(0).a == 1.0);
    CHECK(t.at(1).b == 5.0);
    CHECK(t.at(10).c == 6.0);
    CHECK_THROWS_AS(CoeffTable{}.at(0), InvalidConfig);
}

TEST_CASE("ns_polar: orthogonal input returns itself after convergence") {
    const Mat q = random_orthogonal(6, 11);
    auto [x, rep] = ns_polar(q, CoeffTable::baseline_cubic(), 12);
    CHECK(fro_norm(x - q) < 1e-6);
    CHECK(rep.residual < 1e-6);
}

TEST_CASE("ns_polar: diag(3,1) converges to identity in 12 baseline steps") {
    auto [x, rep] = ns_polar(Mat{{3.0, 0.0}, {0.0, 1.0}}, CoeffTable::baseline_cubic(), 12);
    CHECK(fro_norm(x - Mat::identity(2)) < 1e-6);
}

TEST_CASE("ns_polar: antidiagonal case matches the exact polar factor") {
    const Mat a{{0.0, 2.0}, {1.0, 0.0}};
    auto [x, rep] = ns_polar(a, CoeffTable::baseline_cubic(), 12);
    CHECK(fro_norm(x - Mat{{0.0, 1.0}, {1.0, 0.0}}) < 1e-6);
}

TEST_CASE("ns_polar: errors") {
    CHECK_THROWS_AS(ns_polar(Mat(3, 3), CoeffTable::baseline_cubic(), 12), ZeroDirection);
    CHECK_THROWS_AS(ns_polar(Mat::identity(2), CoeffTable::baseline_cubic(), 0), InvalidConfig);
}

TEST_CASE("ns_polar: matches exact polar over random controlled-spectrum matrices") {
    const int shapes[][2] = {{8, 8}, {16, 4}, {4, 16}};
    for (const auto& sh : shapes) {
        for (int trial = 0; trial < 30; ++trial) {
            const int r = std::min(sh[0], sh[1]);
            const std::uint64_t seed = mix_seed(2024, static_cast<std::uint64_t>(trial * 64 + sh[0]));
            const Mat a = with_spectrum(sh[0], sh[1], log_uniform_sigmas(r, 0.1, seed), seed);
            auto [x, rep] = ns_polar(a, CoeffTable::baseline_cubic(), 12);
            CHECK(fro_norm(x - polar_exact(a)) < 1e-6 * std::sqrt(static_cast<double>(r)));
        }
    }
}

TEST_CASE("ns_polar: transports under orthogonal sandwiching") {
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t seed = mix_seed(5, static_cast<std::uint64_t>(trial));
        const Mat a = with_spectrum(6, 4, log_uniform_sigmas(4, 0.2, seed), seed);
        const Mat p = random_orthogonal(6, mix_seed(seed, 9));
        const Mat q = random_orthogonal(4, mix_seed(seed, 10));
        auto [base, r1] = ns_polar(a, CoeffTable::baseline_cubic(), 12);
        auto [moved, r2] = ns_polar(p * a * transpose(q), CoeffTable::baseline_cubic(), 12);
        CHECK(fro_norm(moved - p * base * transpose(q)) < 1e-7);
    }
}

TEST_CASE("polar_express_inv_sqrt: identity is a fixed point") {
    auto [z, rep] = polar_express_inv_sqrt(Mat::identity(4), CoeffTable::baseline_cubic(), 12, 0.0);
    CHECK(fro_norm(z - Mat::identity(4)) < 1e-8);
}

TEST_CASE("polar_express_inv_sqrt: diag(4,9) against the exact oracle") {
    auto [z, rep] = polar_express_inv_sqrt(Mat{{4.0, 0.0}, {0.0, 9.0}}, CoeffTable::baseline_cubic(), 12, 0.0);
    CHECK(fro_norm(z - Mat{{0.5, 0.0}, {0.0, 1.0 / 3.0}}) < 1e-6);
}

TEST_CASE("polar_express_inv_sqrt: 5 paper-default steps on well-conditioned SPD") {
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t seed = mix_seed(606, static_cast<std::uint64_t>(trial));
        const Mat q = random_orthogonal(8, seed);
        Rng rng(mix_seed(seed, 4));
        Mat a(8, 8);
        for (int k = 0; k < 8; ++k) {
            const double lam = 0.5 + 0.5 * rng.uniform();
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) a(i, j) += lam * q(i, k) * q(j, k);
        }
        a = 0.5 * (a + transpose(a));
        auto [z, rep] = polar_express_inv_sqrt(a, CoeffTable::baseline_cubic(), 5, 1e-7);
        const Mat exact = inv_sqrt_exact(a, 1e-7);
        CHECK(fro_norm(z - exact) / fro_norm(exact) < 1e-3);
    }
}

TEST_CASE("polar_express_inv_sqrt: residual contract at 12 steps") {
    for (int n : {8, 16, 32}) {
        const std::uint64_t seed = mix_seed(7007, static_cast<std::uint64_t>(n));
        const Mat q = random_orthogonal(n, seed);
        Rng rng(mix_seed(seed, 4));
        Mat a(n, n);
        for (int k = 0; k < n; ++k) {
            const double lam = std::exp(std::log(0.01) * rng.uniform()); // in [0.01, 1]
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a(i, j) += lam * q(i, k) * q(j, k);
        }
        const double eps = 1e-9;
        auto [z, rep] = polar_express_inv_sqrt(a, CoeffTable::baseline_cubic(), 12, eps);
        Mat sym = 0.5 * (a + transpose(a));
        for (int i = 0; i < n; ++i) sym(i, i) += eps;
        CHECK(fro_norm(z * sym * z - Mat::identity(n)) < 1e-6);
    }
}

TEST_CASE("polar_express_inv_sqrt: errors") {
    CHECK_THROWS_AS(polar_express_inv_sqrt(Mat::identity(3), CoeffTable::baseline_cubic(), 0, 0.0), InvalidConfig);
    CHECK_THROWS_AS(polar_express_inv_sqrt(Mat(2, 3), CoeffTable::baseline_cubic(), 5, 0.0), ShapeError);
    CHECK_THROWS_AS(polar_express_inv_sqrt(Mat(3, 3), CoeffTable::baseline_cubic(), 5, 0.0), ZeroDirection);
}

TEST_CASE("gram_newton_schulz: orthonormal columns are a fixed point") {
    const Mat q = random_orthogonal(7, 3);
    Mat m(7, 3);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = q(i, j);
    auto [x, rep] = gram_newton_schulz(m, CoeffTable::baseline_cubic(), 12, 0.0);
    CHECK(fro_norm(x - m) < 1e-6);

    // scale invariance of the polar factor
    auto [x2, rep2] = gram_newton_schulz(2.0 * m, CoeffTable::baseline_cubic(), 14, 0.0);
    CHECK(fro_norm(x2 - m) < 1e-6);
}

TEST_CASE("gram_newton_schulz: tall diagonal case") {
    const Mat m{{3.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}};
    auto [x, rep] = gram_newton_schulz(m, CoeffTable::baseline_cubic(), 12, 0.0);
    CHECK(fro_norm(x - Mat{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}}) < 1e-6);
}

TEST_CASE("gram_newton_schulz agrees with ns_polar on well-conditioned input") {
    for (int trial = 0; trial < 15; ++trial) {
        const std::uint64_t seed = mix_seed(11, static_cast<std::uint64_t>(trial));
        const Mat m = with_spectrum(9, 5, log_uniform_sigmas(5, 0.15, seed), seed);
        auto [a, r1] = gram_newton_schulz(m, CoeffTable::baseline_cubic(), 12, 0.0);
        auto [b, r2] = ns_polar(m, CoeffTable::baseline_cubic(), 12);
        CHECK(fro_norm(a - b) < 2e-6);
    }
}

TEST_CASE("gram_newton_schulz: zero matrix raises") {
    CHECK_THROWS_AS(gram_newton_schulz(Mat(4, 2), CoeffTable::baseline_cubic(), 5, 0.0), ZeroDirection);
}
