#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "symopt/rng.hpp"
#include "symopt/svd.hpp"
#include "symopt/symmetry.hpp"
#include "symopt/updates.hpp"

using namespace symopt;

namespace {

Mat rank_controlled(int m, int n, int rank, std::uint64_t seed) {
    const Mat p = random_orthogonal(m, mix_seed(seed, 21));
    const Mat q = random_orthogonal(n, mix_seed(seed, 22));
    Rng rng(mix_seed(seed, 23));
    Mat a(m, n);
    for (int k = 0; k < rank; ++k) {
        const double s = 0.5 + 1.5 * rng.uniform();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) a(i, j) += s * p(i, k) * q(j, k);
    }
    return a;
}

Mat ones_outer(int rows, const Mat& a_row) {
    Mat out(rows, a_row.cols());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < a_row.cols(); ++j) out(i, j) = a_row(0, j);
    return out;
}

const SolverOptions kExact = SolverOptions::exact();

} // namespace

TEST_CASE("spectral_update: identity map returns the direction bit-exactly") {
    Rng rng(1);
    const Mat d = gaussian_mat(5, 3, rng);
    const Mat u = spectral_update(d, SpectralMapSpec::identity(), kExact);
    CHECK(max_abs_diff(u, d) == 0.0);
}

TEST_CASE("spectral_update: polar of positive diagonal is the identity") {
    const Mat u = spectral_update(Mat{{3.0, 0.0}, {0.0, 1.0}}, SpectralMapSpec::polar(), kExact);
    CHECK(max_abs_diff(u, Mat::identity(2)) < 1e-13);
}

TEST_CASE("spectral_update: power 1/2 takes entrywise square roots of singular values") {
    const Mat u = spectral_update(Mat{{4.0, 0.0}, {0.0, 1.0}}, SpectralMapSpec::power_map(0.5), kExact);
    CHECK(max_abs_diff(u, Mat{{2.0, 0.0}, {0.0, 1.0}}) < 1e-12);
}

TEST_CASE("spectral_update: polar of zero raises ZeroDirection") {
    CHECK_THROWS_AS(spectral_update(Mat(2, 2), SpectralMapSpec::polar(), kExact), ZeroDirection);
}

TEST_CASE("spectral_update preserves singular subspaces (spectral characterization)") {
    // Distinct singular values: output singular vectors must match input ones.
    for (int trial = 0; trial < 25; ++trial) {
        const std::uint64_t seed = mix_seed(42, static_cast<std::uint64_t>(trial));
        const Mat p = random_orthogonal(6, mix_seed(seed, 1));
        const Mat q = random_orthogonal(4, mix_seed(seed, 2));
        Mat d(6, 4);
        const double sig[4] = {2.0, 1.3, 0.8, 0.4};
        for (int k = 0; k < 4; ++k)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 4; ++j) d(i, j) += sig[k] * p(i, k) * q(j, k);
        const Mat u = spectral_update(d, SpectralMapSpec::power_map(0.5), kExact);
        const SvdResult sd = svd(d);
        const SvdResult su = svd(u);
        // principal angles: |U_d^T U_u| should be the identity up to sign
        const Mat overlap = transpose(sd.u) * su.u;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const double expect = (i == j) ? 1.0 : 0.0;
                CHECK(std::fabs(std::fabs(overlap(i, j)) - expect) < 1e-7);
            }
    }
}

TEST_CASE("nuclear_scaled_polar_update: diagonal example and identities") {
    const Mat d{{3.0, 0.0}, {0.0, 1.0}};
    const Mat t = nuclear_scaled_polar_update(d, kExact);
    CHECK(max_abs_diff(t, Mat{{4.0, 0.0}, {0.0, 4.0}}) < 1e-12);
    CHECK(dot(d, t) == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(fro_norm(t) * fro_norm(t) == doctest::Approx(32.0).epsilon(1e-12));
}

TEST_CASE("nuclear_scaled_polar_update: rank-1 and orthogonal closed forms") {
    Rng rng(9);
    Mat u = gaussian_mat(6, 1, rng);
    Mat v = gaussian_mat(4, 1, rng);
    u *= 1.0 / fro_norm(u);
    v *= 1.0 / fro_norm(v);
    const double sigma = 1.7;
    const Mat d = sigma * (u * transpose(v));
    CHECK(fro_norm(nuclear_scaled_polar_update(d, kExact) - d) < 1e-10);

    const Mat q = random_orthogonal(5, 33);
    CHECK(fro_norm(nuclear_scaled_polar_update(q, kExact) - 5.0 * q) < 1e-9);
    CHECK_THROWS_AS(nuclear_scaled_polar_update(Mat(3, 3), kExact), ZeroDirection);
}

TEST_CASE("nuclear-scaled identities hold across ranks for all three variants") {
    for (int rank : {1, 2, 4}) {
        for (int trial = 0; trial < 10; ++trial) {
            const std::uint64_t seed = mix_seed(1234, static_cast<std::uint64_t>(rank * 100 + trial));
            const Mat d = rank_controlled(8, 6, rank, seed);
            const double nuc = norms(d).nuclear;
            const Mat full = nuclear_scaled_polar_update(d, kExact);
            const Mat right = nuc * right_spectral_update(d, SpectralMapSpec::polar(), kExact);
            const Mat left = nuc * left_spectral_update(d, SpectralMapSpec::polar(), kExact);
            for (const Mat* t : {&full, &right, &left}) {
                CHECK(dot(d, *t) == doctest::Approx(nuc * nuc).epsilon(1e-9));
                CHECK(dot(*t, *t) == doctest::Approx(rank * nuc * nuc).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("one-sided nuclear-scaled updates agree with the full one on full-rank input") {
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t seed = mix_seed(777, static_cast<std::uint64_t>(trial));
        const Mat d = rank_controlled(7, 5, 5, seed);
        const double nuc = norms(d).nuclear;
        const Mat full = nuclear_scaled_polar_update(d, kExact);
        const Mat right = nuc * right_spectral_update(d, SpectralMapSpec::polar(), kExact);
        const Mat left = nuc * left_spectral_update(d, SpectralMapSpec::polar(), kExact);
        CHECK(fro_norm(right - full) <= 1e-8);
        CHECK(fro_norm(left - full) <= 1e-8);
    }
}

TEST_CASE("right_spectral_update: orthonormal columns fixed point at eps=0") {
    const Mat q = random_orthogonal(6, 3);
    Mat d(6, 3);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) d(i, j) = q(i, j);
    const Mat u = right_spectral_update(d, SpectralMapSpec::damped_inv_sqrt(0.0), kExact);
    CHECK(fro_norm(u - d) < 1e-12);
}

TEST_CASE("right_spectral_update: diag(2, 0.5) normalizes to identity") {
    const Mat u = right_spectral_update(Mat{{2.0, 0.0}, {0.0, 0.5}},
                                        SpectralMapSpec::damped_inv_sqrt(0.0), kExact);
    CHECK(max_abs_diff(u, Mat::identity(2)) < 1e-12);
}

TEST_CASE("right_spectral_update: singular Gram with eps=0 raises") {
    Mat d(3, 2);
    d(0, 0) = 1.0; // rank one, column two is zero
    CHECK_THROWS_AS(right_spectral_update(d, SpectralMapSpec::damped_inv_sqrt(0.0), kExact), SingularGram);
}

TEST_CASE("right_spectral_update transports under permutation x orthogonal") {
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t seed = mix_seed(55, static_cast<std::uint64_t>(trial));
        Rng rng(mix_seed(seed, 7));
        const Mat d = gaussian_mat(7, 4, rng);
        const Mat p = random_permutation(7, mix_seed(seed, 8));
        const Mat r = random_orthogonal(4, mix_seed(seed, 9));
        const SpectralMapSpec phi = SpectralMapSpec::damped_inv_sqrt(1e-6);
        const Mat lhs = right_spectral_update(p * d * transpose(r), phi, kExact);
        const Mat rhs = p * right_spectral_update(d, phi, kExact) * transpose(r);
        CHECK(fro_norm(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("left_spectral_update: transpose duality is exact and diagonal case checks out") {
    Rng rng(3);
    const Mat d = gaussian_mat(4, 6, rng);
    const SpectralMapSpec psi = SpectralMapSpec::damped_inv_sqrt(1e-3);
    const Mat a = left_spectral_update(d, psi, kExact);
    const Mat b = transpose(right_spectral_update(transpose(d), psi, kExact));
    CHECK(max_abs_diff(a, b) == 0.0);

    const Mat u = left_spectral_update(Mat{{4.0, 0.0}, {0.0, 1.0}}, SpectralMapSpec::damped_inv_sqrt(0.0), kExact);
    CHECK(max_abs_diff(u, Mat::identity(2)) < 1e-12);

    const Mat q = random_orthogonal(3, 77);
    CHECK(fro_norm(left_spectral_update(q, SpectralMapSpec::damped_inv_sqrt(0.0), kExact) - q) < 1e-12);
}

TEST_CASE("row_norm_update: smoothed normalization hand case") {
    const Mat d{{3.0, 4.0}, {0.0, 0.0}};
    const Mat u = row_norm_update(d, RowScaleSpec::smoothed(1e-8));
    CHECK(std::fabs(u(0, 0) - 0.6) < 1e-7);
    CHECK(std::fabs(u(0, 1) - 0.8) < 1e-7);
    CHECK(u(1, 0) == 0.0);
    CHECK(u(1, 1) == 0.0);
}

TEST_CASE("row_norm_update: unit-norm rows pass through, permutations commute") {
    Rng rng(14);
    Mat d = gaussian_mat(5, 4, rng);
    for (int i = 0; i < 5; ++i) {
        const double n = row_norm(d, i);
        for (int j = 0; j < 4; ++j) d(i, j) /= n;
    }
    const Mat u = row_norm_update(d, RowScaleSpec::smoothed(1e-10));
    CHECK(fro_norm(u - d) < 1e-8);

    const Mat p = random_permutation(5, 6);
    CHECK(max_abs_diff(row_norm_update(p * d, RowScaleSpec::smoothed(1e-8)),
                       p * row_norm_update(d, RowScaleSpec::smoothed(1e-8))) < 1e-15);
}

TEST_CASE("hybrid_update: scalar-action case keeps the direction") {
    // orthonormal columns with equal row norms: both stages act as scalars
    const int v = 8, dcol = 2;
    Mat d(v, dcol);
    const double val = 1.0 / std::sqrt(4.0);
    // two orthonormal columns, all row norms equal
    for (int i = 0; i < 4; ++i) {
        d(i, 0) = val * ((i % 2) ? -1.0 : 1.0);
        d(i + 4, 1) = val * ((i % 3) ? -1.0 : 1.0);
    }
    for (HybridOrder order : {HybridOrder::RowThenSpectral, HybridOrder::SpectralThenRow}) {
        const Mat u = hybrid_update(d, order, RowScaleSpec::smoothed(1e-9),
                                    SpectralMapSpec::damped_inv_sqrt(0.0), kExact);
        const double scale = dot(u, d) / dot(d, d);
        CHECK(fro_norm(u - scale * d) < 1e-7);
    }
}

TEST_CASE("hybrid_update: both orders agree on scaled orthogonal input") {
    const Mat q = random_orthogonal(5, 91);
    const Mat d = 3.0 * q;
    const Mat a = hybrid_update(d, HybridOrder::RowThenSpectral, RowScaleSpec::smoothed(1e-9),
                                SpectralMapSpec::damped_inv_sqrt(0.0), kExact);
    const Mat b = hybrid_update(d, HybridOrder::SpectralThenRow, RowScaleSpec::smoothed(1e-9),
                                SpectralMapSpec::damped_inv_sqrt(0.0), kExact);
    // both orders produce a multiple of the orthogonal factor
    const double sa = dot(a, q) / static_cast<double>(5);
    const double sb = dot(b, q) / static_cast<double>(5);
    CHECK(fro_norm(a - sa * q) < 1e-7);
    CHECK(fro_norm(b - sb * q) < 1e-7);
}

TEST_CASE("lm_head_update: pure shared shift is annihilated") {
    Mat a_row(1, 4);
    a_row(0, 0) = 0.3;
    a_row(0, 1) = -1.2;
    a_row(0, 2) = 2.0;
    a_row(0, 3) = 0.7;
    const Mat d = ones_outer(6, a_row);
    for (UpdateClass k : {UpdateClass::RowNorm, UpdateClass::RightSpectral, UpdateClass::HybridRowThenSpectral}) {
        const Mat u = lm_head_update(d, k, RowScaleSpec::smoothed(1e-8),
                                     SpectralMapSpec::damped_inv_sqrt(1e-8), kExact);
        CHECK(max_abs(u) < 1e-12);
    }
}

TEST_CASE("lm_head_update: right-spectral on centered input equals plain update, projection a no-op") {
    Rng rng(21);
    const Mat d = center_rows(gaussian_mat(7, 3, rng));
    const SpectralMapSpec phi = SpectralMapSpec::damped_inv_sqrt(1e-7);
    const Mat via_head = lm_head_update(d, UpdateClass::RightSpectral, RowScaleSpec::smoothed(1e-8), phi, kExact);
    const Mat plain = right_spectral_update(d, phi, kExact);
    CHECK(fro_norm(via_head - plain) < 1e-11);
    CHECK(horizontality_residual(via_head) < 1e-12);
}

TEST_CASE("lm_head_update: row scaling breaks centering, final projection restores it") {
    // centered single column with asymmetric row norms 3, 1, 2
    Mat d(3, 1);
    d(0, 0) = 3.0;
    d(1, 0) = -1.0;
    d(2, 0) = -2.0;
    const Mat dc = center_rows(d);
    // intermediate row-scaled matrix is NOT centered
    Mat scaled = dc;
    const RowScaleSpec eta = RowScaleSpec::smoothed(0.5);
    for (int i = 0; i < 3; ++i) scaled(i, 0) *= eta.scale(row_norm(dc, i));
    CHECK(max_abs(column_sums(scaled)) > 0.01);
    const Mat u = lm_head_update(d, UpdateClass::RowNorm, eta, SpectralMapSpec::damped_inv_sqrt(1e-8), kExact);
    CHECK(horizontality_residual(u) < 1e-12);
}

TEST_CASE("router_update: permutation plus shared shift transports") {
    for (int trial = 0; trial < 15; ++trial) {
        const std::uint64_t seed = mix_seed(808, static_cast<std::uint64_t>(trial));
        Rng rng(mix_seed(seed, 31));
        const Mat d0 = gaussian_mat(6, 4, rng);
        const Mat p = random_permutation(6, mix_seed(seed, 32));
        Mat shifted = p * d0;
        Rng arng(mix_seed(seed, 33));
        for (int j = 0; j < 4; ++j) {
            const double aj = arng.gaussian();
            for (int i = 0; i < 6; ++i) shifted(i, j) += aj;
        }
        for (UpdateClass k : {UpdateClass::RowNorm, UpdateClass::LeftSpectral, UpdateClass::HybridSpectralThenRow}) {
            const Mat lhs = router_update(shifted, k, RowScaleSpec::smoothed(1e-8),
                                          SpectralMapSpec::damped_inv_sqrt(1e-8), kExact);
            const Mat rhs = p * router_update(d0, k, RowScaleSpec::smoothed(1e-8),
                                              SpectralMapSpec::damped_inv_sqrt(1e-8), kExact);
            CHECK(fro_norm(lhs - rhs) < 1e-9);
            CHECK(horizontality_residual(lhs) < 1e-12);
        }
    }
}

TEST_CASE("router_update: hand-evaluated row-norm case") {
    const Mat d{{1.0, 1.0}, {3.0, 1.0}};
    const Mat dc = center_rows(d);
    CHECK(max_abs_diff(dc, Mat{{-1.0, 0.0}, {1.0, 0.0}}) < 1e-15);
    const Mat u = router_update(d, UpdateClass::RowNorm, RowScaleSpec::smoothed(1e-8),
                                SpectralMapSpec::damped_inv_sqrt(1e-8), kExact);
    CHECK(fro_norm(u - Mat{{-1.0, 0.0}, {1.0, 0.0}}) < 1e-6);
    CHECK(max_abs(column_sums(u)) < 1e-14);
}

TEST_CASE("router_update: pure shared logit shift gives the zero update") {
    Mat a_row(1, 3);
    a_row(0, 0) = 0.5;
    a_row(0, 1) = -2.0;
    a_row(0, 2) = 1.0;
    const Mat d = ones_outer(4, a_row);
    const Mat u = router_update(d, UpdateClass::RowNorm, RowScaleSpec::smoothed(1e-8),
                                SpectralMapSpec::damped_inv_sqrt(1e-8), kExact);
    CHECK(max_abs(u) < 1e-12);
}

TEST_CASE("transposed_lpro_update: wraps row-norm into column-norm scaling") {
    Rng rng(61);
    const Mat d = gaussian_mat(3, 5, rng);
    UpdateSpec inner;
    inner.geometry = LayerGeometry::lpro();
    inner.klass = UpdateClass::RowNorm;
    inner.rowscale = RowScaleSpec::smoothed(1e-8);
    const Mat u = transposed_lpro_update(d, inner);
    const Mat expect = transpose(row_norm_update(transpose(d), inner.rowscale));
    CHECK(max_abs_diff(u, expect) == 0.0);

    // double transpose equals the plain LPRO map
    UpdateSpec outer = inner;
    outer.geometry = LayerGeometry::transposed_lpro();
    const Mat via_spec = apply_update(d, outer);
    CHECK(max_abs_diff(via_spec, u) == 0.0);
}

TEST_CASE("transposed_lpro_update: column-permutation equivariance") {
    for (int trial = 0; trial < 10; ++trial) {
        const std::uint64_t seed = mix_seed(505, static_cast<std::uint64_t>(trial));
        Rng rng(mix_seed(seed, 3));
        const Mat d = gaussian_mat(4, 6, rng);
        const Mat p = random_permutation(6, mix_seed(seed, 4));
        UpdateSpec inner;
        inner.geometry = LayerGeometry::lpro();
        inner.klass = UpdateClass::HybridRowThenSpectral;
        inner.rowscale = RowScaleSpec::smoothed(1e-8);
        inner.spectral = SpectralMapSpec::damped_inv_sqrt(1e-8);
        const Mat lhs = transposed_lpro_update(d * transpose(p), inner);
        const Mat rhs = transposed_lpro_update(d, inner) * transpose(p);
        CHECK(fro_norm(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("sign_diag_lift_update: exact sign patterns") {
    CHECK(max_abs_diff(sign_diag_lift_update(Mat{{2.0, -3.0}}), Mat{{1.0, -1.0}}) == 0.0);

    Rng rng(17);
    Mat d = gaussian_mat(3, 4, rng);
    for (double& x : d.data()) x = std::fabs(x) + 0.01;
    Mat ones(3, 4);
    for (double& x : ones.data()) x = 1.0;
    CHECK(max_abs_diff(sign_diag_lift_update(d), ones) == 0.0);

    const Mat a = gaussian_mat(4, 4, rng);
    CHECK(max_abs_diff(sign_diag_lift_update(a), sign_diag_lift_update(10.0 * a)) == 0.0);

    Mat z{{1.0, 0.0}, {2.0, 3.0}};
    CHECK_THROWS_AS(sign_diag_lift_update(z), ZeroEntry);
}

TEST_CASE("apply_update: zero direction policy") {
    UpdateSpec spec;
    spec.geometry = LayerGeometry::lpro();
    spec.klass = UpdateClass::RowNorm;
    CHECK(max_abs(apply_update(Mat(4, 3), spec)) == 0.0);

    spec.geometry = LayerGeometry::bi_orthogonal();
    spec.klass = UpdateClass::RightSpectral;
    spec.spectral = SpectralMapSpec::damped_inv_sqrt(1e-8);
    CHECK(max_abs(apply_update(Mat(4, 3), spec)) == 0.0);

    spec.klass = UpdateClass::Spectral;
    spec.spectral = SpectralMapSpec::polar();
    CHECK_THROWS_AS(apply_update(Mat(4, 3), spec), ZeroDirection);

    spec.klass = UpdateClass::NuclearScaledPolar;
    CHECK_THROWS_AS(apply_update(Mat(4, 3), spec), ZeroDirection);
}

TEST_CASE("edge shapes: scalars, single rows, single experts") {
    CHECK(spectral_update(Mat{{-3.0}}, SpectralMapSpec::polar(), kExact)(0, 0) == -1.0);

    const Mat u = right_spectral_update(Mat{{3.0, 4.0}}, SpectralMapSpec::damped_inv_sqrt(0.0), kExact);
    CHECK(u(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(u(0, 1) == doctest::Approx(0.8).epsilon(1e-12));

    // with one expert the centered geometry is trivial: everything is vertical
    Mat d(1, 4);
    for (int j = 0; j < 4; ++j) d(0, j) = j + 1.0;
    const Mat r = router_update(d, UpdateClass::RowNorm, RowScaleSpec::smoothed(1e-8),
                                SpectralMapSpec::damped_inv_sqrt(1e-8), kExact);
    CHECK(max_abs(r) == 0.0);
}

TEST_CASE("UpdateSpec admissibility validation") {
    UpdateSpec spec;
    spec.geometry = LayerGeometry::bi_orthogonal();
    spec.klass = UpdateClass::RowNorm;
    CHECK_THROWS_AS(spec.validate(), InvalidConfig);

    spec.geometry = LayerGeometry::router(4);
    spec.klass = UpdateClass::RightSpectral;
    CHECK_THROWS_AS(spec.validate(), InvalidConfig);

    spec.klass = UpdateClass::LeftSpectral;
    CHECK_NOTHROW(spec.validate());

    spec.geometry = LayerGeometry::lm_head(0);
    spec.klass = UpdateClass::RowNorm;
    CHECK_THROWS_AS(spec.validate(), InvalidConfig);
}

TEST_CASE("composition of LPRO-equivariant maps stays LPRO-equivariant") {
    // three-stage composite: row scale, right spectral, row scale again
    const RowScaleSpec eta = RowScaleSpec::smoothed(1e-8);
    const SpectralMapSpec phi = SpectralMapSpec::damped_inv_sqrt(1e-8);
    auto composite = [&](const Mat& d) {
        return row_norm_update(right_spectral_update(row_norm_update(d, eta), phi, kExact), eta);
    };
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint64_t seed = mix_seed(2718, static_cast<std::uint64_t>(trial));
        Rng rng(mix_seed(seed, 1));
        const Mat d = gaussian_mat(9, 5, rng);
        const Mat p = random_permutation(9, mix_seed(seed, 2));
        const Mat r = random_orthogonal(5, mix_seed(seed, 3));
        const Mat base = composite(d);
        const Mat moved = composite(p * d * transpose(r));
        worst = std::max(worst, fro_norm(moved - p * base * transpose(r)) / std::max(1.0, fro_norm(base)));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("exact and iterative solvers agree on well-conditioned directions") {
    for (int trial = 0; trial < 10; ++trial) {
        const std::uint64_t seed = mix_seed(31337, static_cast<std::uint64_t>(trial));
        const Mat p = random_orthogonal(8, mix_seed(seed, 1));
        const Mat q = random_orthogonal(5, mix_seed(seed, 2));
        Rng rng(mix_seed(seed, 3));
        Mat d(8, 5);
        for (int k = 0; k < 5; ++k) {
            const double s = 0.3 + 0.7 * rng.uniform();
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 5; ++j) d(i, j) += s * p(i, k) * q(j, k);
        }
        const SolverOptions iter = SolverOptions::iterative(12);

        const Mat a1 = spectral_update(d, SpectralMapSpec::polar(), kExact);
        const Mat b1 = spectral_update(d, SpectralMapSpec::polar(), iter);
        CHECK(fro_norm(a1 - b1) < 5e-6);

        const SpectralMapSpec damped = SpectralMapSpec::damped_inv_sqrt(1e-7);
        CHECK(fro_norm(right_spectral_update(d, damped, kExact) - right_spectral_update(d, damped, iter)) < 5e-6);
        CHECK(fro_norm(left_spectral_update(d, damped, kExact) - left_spectral_update(d, damped, iter)) < 5e-6);
    }
}
