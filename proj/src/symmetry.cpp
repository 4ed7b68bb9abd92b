#include "symopt/symmetry.hpp"

#include <cmath>

#include "symopt/rng.hpp"

namespace symopt {

Mat random_orthogonal(int n, std::uint64_t seed) {
    if (n < 1) throw InvalidConfig("random_orthogonal: n must be >= 1");
    Rng rng(mix_seed(seed, 0x0f0f));
    Mat g = gaussian_mat(n, n, rng);
    // Modified Gram-Schmidt, run twice for orthogonality at the 1e-15 level.
    for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < j; ++k) {
                double proj = 0.0;
                for (int i = 0; i < n; ++i) proj += g(i, j) * g(i, k);
                for (int i = 0; i < n; ++i) g(i, j) -= proj * g(i, k);
            }
            double nrm = 0.0;
            for (int i = 0; i < n; ++i) nrm += g(i, j) * g(i, j);
            nrm = std::sqrt(nrm);
            if (nrm < 1e-12) {
                // Degenerate draw; retry with a reseeded column.
                for (int i = 0; i < n; ++i) g(i, j) = rng.gaussian();
                --j;
                continue;
            }
            for (int i = 0; i < n; ++i) g(i, j) /= nrm;
        }
    }
    return g;
}

Mat random_permutation(int n, std::uint64_t seed) {
    if (n < 1) throw InvalidConfig("random_permutation: n must be >= 1");
    Rng rng(mix_seed(seed, 0x7070));
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }
    Mat p(n, n);
    for (int i = 0; i < n; ++i) p(i, perm[i]) = 1.0;
    return p;
}

namespace {

Mat sample_action_matrix(ActionKind kind, int n, std::uint64_t seed) {
    switch (kind) {
        case ActionKind::Orthogonal:
            return random_orthogonal(n, seed);
        case ActionKind::Permutation:
            return random_permutation(n, seed);
        case ActionKind::Identity:
            return Mat::identity(n);
    }
    throw InvalidConfig("unknown action kind");
}

} // namespace

double equivariance_residual(const std::function<Mat(const Mat&)>& map, const LayerGeometry& geometry,
                             const GroupAction& action, int trials, std::uint64_t seed, int rows, int cols) {
    if (trials < 1) throw InvalidConfig("equivariance_residual: trials must be >= 1");
    if (action.shift && !geometry.is_quotient())
        throw InvalidConfig("equivariance_residual: shift action needs a quotient geometry");
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(t);
        Rng rng(mix_seed(s, 0xd1));
        const Mat d = gaussian_mat(rows, cols, rng);
        const Mat left = sample_action_matrix(action.left, rows, mix_seed(s, 0xa1));
        const Mat right = sample_action_matrix(action.right, cols, mix_seed(s, 0xb2));

        Mat transformed = left * d * transpose(right);
        if (action.shift) {
            Rng arng(mix_seed(s, 0xc3));
            for (int j = 0; j < cols; ++j) {
                const double aj = arng.gaussian();
                for (int i = 0; i < rows; ++i) transformed(i, j) += aj;
            }
        }

        const Mat base = map(d);
        const Mat moved = map(transformed);
        const Mat expected = left * base * transpose(right);
        const double res = fro_norm(moved - expected) / std::max(1.0, fro_norm(base));
        worst = std::max(worst, res);
    }
    return worst;
}

double equivariance_residual(const UpdateSpec& update, const GroupAction& action, int trials,
                             std::uint64_t seed, int rows, int cols) {
    update.validate();
    if (update.geometry.is_quotient() && update.geometry.quotient_rows != rows)
        throw InvalidConfig("equivariance_residual: dims do not match quotient geometry");
    return equivariance_residual([&](const Mat& d) { return apply_update(d, update); }, update.geometry,
                                 action, trials, seed, rows, cols);
}

double horizontality_residual(const Mat& u) {
    const Mat sums = column_sums(u);
    return max_abs(sums) / std::max(1.0, max_abs(u));
}

} // namespace symopt
