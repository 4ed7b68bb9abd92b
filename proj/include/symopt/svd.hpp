#pragma once

#include "symopt/mat.hpp"

namespace symopt {

/// Compact SVD A = U * Diag(sigma) * V^T with r = min(rows, cols).
/// U is rows x r and V is cols x r, both with orthonormal columns; sigma is
/// nonincreasing and nonnegative. Columns of U belonging to zero singular
/// values are completed to an orthonormal set, so U^T U = I holds even for
/// rank-deficient input. The decomposition is deterministic: fixed sweep
/// order, and the largest-magnitude entry of each column of U is made
/// positive (V flips along).
struct SvdResult {
    Mat u;
    std::vector<double> sigma;
    Mat v;
};

SvdResult svd(const Mat& a);

/// Numerical rank: number of sigma_i > 1e-10 * sigma_1 (0 for the zero matrix).
int numerical_rank(const std::vector<double>& sigma);
int numerical_rank(const Mat& a);

/// Relative threshold used by numerical_rank and pseudo-inverse spectral maps.
inline constexpr double kRankTol = 1e-10;

/// Orthogonal polar factor U * V^T from the compact SVD.
Mat polar_exact(const Mat& a);

/// Rank-truncated polar factor: sum of u_i v_i^T over sigma_i above the rank
/// threshold. Coincides with polar_exact on full-rank input; its squared
/// Frobenius norm equals the numerical rank.
Mat polar_exact_truncated(const Mat& a);

/// Symmetric eigendecomposition S = Q * Diag(lambda) * Q^T, eigenvalues
/// nonincreasing, deterministic (cyclic Jacobi + sign convention on Q).
struct EigResult {
    Mat q;
    std::vector<double> lambda;
};

EigResult eig_sym(const Mat& s);

/// (S + eps*I)^{-1/2} for symmetric PSD S via eigendecomposition.
/// Input must be square and symmetric within 1e-10 * max(1, |S|_max).
/// Eigenvalues below -1e-8 raise NotPSD; small negatives are clamped to zero.
/// A zero (clamped) eigenvalue with eps == 0 raises SingularGram.
Mat inv_sqrt_exact(const Mat& s, double eps);

struct Norms {
    double frobenius;
    double spectral;
    double nuclear;
};

Norms norms(const Mat& a);

/// Pi = I - (1/n) * ones * ones^T, the projector onto zero-column-sum rows.
Mat centering_projector(int n);

} // namespace symopt
