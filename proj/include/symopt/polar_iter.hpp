#pragma once

#include <utility>
#include <vector>

#include "symopt/mat.hpp"

namespace symopt {

/// One cubic-polynomial step is x -> a*x + b*x^3 + c*x^5 on singular values.
struct CoeffTriple {
    double a;
    double b;
    double c;
};

/// Per-step coefficient schedule. When shorter than the requested number of
/// steps, the last triple repeats. The default "baseline cubic" table
/// (1.5, -0.5, 0) is the classical Newton-Schulz polynomial; published
/// schedules can be loaded from configuration instead.
struct CoeffTable {
    std::vector<CoeffTriple> triples;

    CoeffTriple at(int k) const;
    static CoeffTable baseline_cubic();
};

struct IterReport {
    int steps_used = 0;
    double residual = 0.0;   // |X^T X - I|_F or |Z (A_sym + eps I) Z - I|_F
    double normalizer = 0.0; // alpha
};

/// Polynomial approximation to the orthogonal polar factor. Normalizes
/// X0 = A / (1.02 |A|_F), then iterates X <- a X + b X(X^T X) + c X(X^T X)^2,
/// working on the transposed problem when rows < cols so the Gram side stays
/// the smaller dimension.
std::pair<Mat, IterReport> ns_polar(const Mat& a, const CoeffTable& coeffs, int steps);

/// Coupled polynomial iteration for Z ~ (sym(A) + eps I)^{-1/2}.
/// The input is symmetrized and damped first; the normalizer is
/// alpha = 1.02 |A_sym|_F + eps. Each step folds the polar coefficients
/// (a,b,c) into (a+b+c, -b-2c, c) and updates Y <- Y M, Z <- M Z with
/// M = a_bar I + b_bar R + c_bar R^2, R = I - Z Y (symmetrized when
/// `symmetrize_residual` is set, the default). Returns Z / sqrt(alpha).
std::pair<Mat, IterReport> polar_express_inv_sqrt(const Mat& a, const CoeffTable& coeffs, int steps,
                                                  double eps, bool symmetrize_residual = true);

/// Approximates M (M^T M + eps I)^{-1/2} by an inverse-square-root iteration
/// on the Gram matrix followed by a single multiply. Dispatches through the
/// transpose when rows < cols.
std::pair<Mat, IterReport> gram_newton_schulz(const Mat& m, const CoeffTable& coeffs, int steps, double eps);

} // namespace symopt
