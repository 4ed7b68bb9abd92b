#pragma once

#include <optional>
#include <vector>

#include "symopt/mat.hpp"
#include "symopt/updates.hpp"

namespace symopt {

enum class LossKind { QuadraticFro, QuadraticAniso, LowRankFactor };

/// Synthetic losses with known smoothness and PL constants:
///   QuadraticFro   f(W) = (L/2) |W - W*|_F^2          (L = mu)
///   QuadraticAniso f(W) = 1/2 tr((W-W*)^T A (W-W*))   (L = lambda_max(A), mu = lambda_min(A))
///   LowRankFactor  f(W) = 1/4 |W W^T - Y|_F^2         (constants not certified)
struct SyntheticLoss {
    LossKind kind = LossKind::QuadraticFro;
    Mat w_star;
    double scale = 1.0; // L for QuadraticFro
    Mat a;              // SPD left operator
    Mat y;              // LowRankFactor target

    double known_l = 0.0;
    double known_mu = 0.0; // 0 when absent
    double f_star = 0.0;

    static SyntheticLoss quadratic_fro(Mat w_star, double l);
    static SyntheticLoss quadratic_aniso(Mat a, Mat w_star);
    static SyntheticLoss low_rank_factor(Mat y, int cols);
};

std::pair<double, Mat> loss_and_grad(const SyntheticLoss& loss, const Mat& w);

/// Update families with a matching one-step descent inequality; each trial
/// asserts its family's bound with constants measured from the run trace.
enum class DescentFamily {
    SpectralIdentity,   // T(G) = G
    NuclearPolar,       // T(G) = |G|_* polar(G)
    RightSpectralDamped,
    LeftSpectralDamped,
    RowNormBounded,
    RowNormSmoothed,
    HybridPolarRow, // nuclear-scaled right-polar then exact row normalization
    HybridRowPolar, // smoothed row normalization then nuclear-scaled right polar
};

const char* family_name(DescentFamily f);

struct TrialConfig {
    DescentFamily family = DescentFamily::SpectralIdentity;
    double gamma = 0.1;
    int steps = 1000;
    double damping = 1e-8;   // eps in (C + eps I)^{-1/2} for the one-sided families
    double smooth_eps = 0.5; // eps in eta(t) = 1/(t + eps)
    double bounded_lo = 0.5; // bounds for the RowNormBounded rule
    double bounded_hi = 2.0;
};

struct TrialStep {
    double f = 0.0;
    double grad_fro = 0.0;
    double grad_spec = 0.0;
    double grad_nuc = 0.0;
    int grad_rank = 0;
    double align = 0.0;    // <G, U>
    double upd_fro2 = 0.0; // |U|_F^2
    double bound_rhs = 0.0;
    double gap_ratio = -1.0; // (f_{k+1}-f*)/(f_k-f*); negative when the gap underflows
};

struct ConvergenceReport {
    std::vector<TrialStep> steps;
    double f_final = 0.0;
    double f_star = 0.0;
    int bound_violations = 0;    // quantitative per-step bound failures
    int monotone_violations = 0; // steps where f increased
    int violations = 0;          // sum of both
    double worst_gap_ratio = 0.0;
    double theory_rho = -1.0;           // contraction bound; < 0 when no PL constant
    double admissible_gamma_max = 0.0;  // from measured constants
    // measured run constants (family-dependent; unused fields stay zero)
    double c1 = 0.0, c2 = 0.0;
    double max_rank = 0.0;
    double max_row_norm = 0.0;
    double min_alignment = 0.0;
    double max_support = 0.0;
    double kappa_row = 0.0;
};

/// Runs T full-gradient steps W <- W - gamma * T(G) (no momentum), records the
/// trace, counts violations of the family's per-step descent bound, and, when
/// the loss carries a PL constant, compares observed gap contraction with the
/// theory contraction factor.
ConvergenceReport run_convergence_trial(const SyntheticLoss& loss, const Mat& w0, const TrialConfig& cfg);

} // namespace symopt
