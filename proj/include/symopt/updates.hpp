#pragma once

#include "symopt/mat.hpp"
#include "symopt/polar_iter.hpp"
#include "symopt/svd.hpp"

namespace symopt {

/// A spectral map acts on singular values only. Every kind is described by
/// its effective action psi on a singular value sigma:
///   Identity      sigma            (returns the input direction unchanged)
///   Polar         1 on sigma > 0   (pseudo-inverse semantics at sigma = 0)
///   Power(p)      sigma^p, p in [0, 1]
///   DampedInvSqrt sigma / sqrt(sigma^2 + eps)
/// The same map drives one-sided updates through the Gram matrix: a right
/// update D Phi(D^T D) with eigenvalue map phi(lambda) equals the spectral
/// map psi(sigma) = sigma * phi(sigma^2) applied to D.
enum class SpectralKind { Identity, Polar, Power, DampedInvSqrt };

struct SpectralMapSpec {
    SpectralKind kind = SpectralKind::Identity;
    double power = 1.0;
    double eps = 0.0;

    static SpectralMapSpec identity() { return {}; }
    static SpectralMapSpec polar() { return {SpectralKind::Polar, 1.0, 0.0}; }
    static SpectralMapSpec power_map(double p);
    static SpectralMapSpec damped_inv_sqrt(double eps);

    void validate() const;
};

enum class RowScaleKind { SmoothedNormalize, Bounded };

/// Scalar row-scaling rule eta applied to each row's Euclidean norm.
/// SmoothedNormalize: eta(t) = 1/(t + eps); zero rows map to zero because
/// eta(0) * 0 = 0 even though eta(0) = 1/eps is large.
/// Bounded: eta(t) = clamp(1 / max(t, 1/lo), lo, hi).
struct RowScaleSpec {
    RowScaleKind kind = RowScaleKind::SmoothedNormalize;
    double eps = 1e-8;
    double lo = 0.0;
    double hi = 0.0;

    static RowScaleSpec smoothed(double eps = 1e-8);
    static RowScaleSpec bounded(double lo, double hi);

    double scale(double t) const;
    void validate() const;
};

enum class GeometryTag { BiOrthogonal, LPRO, TransposedLPRO, LMHeadQuotient, RouterQuotient };

/// Symmetry tag of a parameter block; quotient tags carry the number of
/// vocabulary rows (v) or experts (e), which must match the operand.
struct LayerGeometry {
    GeometryTag tag = GeometryTag::BiOrthogonal;
    int quotient_rows = 0;

    static LayerGeometry bi_orthogonal() { return {GeometryTag::BiOrthogonal, 0}; }
    static LayerGeometry lpro() { return {GeometryTag::LPRO, 0}; }
    static LayerGeometry transposed_lpro() { return {GeometryTag::TransposedLPRO, 0}; }
    static LayerGeometry lm_head(int vocab_rows) { return {GeometryTag::LMHeadQuotient, vocab_rows}; }
    static LayerGeometry router(int experts) { return {GeometryTag::RouterQuotient, experts}; }

    bool is_quotient() const { return tag == GeometryTag::LMHeadQuotient || tag == GeometryTag::RouterQuotient; }
};

/// For RouterQuotient geometry the spectral stage of the hybrid is the
/// left-sided one, so HybridSpectralThenRow is the router's
/// left-spectral/row-norm order.
enum class UpdateClass {
    Spectral,
    NuclearScaledPolar,
    RightSpectral,
    LeftSpectral,
    RowNorm,
    HybridRowThenSpectral,
    HybridSpectralThenRow,
    SignDiagLift,
};

enum class SolverKind { Exact, Iterative };

struct SolverOptions {
    SolverKind kind = SolverKind::Exact;
    CoeffTable coeffs = CoeffTable::baseline_cubic();
    int steps = 12;

    static SolverOptions exact() { return {}; }
    static SolverOptions iterative(int steps = 12);
};

struct UpdateSpec {
    LayerGeometry geometry;
    UpdateClass klass = UpdateClass::Spectral;
    SpectralMapSpec spectral;
    RowScaleSpec rowscale;
    SolverOptions solver;

    void validate() const; // throws InvalidConfig when class and geometry disagree
};

// --- update maps ----------------------------------------------------------

/// U Diag(psi(sigma)) V^T. Identity kind returns D itself, bit-exact.
Mat spectral_update(const Mat& d, const SpectralMapSpec& psi, const SolverOptions& solver);

/// |D|_* times the rank-truncated polar factor of D.
Mat nuclear_scaled_polar_update(const Mat& d, const SolverOptions& solver);

/// D Phi(D^T D): acts through the right Gram matrix.
Mat right_spectral_update(const Mat& d, const SpectralMapSpec& phi, const SolverOptions& solver);

/// Psi(D D^T) D; equals right_spectral_update(D^T)^T exactly.
Mat left_spectral_update(const Mat& d, const SpectralMapSpec& psi, const SolverOptions& solver);

/// Row i scaled by eta(|row i|_2).
Mat row_norm_update(const Mat& d, const RowScaleSpec& eta);

enum class HybridOrder { RowThenSpectral, SpectralThenRow };

Mat hybrid_update(const Mat& d, HybridOrder order, const RowScaleSpec& eta, const SpectralMapSpec& phi,
                  const SolverOptions& solver);

/// LM-head quotient update: centers the direction, applies the class map with
/// re-centering after every rowwise nonlinear stage and on the final output.
/// Guarantees 1^T output = 0 up to roundoff. `klass` must be RowNorm,
/// RightSpectral, or one of the hybrids.
Mat lm_head_update(const Mat& d, UpdateClass klass, const RowScaleSpec& eta, const SpectralMapSpec& phi,
                   const SolverOptions& solver);

/// Router quotient update on the centered expert geometry. `klass` must be
/// RowNorm, LeftSpectral, or HybridSpectralThenRow (left-spectral then row).
Mat router_update(const Mat& d, UpdateClass klass, const RowScaleSpec& eta, const SpectralMapSpec& psi,
                  const SolverOptions& solver);

/// Applies an LPRO update to D^T and transposes back (column geometry).
Mat transposed_lpro_update(const Mat& d, const UpdateSpec& inner);

/// Entrywise sign via the diagonal lift: places vec(D) on the diagonal of an
/// mn x mn matrix, takes its polar factor, and reshapes the diagonal back.
/// Exact on matrices with no zero entries (which are required).
Mat sign_diag_lift_update(const Mat& d);

/// Dispatch by geometry and class. For an all-zero direction every class
/// returns the zero matrix, except those that need a polar factor of zero
/// (Polar spectral kind, NuclearScaledPolar, SignDiagLift), which throw.
Mat apply_update(const Mat& d, const UpdateSpec& spec);

} // namespace symopt
