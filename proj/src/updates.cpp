#include "symopt/updates.hpp"

#include <cmath>

namespace symopt {

SpectralMapSpec SpectralMapSpec::power_map(double p) {
    SpectralMapSpec s{SpectralKind::Power, p, 0.0};
    s.validate();
    return s;
}

SpectralMapSpec SpectralMapSpec::damped_inv_sqrt(double eps) {
    return {SpectralKind::DampedInvSqrt, 1.0, eps};
}

void SpectralMapSpec::validate() const {
    if (kind == SpectralKind::Power && (power < 0.0 || power > 1.0))
        throw InvalidConfig("SpectralMapSpec: power must lie in [0, 1]");
    if (kind == SpectralKind::DampedInvSqrt && eps < 0.0)
        throw InvalidConfig("SpectralMapSpec: negative damping");
}

RowScaleSpec RowScaleSpec::smoothed(double eps) {
    RowScaleSpec s;
    s.kind = RowScaleKind::SmoothedNormalize;
    s.eps = eps;
    s.validate();
    return s;
}

RowScaleSpec RowScaleSpec::bounded(double lo, double hi) {
    RowScaleSpec s;
    s.kind = RowScaleKind::Bounded;
    s.lo = lo;
    s.hi = hi;
    s.validate();
    return s;
}

double RowScaleSpec::scale(double t) const {
    if (kind == RowScaleKind::SmoothedNormalize) return 1.0 / (t + eps);
    const double raw = 1.0 / std::max(t, 1.0 / lo);
    return std::min(std::max(raw, lo), hi);
}

void RowScaleSpec::validate() const {
    if (kind == RowScaleKind::SmoothedNormalize) {
        if (eps <= 0.0) throw InvalidConfig("RowScaleSpec: smoothing eps must be > 0");
    } else {
        if (lo <= 0.0 || hi < lo) throw InvalidConfig("RowScaleSpec: need 0 < lo <= hi");
    }
}

SolverOptions SolverOptions::iterative(int steps) {
    SolverOptions s;
    s.kind = SolverKind::Iterative;
    s.steps = steps;
    return s;
}

void UpdateSpec::validate() const {
    spectral.validate();
    rowscale.validate();
    if (solver.steps < 1) throw InvalidConfig("UpdateSpec: solver steps must be >= 1");
    const auto bad = [this] {
        throw InvalidConfig("UpdateSpec: update class not admissible for layer geometry");
    };
    switch (geometry.tag) {
        case GeometryTag::BiOrthogonal:
            if (klass == UpdateClass::RowNorm || klass == UpdateClass::HybridRowThenSpectral ||
                klass == UpdateClass::HybridSpectralThenRow)
                bad();
            break;
        case GeometryTag::LPRO:
        case GeometryTag::TransposedLPRO:
        case GeometryTag::LMHeadQuotient:
            if (klass != UpdateClass::RowNorm && klass != UpdateClass::RightSpectral &&
                klass != UpdateClass::HybridRowThenSpectral && klass != UpdateClass::HybridSpectralThenRow)
                bad();
            break;
        case GeometryTag::RouterQuotient:
            if (klass != UpdateClass::RowNorm && klass != UpdateClass::LeftSpectral &&
                klass != UpdateClass::HybridSpectralThenRow)
                bad();
            break;
    }
    if (geometry.is_quotient() && geometry.quotient_rows < 1)
        throw InvalidConfig("UpdateSpec: quotient geometry needs a positive row count");
}

namespace {

// Effective map on a singular value; sigma_max scales the rank threshold for
// pseudo-inverse kinds.
double map_sigma(const SpectralMapSpec& psi, double sigma, double sigma_max) {
    switch (psi.kind) {
        case SpectralKind::Identity:
            return sigma;
        case SpectralKind::Polar:
            return sigma > kRankTol * sigma_max ? 1.0 : 0.0;
        case SpectralKind::Power:
            return sigma > 0.0 ? std::pow(sigma, psi.power) : 0.0;
        case SpectralKind::DampedInvSqrt: {
            if (psi.eps == 0.0) {
                if (sigma <= kRankTol * sigma_max)
                    throw SingularGram("spectral map: inverse square root of singular Gram with eps=0");
                return 1.0;
            }
            return sigma / std::sqrt(sigma * sigma + psi.eps);
        }
    }
    throw InvalidConfig("spectral map: unknown kind");
}

Mat rebuild_from_svd(const SvdResult& s, const std::vector<double>& mapped, int rows, int cols) {
    Mat out(rows, cols);
    for (std::size_t k = 0; k < mapped.size(); ++k) {
        if (mapped[k] == 0.0) continue;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) out(i, j) += mapped[k] * s.u(i, static_cast<int>(k)) * s.v(j, static_cast<int>(k));
    }
    return out;
}

Mat spectral_exact(const Mat& d, const SpectralMapSpec& psi) {
    const SvdResult s = svd(d);
    const double sigma_max = s.sigma.empty() ? 0.0 : s.sigma[0];
    std::vector<double> mapped(s.sigma.size());
    for (std::size_t k = 0; k < s.sigma.size(); ++k) mapped[k] = map_sigma(psi, s.sigma[k], sigma_max);
    return rebuild_from_svd(s, mapped, d.rows(), d.cols());
}

// Iterative route for the damped inverse-square-root map, through the smaller
// Gram side.
Mat damped_iterative(const Mat& d, double eps, const SolverOptions& solver) {
    if (d.rows() >= d.cols()) {
        const Mat gram = transpose(d) * d;
        auto [z, rep] = polar_express_inv_sqrt(gram, solver.coeffs, solver.steps, eps);
        return d * z;
    }
    const Mat gram = d * transpose(d);
    auto [z, rep] = polar_express_inv_sqrt(gram, solver.coeffs, solver.steps, eps);
    return z * d;
}

Mat spectral_iterative(const Mat& d, const SpectralMapSpec& psi, const SolverOptions& solver) {
    switch (psi.kind) {
        case SpectralKind::Identity:
            return d;
        case SpectralKind::Polar:
            return ns_polar(d, solver.coeffs, solver.steps).first;
        case SpectralKind::DampedInvSqrt:
            return damped_iterative(d, psi.eps, solver);
        case SpectralKind::Power:
            throw InvalidConfig("iterative solver does not support power maps");
    }
    throw InvalidConfig("spectral map: unknown kind");
}

Mat apply_spectral(const Mat& d, const SpectralMapSpec& psi, const SolverOptions& solver) {
    psi.validate();
    if (psi.kind == SpectralKind::Identity) return d;
    if (psi.kind == SpectralKind::Polar && is_zero(d))
        throw ZeroDirection("spectral update: polar of the zero matrix");
    if (solver.kind == SolverKind::Exact) return spectral_exact(d, psi);
    return spectral_iterative(d, psi, solver);
}

Mat scale_rows(const Mat& d, const RowScaleSpec& eta) {
    Mat out = d;
    for (int i = 0; i < d.rows(); ++i) {
        const double s = eta.scale(row_norm(d, i));
        for (int j = 0; j < d.cols(); ++j) out(i, j) *= s;
    }
    return out;
}

} // namespace

Mat spectral_update(const Mat& d, const SpectralMapSpec& psi, const SolverOptions& solver) {
    if (!is_finite(d)) throw InvalidInput("spectral_update: non-finite input");
    return apply_spectral(d, psi, solver);
}

Mat nuclear_scaled_polar_update(const Mat& d, const SolverOptions& solver) {
    if (!is_finite(d)) throw InvalidInput("nuclear_scaled_polar_update: non-finite input");
    if (is_zero(d)) throw ZeroDirection("nuclear_scaled_polar_update: zero direction");
    if (solver.kind == SolverKind::Exact) {
        const SvdResult s = svd(d);
        double nuc = 0.0;
        for (double sig : s.sigma) nuc += sig;
        const int r = numerical_rank(s.sigma);
        std::vector<double> mapped(s.sigma.size(), 0.0);
        for (int k = 0; k < r; ++k) mapped[static_cast<std::size_t>(k)] = nuc;
        return rebuild_from_svd(s, mapped, d.rows(), d.cols());
    }
    // Iterative route: nu = tr(C (C + eps I)^{-1/2}) ~ |D|_* with a small
    // damping floor, times the Gram Newton-Schulz polar approximation.
    const double eps = 1e-12;
    const bool tall = d.rows() >= d.cols();
    const Mat gram = tall ? transpose(d) * d : d * transpose(d);
    auto [z, rep] = polar_express_inv_sqrt(gram, solver.coeffs, solver.steps, eps);
    double nu = 0.0;
    const Mat cz = gram * z;
    for (int i = 0; i < cz.rows(); ++i) nu += cz(i, i);
    Mat pol = tall ? d * z : z * d;
    return nu * pol;
}

Mat right_spectral_update(const Mat& d, const SpectralMapSpec& phi, const SolverOptions& solver) {
    if (!is_finite(d)) throw InvalidInput("right_spectral_update: non-finite input");
    return apply_spectral(d, phi, solver);
}

Mat left_spectral_update(const Mat& d, const SpectralMapSpec& psi, const SolverOptions& solver) {
    return transpose(right_spectral_update(transpose(d), psi, solver));
}

Mat row_norm_update(const Mat& d, const RowScaleSpec& eta) {
    if (!is_finite(d)) throw InvalidInput("row_norm_update: non-finite input");
    eta.validate();
    return scale_rows(d, eta);
}

Mat hybrid_update(const Mat& d, HybridOrder order, const RowScaleSpec& eta, const SpectralMapSpec& phi,
                  const SolverOptions& solver) {
    if (order == HybridOrder::RowThenSpectral)
        return right_spectral_update(row_norm_update(d, eta), phi, solver);
    return row_norm_update(right_spectral_update(d, phi, solver), eta);
}

Mat lm_head_update(const Mat& d, UpdateClass klass, const RowScaleSpec& eta, const SpectralMapSpec& phi,
                   const SolverOptions& solver) {
    if (!is_finite(d)) throw InvalidInput("lm_head_update: non-finite input");
    const Mat dc = center_rows(d);
    switch (klass) {
        case UpdateClass::RowNorm:
            return center_rows(scale_rows(dc, eta));
        case UpdateClass::RightSpectral:
            return center_rows(right_spectral_update(dc, phi, solver));
        case UpdateClass::HybridRowThenSpectral: {
            const Mat z = center_rows(scale_rows(dc, eta));
            return center_rows(right_spectral_update(z, phi, solver));
        }
        case UpdateClass::HybridSpectralThenRow: {
            const Mat z = center_rows(right_spectral_update(dc, phi, solver));
            return center_rows(scale_rows(z, eta));
        }
        default:
            throw InvalidConfig("lm_head_update: class must be RowNorm, RightSpectral, or a hybrid");
    }
}

Mat router_update(const Mat& d, UpdateClass klass, const RowScaleSpec& eta, const SpectralMapSpec& psi,
                  const SolverOptions& solver) {
    if (!is_finite(d)) throw InvalidInput("router_update: non-finite input");
    const Mat dc = center_rows(d);
    switch (klass) {
        case UpdateClass::RowNorm:
            return center_rows(scale_rows(dc, eta));
        case UpdateClass::LeftSpectral:
            return center_rows(left_spectral_update(dc, psi, solver));
        case UpdateClass::HybridSpectralThenRow: {
            const Mat z = center_rows(left_spectral_update(dc, psi, solver));
            return center_rows(scale_rows(z, eta));
        }
        default:
            throw InvalidConfig("router_update: class must be RowNorm, LeftSpectral, or the left hybrid");
    }
}

Mat transposed_lpro_update(const Mat& d, const UpdateSpec& inner) {
    if (inner.geometry.tag != GeometryTag::LPRO)
        throw InvalidConfig("transposed_lpro_update: inner spec must have LPRO geometry");
    return transpose(apply_update(transpose(d), inner));
}

Mat sign_diag_lift_update(const Mat& d) {
    if (!is_finite(d)) throw InvalidInput("sign_diag_lift_update: non-finite input");
    const long nn = static_cast<long>(d.rows()) * d.cols();
    for (double v : d.data())
        if (v == 0.0) throw ZeroEntry("sign_diag_lift_update: zero entry");
    Mat lift(static_cast<int>(nn), static_cast<int>(nn));
    for (long k = 0; k < nn; ++k) lift(static_cast<int>(k), static_cast<int>(k)) = d.data()[static_cast<std::size_t>(k)];
    const Mat pol = polar_exact(lift);
    Mat out(d.rows(), d.cols());
    for (long k = 0; k < nn; ++k)
        out.data()[static_cast<std::size_t>(k)] = pol(static_cast<int>(k), static_cast<int>(k));
    return out;
}

Mat apply_update(const Mat& d, const UpdateSpec& spec) {
    spec.validate();
    if (spec.geometry.is_quotient() && d.rows() != spec.geometry.quotient_rows)
        throw ShapeError("apply_update: operand rows do not match quotient geometry");

    if (is_zero(d)) {
        const bool needs_polar = spec.klass == UpdateClass::NuclearScaledPolar ||
                                 spec.klass == UpdateClass::SignDiagLift ||
                                 ((spec.klass == UpdateClass::Spectral || spec.klass == UpdateClass::RightSpectral ||
                                   spec.klass == UpdateClass::LeftSpectral) &&
                                  spec.spectral.kind == SpectralKind::Polar);
        if (!needs_polar) return Mat(d.rows(), d.cols());
    }

    switch (spec.geometry.tag) {
        case GeometryTag::BiOrthogonal:
            switch (spec.klass) {
                case UpdateClass::Spectral:
                    return spectral_update(d, spec.spectral, spec.solver);
                case UpdateClass::NuclearScaledPolar:
                    return nuclear_scaled_polar_update(d, spec.solver);
                case UpdateClass::RightSpectral:
                    return right_spectral_update(d, spec.spectral, spec.solver);
                case UpdateClass::LeftSpectral:
                    return left_spectral_update(d, spec.spectral, spec.solver);
                case UpdateClass::SignDiagLift:
                    return sign_diag_lift_update(d);
                default:
                    break;
            }
            break;
        case GeometryTag::LPRO:
            switch (spec.klass) {
                case UpdateClass::RowNorm:
                    return row_norm_update(d, spec.rowscale);
                case UpdateClass::RightSpectral:
                    return right_spectral_update(d, spec.spectral, spec.solver);
                case UpdateClass::HybridRowThenSpectral:
                    return hybrid_update(d, HybridOrder::RowThenSpectral, spec.rowscale, spec.spectral, spec.solver);
                case UpdateClass::HybridSpectralThenRow:
                    return hybrid_update(d, HybridOrder::SpectralThenRow, spec.rowscale, spec.spectral, spec.solver);
                default:
                    break;
            }
            break;
        case GeometryTag::TransposedLPRO: {
            UpdateSpec inner = spec;
            inner.geometry = LayerGeometry::lpro();
            return transposed_lpro_update(d, inner);
        }
        case GeometryTag::LMHeadQuotient:
            return lm_head_update(d, spec.klass, spec.rowscale, spec.spectral, spec.solver);
        case GeometryTag::RouterQuotient:
            return router_update(d, spec.klass, spec.rowscale, spec.spectral, spec.solver);
    }
    throw InvalidConfig("apply_update: unsupported class/geometry combination");
}

} // namespace symopt
