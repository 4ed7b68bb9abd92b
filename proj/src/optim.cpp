#include "symopt/optim.hpp"

#include <cmath>

namespace symopt {

ScheduleSpec ScheduleSpec::warmup_cosine(int warmup, int total) {
    ScheduleSpec s;
    s.kind = ScheduleKind::WarmupCosine;
    s.warmup_steps = warmup;
    s.total_steps = total;
    s.validate();
    return s;
}

ScheduleSpec ScheduleSpec::stable_decay(double frac, int total) {
    ScheduleSpec s;
    s.kind = ScheduleKind::StableDecay;
    s.stable_frac = frac;
    s.total_steps = total;
    s.validate();
    return s;
}

void ScheduleSpec::validate() const {
    if (total_steps < 1) throw InvalidConfig("ScheduleSpec: total_steps must be >= 1");
    if (kind == ScheduleKind::WarmupCosine) {
        if (warmup_steps < 0 || warmup_steps >= total_steps)
            throw InvalidConfig("ScheduleSpec: warmup_steps must lie in [0, total_steps)");
    } else {
        if (stable_frac <= 0.0 || stable_frac >= 1.0)
            throw InvalidConfig("ScheduleSpec: stable_frac must lie in (0, 1)");
    }
}

double lr_at(int step, const ScheduleSpec& cfg, double lr0) {
    cfg.validate();
    if (step < 0 || step >= cfg.total_steps) throw InvalidConfig("lr_at: step out of range");
    if (cfg.kind == ScheduleKind::WarmupCosine) {
        if (step < cfg.warmup_steps) return lr0 * static_cast<double>(step) / cfg.warmup_steps;
        const double u = static_cast<double>(step - cfg.warmup_steps) / (cfg.total_steps - cfg.warmup_steps);
        return lr0 * 0.5 * (1.0 + std::cos(M_PI * u));
    }
    const double stable_end = cfg.stable_frac * cfg.total_steps;
    if (step < stable_end) return lr0;
    return lr0 * (1.0 - (step - stable_end) / (cfg.total_steps - stable_end));
}

void OptimConfig::validate() const {
    if (lr0 <= 0.0) throw InvalidConfig("OptimConfig: lr0 must be > 0");
    if (momentum_beta < 0.0 || momentum_beta >= 1.0) throw InvalidConfig("OptimConfig: beta must lie in [0, 1)");
    if (alpha < 0.0 || alpha > 1.0) throw InvalidConfig("OptimConfig: alpha must lie in [0, 1]");
    if (eps <= 0.0) throw InvalidConfig("OptimConfig: eps must be > 0");
    if (weight_decay < 0.0) throw InvalidConfig("OptimConfig: negative weight decay");
    update.validate();
    schedule.validate();
}

Mat momentum_direction(OptimState& state, const Mat& g, const OptimConfig& cfg) {
    if (!state.momentum.same_shape(g)) throw ShapeError("momentum_direction: buffer/gradient shape mismatch");
    const double beta = cfg.momentum_beta;
    switch (cfg.momentum_kind) {
        case MomentumKind::EMA:
            state.momentum = beta * state.momentum + (1.0 - beta) * g;
            return state.momentum;
        case MomentumKind::Polyak:
            state.momentum = beta * state.momentum + g;
            return state.momentum;
        case MomentumKind::Nesterov:
            state.momentum = beta * state.momentum + g;
            return g + beta * state.momentum;
    }
    throw InvalidConfig("momentum_direction: unknown kind");
}

namespace {

struct DirectionResult {
    Mat u;
    std::optional<double> nu;
};

// Gram-side inverse square root with trace scale. `left` selects C = M M^T.
DirectionResult one_sided_direction(const Mat& mbar, bool left, double eps, double alpha,
                                    const SolverOptions& solver) {
    DirectionResult out{Mat(), std::nullopt};
    double nu = 0.0;
    Mat scaled;
    if (solver.kind == SolverKind::Exact) {
        const SvdResult s = svd(mbar);
        // nu = tr(C (C + eps I)^{-1/2}) = sum lambda_i / sqrt(lambda_i + eps)
        std::vector<double> mapped(s.sigma.size());
        for (std::size_t k = 0; k < s.sigma.size(); ++k) {
            const double lam = s.sigma[k] * s.sigma[k];
            nu += lam / std::sqrt(lam + eps);
            mapped[k] = s.sigma[k] / std::sqrt(lam + eps);
        }
        scaled = Mat(mbar.rows(), mbar.cols());
        for (std::size_t k = 0; k < mapped.size(); ++k) {
            if (mapped[k] == 0.0) continue;
            for (int i = 0; i < mbar.rows(); ++i)
                for (int j = 0; j < mbar.cols(); ++j)
                    scaled(i, j) += mapped[k] * s.u(i, static_cast<int>(k)) * s.v(j, static_cast<int>(k));
        }
    } else {
        const Mat c = left ? mbar * transpose(mbar) : transpose(mbar) * mbar;
        auto [r, rep] = polar_express_inv_sqrt(c, solver.coeffs, solver.steps, eps);
        const Mat cr = c * r;
        for (int i = 0; i < cr.rows(); ++i) nu += cr(i, i);
        scaled = left ? r * mbar : mbar * r;
    }
    nu = std::max(nu, eps);
    out.nu = nu;
    out.u = std::pow(nu, alpha) * scaled;
    return out;
}

Mat scale_rows_by(const Mat& d, const RowScaleSpec& eta) {
    Mat out = d;
    for (int i = 0; i < d.rows(); ++i) {
        const double s = eta.scale(row_norm(d, i));
        for (int j = 0; j < d.cols(); ++j) out(i, j) *= s;
    }
    return out;
}

// Working-direction centering and final projection per layer geometry.
Mat project(const Mat& x, const LayerGeometry& geom) {
    return geom.is_quotient() ? center_rows(x) : x;
}

DirectionResult build_direction(const Mat& dir, const OptimConfig& cfg) {
    const UpdateSpec& spec = cfg.update;
    const LayerGeometry& geom = spec.geometry;

    if (geom.tag == GeometryTag::TransposedLPRO) {
        OptimConfig inner_cfg = cfg;
        inner_cfg.update.geometry = LayerGeometry::lpro();
        DirectionResult inner = build_direction(transpose(dir), inner_cfg);
        return {transpose(inner.u), inner.nu};
    }

    const Mat mbar = project(dir, geom);
    const bool left_side = geom.tag == GeometryTag::RouterQuotient;

    if (is_zero(mbar)) {
        const bool needs_polar = spec.klass == UpdateClass::NuclearScaledPolar ||
                                 spec.klass == UpdateClass::SignDiagLift ||
                                 (spec.klass == UpdateClass::Spectral && spec.spectral.kind == SpectralKind::Polar);
        if (!needs_polar) return {Mat(dir.rows(), dir.cols()), std::nullopt};
    }

    switch (spec.klass) {
        case UpdateClass::Spectral:
            return {spectral_update(mbar, spec.spectral, spec.solver), std::nullopt};
        case UpdateClass::SignDiagLift:
            return {sign_diag_lift_update(mbar), std::nullopt};
        case UpdateClass::NuclearScaledPolar: {
            if (spec.solver.kind == SolverKind::Exact)
                return {nuclear_scaled_polar_update(mbar, spec.solver), std::nullopt};
            DirectionResult r = one_sided_direction(mbar, dir.rows() < dir.cols(), cfg.eps, 1.0, spec.solver);
            r.u = project(r.u, geom);
            return r;
        }
        case UpdateClass::RightSpectral: {
            DirectionResult r = one_sided_direction(mbar, false, cfg.eps, cfg.alpha, spec.solver);
            r.u = project(r.u, geom);
            return r;
        }
        case UpdateClass::LeftSpectral: {
            DirectionResult r = one_sided_direction(mbar, true, cfg.eps, cfg.alpha, spec.solver);
            r.u = project(r.u, geom);
            return r;
        }
        case UpdateClass::RowNorm:
            return {project(scale_rows_by(mbar, spec.rowscale), geom), std::nullopt};
        case UpdateClass::HybridRowThenSpectral: {
            const Mat z = project(scale_rows_by(mbar, spec.rowscale), geom);
            if (is_zero(z)) return {Mat(dir.rows(), dir.cols()), std::nullopt};
            DirectionResult r = one_sided_direction(z, false, cfg.eps, cfg.alpha, spec.solver);
            r.u = project(r.u, geom);
            return r;
        }
        case UpdateClass::HybridSpectralThenRow: {
            DirectionResult r = one_sided_direction(mbar, left_side, cfg.eps, cfg.alpha, spec.solver);
            const Mat z = project(r.u, geom);
            return {project(scale_rows_by(z, spec.rowscale), geom), r.nu};
        }
    }
    throw InvalidConfig("step: unsupported update class");
}

} // namespace

std::pair<Mat, StepReport> step(const Mat& w, OptimState& state, const Mat& g, const OptimConfig& cfg) {
    cfg.validate();
    if (!w.same_shape(g)) throw ShapeError("step: parameter/gradient shape mismatch");
    if (cfg.update.geometry.is_quotient() && w.rows() != cfg.update.geometry.quotient_rows)
        throw ShapeError("step: parameter rows do not match quotient geometry");

    const double gamma = lr_at(static_cast<int>(state.step), cfg.schedule, cfg.lr0);
    const Mat dir = momentum_direction(state, g, cfg);
    DirectionResult res = build_direction(dir, cfg);

    Mat next = (1.0 - gamma * cfg.weight_decay) * w;
    next -= gamma * res.u;
    state.step += 1;

    StepReport rep;
    rep.gamma_k = gamma;
    rep.nu_k = res.nu;
    rep.update_fro_norm = fro_norm(res.u);
    return {std::move(next), rep};
}

Mat adamw_step(const Mat& w, AdamState& state, const Mat& g, double lr, double beta1, double beta2,
               double eps, double weight_decay) {
    if (!w.same_shape(g) || !state.m.same_shape(g) || !state.v.same_shape(g))
        throw ShapeError("adamw_step: shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    Mat next = (1.0 - lr * weight_decay) * w;
    for (std::size_t i = 0; i < w.data().size(); ++i) {
        const double gi = g.data()[i];
        state.m.data()[i] = beta1 * state.m.data()[i] + (1.0 - beta1) * gi;
        state.v.data()[i] = beta2 * state.v.data()[i] + (1.0 - beta2) * gi * gi;
        const double mhat = state.m.data()[i] / bc1;
        const double vhat = state.v.data()[i] / bc2;
        next.data()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    return next;
}

} // namespace symopt
