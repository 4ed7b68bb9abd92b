#include "symopt/losses.hpp"

#include <cmath>

#include "symopt/svd.hpp"

namespace symopt {

SyntheticLoss SyntheticLoss::quadratic_fro(Mat w_star, double l) {
    if (l <= 0.0) throw InvalidConfig("quadratic_fro: L must be > 0");
    SyntheticLoss loss;
    loss.kind = LossKind::QuadraticFro;
    loss.w_star = std::move(w_star);
    loss.scale = l;
    loss.known_l = l;
    loss.known_mu = l;
    return loss;
}

SyntheticLoss SyntheticLoss::quadratic_aniso(Mat a, Mat w_star) {
    if (a.rows() != a.cols()) throw ShapeError("quadratic_aniso: operator not square");
    if (a.rows() != w_star.rows()) throw ShapeError("quadratic_aniso: operator/minimizer mismatch");
    SyntheticLoss loss;
    loss.kind = LossKind::QuadraticAniso;
    loss.w_star = std::move(w_star);
    loss.a = std::move(a);
    const EigResult e = eig_sym(loss.a);
    const double lmax = e.lambda.front();
    const double lmin = e.lambda.back();
    if (lmin <= 0.0) throw InvalidConfig("quadratic_aniso: operator must be positive definite");
    loss.known_l = lmax;
    loss.known_mu = lmin;
    return loss;
}

SyntheticLoss SyntheticLoss::low_rank_factor(Mat y, int cols) {
    if (y.rows() != y.cols()) throw ShapeError("low_rank_factor: target not square");
    if (cols < 1) throw InvalidConfig("low_rank_factor: factor width must be >= 1");
    SyntheticLoss loss;
    loss.kind = LossKind::LowRankFactor;
    loss.y = std::move(y);
    loss.scale = static_cast<double>(cols);
    loss.known_l = 0.0;
    loss.known_mu = 0.0;
    return loss;
}

std::pair<double, Mat> loss_and_grad(const SyntheticLoss& loss, const Mat& w) {
    switch (loss.kind) {
        case LossKind::QuadraticFro: {
            if (!w.same_shape(loss.w_star)) throw ShapeError("loss_and_grad: shape mismatch");
            const Mat diff = w - loss.w_star;
            const double f = 0.5 * loss.scale * dot(diff, diff);
            return {f, loss.scale * diff};
        }
        case LossKind::QuadraticAniso: {
            if (!w.same_shape(loss.w_star)) throw ShapeError("loss_and_grad: shape mismatch");
            const Mat diff = w - loss.w_star;
            const Mat adiff = loss.a * diff;
            return {0.5 * dot(diff, adiff), adiff};
        }
        case LossKind::LowRankFactor: {
            if (w.rows() != loss.y.rows()) throw ShapeError("loss_and_grad: shape mismatch");
            const Mat res = w * transpose(w) - loss.y;
            return {0.25 * dot(res, res), res * w};
        }
    }
    throw InvalidConfig("loss_and_grad: unknown loss kind");
}

const char* family_name(DescentFamily f) {
    switch (f) {
        case DescentFamily::SpectralIdentity: return "spectral_identity";
        case DescentFamily::NuclearPolar: return "nuclear_polar";
        case DescentFamily::RightSpectralDamped: return "right_spectral_damped";
        case DescentFamily::LeftSpectralDamped: return "left_spectral_damped";
        case DescentFamily::RowNormBounded: return "row_norm_bounded";
        case DescentFamily::RowNormSmoothed: return "row_norm_smoothed";
        case DescentFamily::HybridPolarRow: return "hybrid_polar_row";
        case DescentFamily::HybridRowPolar: return "hybrid_row_polar";
    }
    return "unknown";
}

namespace {

// Rows below this relative threshold count as zero support.
constexpr double kRowSupportTol = 1e-10;

Mat unit_normalize_rows(const Mat& z, int* support) {
    double max_norm = 0.0;
    for (int i = 0; i < z.rows(); ++i) max_norm = std::max(max_norm, row_norm(z, i));
    Mat out(z.rows(), z.cols());
    int s = 0;
    for (int i = 0; i < z.rows(); ++i) {
        const double n = row_norm(z, i);
        if (n > kRowSupportTol * max_norm && n > 0.0) {
            ++s;
            for (int j = 0; j < z.cols(); ++j) out(i, j) = z(i, j) / n;
        }
    }
    if (support) *support = s;
    return out;
}

struct FamilyStep {
    Mat u;
    // per-step quantities feeding the family bound
    double a_hyb = 0.0;
    int s_row = 0;
    double a_rowhyb = 0.0;
    int r_rowhyb = 0;
    double gtilde_nuc = 0.0;
    double min_eta = 0.0;
    double max_eta = 0.0;
};

FamilyStep family_update(const Mat& g, const TrialConfig& cfg) {
    FamilyStep out;
    const SolverOptions exact = SolverOptions::exact();
    switch (cfg.family) {
        case DescentFamily::SpectralIdentity:
            out.u = g;
            return out;
        case DescentFamily::NuclearPolar: {
            if (is_zero(g)) {
                out.u = Mat(g.rows(), g.cols());
                return out;
            }
            out.u = nuclear_scaled_polar_update(g, exact);
            return out;
        }
        case DescentFamily::RightSpectralDamped:
            out.u = right_spectral_update(g, SpectralMapSpec::damped_inv_sqrt(cfg.damping), exact);
            return out;
        case DescentFamily::LeftSpectralDamped:
            out.u = left_spectral_update(g, SpectralMapSpec::damped_inv_sqrt(cfg.damping), exact);
            return out;
        case DescentFamily::RowNormBounded: {
            const RowScaleSpec eta = RowScaleSpec::bounded(cfg.bounded_lo, cfg.bounded_hi);
            out.u = row_norm_update(g, eta);
            out.min_eta = cfg.bounded_hi;
            out.max_eta = cfg.bounded_lo;
            for (int i = 0; i < g.rows(); ++i) {
                const double e = eta.scale(row_norm(g, i));
                out.min_eta = std::min(out.min_eta, e);
                out.max_eta = std::max(out.max_eta, e);
            }
            return out;
        }
        case DescentFamily::RowNormSmoothed: {
            const RowScaleSpec eta = RowScaleSpec::smoothed(cfg.smooth_eps);
            out.u = row_norm_update(g, eta);
            return out;
        }
        case DescentFamily::HybridPolarRow: {
            if (is_zero(g)) {
                out.u = Mat(g.rows(), g.cols());
                return out;
            }
            const Mat z = right_spectral_update(g, SpectralMapSpec::polar(), exact);
            const Mat t_hyb = unit_normalize_rows(z, &out.s_row);
            const double nuc = norms(g).nuclear;
            out.a_hyb = dot(g, t_hyb) / nuc;
            out.u = nuc * t_hyb;
            return out;
        }
        case DescentFamily::HybridRowPolar: {
            const Mat gtilde = row_norm_update(g, RowScaleSpec::smoothed(cfg.smooth_eps));
            const Mat pol = polar_exact_truncated(gtilde);
            out.gtilde_nuc = norms(gtilde).nuclear;
            out.r_rowhyb = numerical_rank(gtilde);
            out.a_rowhyb = out.gtilde_nuc > 0.0 ? dot(g, pol) / out.gtilde_nuc : 0.0;
            out.u = out.gtilde_nuc * pol;
            return out;
        }
    }
    throw InvalidConfig("family_update: unknown family");
}

} // namespace

ConvergenceReport run_convergence_trial(const SyntheticLoss& loss, const Mat& w0, const TrialConfig& cfg) {
    if (cfg.gamma <= 0.0) throw InvalidConfig("run_convergence_trial: gamma must be > 0");
    if (cfg.steps < 1) throw InvalidConfig("run_convergence_trial: steps must be >= 1");
    const double l_smooth = loss.known_l;
    if (l_smooth <= 0.0) throw InvalidConfig("run_convergence_trial: loss must carry a smoothness constant");

    ConvergenceReport rep;
    rep.f_star = loss.f_star;
    Mat w = w0;
    std::vector<FamilyStep> fam;
    fam.reserve(static_cast<std::size_t>(cfg.steps));
    rep.steps.reserve(static_cast<std::size_t>(cfg.steps));

    double f_next = 0.0;
    double initial_gap = 0.0;
    for (int k = 0; k < cfg.steps; ++k) {
        auto [f, g] = loss_and_grad(loss, w);
        if (k == 0) initial_gap = f - loss.f_star;
        TrialStep ts;
        ts.f = f;
        ts.grad_fro = fro_norm(g);
        if (ts.grad_fro > 0.0) {
            const Norms n = norms(g);
            ts.grad_spec = n.spectral;
            ts.grad_nuc = n.nuclear;
            ts.grad_rank = numerical_rank(g);
        }
        FamilyStep fs = family_update(g, cfg);
        ts.align = dot(g, fs.u);
        ts.upd_fro2 = dot(fs.u, fs.u);
        for (int i = 0; i < g.rows(); ++i) rep.max_row_norm = std::max(rep.max_row_norm, row_norm(g, i));
        w -= cfg.gamma * fs.u;
        f_next = loss_and_grad(loss, w).first;
        // Ratios are meaningful only above the floating-point stall level,
        // where the update becomes smaller than one ulp of the iterate.
        const double gap = f - rep.f_star;
        const double gap_next = f_next - rep.f_star;
        const double floor = 1e-20 * std::max(1.0, initial_gap);
        ts.gap_ratio = gap > floor ? gap_next / gap : -1.0;
        rep.steps.push_back(ts);
        fam.push_back(std::move(fs));
    }
    rep.f_final = f_next;

    // measured run constants
    double c1 = 0.0, c2 = 0.0;
    bool any = false;
    double eta_lo = 0.0, eta_hi = 0.0;
    rep.max_rank = 0.0;
    rep.min_alignment = 0.0;
    rep.max_support = 0.0;
    rep.kappa_row = 0.0;
    bool first = true;
    for (std::size_t k = 0; k < rep.steps.size(); ++k) {
        const TrialStep& ts = rep.steps[k];
        const FamilyStep& fs = fam[k];
        rep.max_rank = std::max(rep.max_rank, static_cast<double>(ts.grad_rank));
        rep.max_support = std::max(rep.max_support, static_cast<double>(fs.s_row));
        if (cfg.family == DescentFamily::HybridRowPolar)
            rep.max_support = std::max(rep.max_support, static_cast<double>(fs.r_rowhyb));
        if (ts.grad_fro > 0.0) {
            const double g2 = ts.grad_fro * ts.grad_fro;
            const double rc1 = ts.align / g2;
            const double rc2 = ts.upd_fro2 / g2;
            if (!any) {
                c1 = rc1;
                c2 = rc2;
                any = true;
            } else {
                c1 = std::min(c1, rc1);
                c2 = std::max(c2, rc2);
            }
            if (cfg.family == DescentFamily::HybridPolarRow) {
                rep.min_alignment = first ? fs.a_hyb : std::min(rep.min_alignment, fs.a_hyb);
                first = false;
            }
            if (cfg.family == DescentFamily::HybridRowPolar) {
                rep.min_alignment = first ? fs.a_rowhyb : std::min(rep.min_alignment, fs.a_rowhyb);
                const double kap = fs.gtilde_nuc / ts.grad_fro;
                rep.kappa_row = first ? kap : std::min(rep.kappa_row, kap);
                first = false;
            }
            if (cfg.family == DescentFamily::RowNormBounded) {
                eta_lo = (k == 0) ? fs.min_eta : std::min(eta_lo, fs.min_eta);
                eta_hi = (k == 0) ? fs.max_eta : std::max(eta_hi, fs.max_eta);
            }
        }
    }
    rep.c1 = c1;
    rep.c2 = c2;

    const double mu = loss.known_mu;
    const double L = l_smooth;
    const double gamma = cfg.gamma;
    double coef = 0.0; // descent margin multiplying |G|^2-like terms
    switch (cfg.family) {
        case DescentFamily::SpectralIdentity:
            rep.admissible_gamma_max = 2.0 / L;
            coef = gamma - L * gamma * gamma / 2.0;
            if (mu > 0.0) rep.theory_rho = 1.0 - 2.0 * mu * coef;
            break;
        case DescentFamily::NuclearPolar: {
            const double rbar = std::max(rep.max_rank, 1.0);
            rep.admissible_gamma_max = 2.0 / (L * rbar);
            coef = gamma * (1.0 - L * gamma * rbar / 2.0);
            if (mu > 0.0) rep.theory_rho = 1.0 - 2.0 * mu * coef;
            break;
        }
        case DescentFamily::RightSpectralDamped:
        case DescentFamily::LeftSpectralDamped:
            rep.admissible_gamma_max = c2 > 0.0 ? 2.0 * c1 / (L * c2) : 0.0;
            coef = c1 * gamma - L * c2 * gamma * gamma / 2.0;
            if (mu > 0.0) rep.theory_rho = 1.0 - 2.0 * mu * coef;
            break;
        case DescentFamily::RowNormBounded:
            rep.c1 = eta_lo;
            rep.c2 = eta_hi;
            rep.admissible_gamma_max = eta_hi > 0.0 ? 2.0 * eta_lo / (L * eta_hi * eta_hi) : 0.0;
            coef = eta_lo * gamma - L * eta_hi * eta_hi * gamma * gamma / 2.0;
            if (mu > 0.0) rep.theory_rho = 1.0 - 2.0 * mu * coef;
            break;
        case DescentFamily::RowNormSmoothed: {
            const double eps = cfg.smooth_eps;
            const double lo = 1.0 / (rep.max_row_norm + eps);
            const double hi = 1.0 / eps;
            rep.c1 = lo;
            rep.c2 = hi;
            rep.admissible_gamma_max = 2.0 * eps * eps / (L * (rep.max_row_norm + eps));
            coef = lo * gamma - L * hi * hi * gamma * gamma / 2.0;
            if (mu > 0.0) rep.theory_rho = 1.0 - 2.0 * mu * coef;
            break;
        }
        case DescentFamily::HybridPolarRow: {
            const double abar = rep.min_alignment;
            const double sbar = std::max(rep.max_support, 1.0);
            rep.admissible_gamma_max = abar > 0.0 ? 2.0 * abar / (L * sbar) : 0.0;
            coef = gamma * (abar - L * gamma * sbar / 2.0);
            if (mu > 0.0) rep.theory_rho = 1.0 - 2.0 * mu * coef;
            break;
        }
        case DescentFamily::HybridRowPolar: {
            const double abar = rep.min_alignment;
            const double rbar = std::max(rep.max_support, 1.0);
            rep.admissible_gamma_max = abar > 0.0 ? 2.0 * abar / (L * rbar) : 0.0;
            coef = gamma * (abar - L * gamma * rbar / 2.0);
            if (mu > 0.0) rep.theory_rho = 1.0 - 2.0 * mu * rep.kappa_row * rep.kappa_row * coef;
            break;
        }
    }

    // per-step bounds and violations
    rep.bound_violations = 0;
    rep.monotone_violations = 0;
    for (std::size_t k = 0; k < rep.steps.size(); ++k) {
        TrialStep& ts = rep.steps[k];
        const FamilyStep& fs = fam[k];
        const double f = ts.f;
        const double g2 = ts.grad_fro * ts.grad_fro;
        switch (cfg.family) {
            case DescentFamily::SpectralIdentity:
                ts.bound_rhs = f - (gamma - L * gamma * gamma / 2.0) * g2;
                break;
            case DescentFamily::NuclearPolar:
                ts.bound_rhs = f - gamma * (1.0 - L * gamma * ts.grad_rank / 2.0) * ts.grad_nuc * ts.grad_nuc;
                break;
            case DescentFamily::RightSpectralDamped:
            case DescentFamily::LeftSpectralDamped:
                ts.bound_rhs = f - (rep.c1 * gamma - L * rep.c2 * gamma * gamma / 2.0) * g2;
                break;
            case DescentFamily::RowNormBounded:
            case DescentFamily::RowNormSmoothed:
                ts.bound_rhs = f - (rep.c1 * gamma - L * rep.c2 * rep.c2 * gamma * gamma / 2.0) * g2;
                break;
            case DescentFamily::HybridPolarRow:
                ts.bound_rhs = f - gamma * (fs.a_hyb - L * gamma * fs.s_row / 2.0) * ts.grad_nuc * ts.grad_nuc;
                break;
            case DescentFamily::HybridRowPolar:
                ts.bound_rhs = f - gamma * (fs.a_rowhyb - L * gamma * fs.r_rowhyb / 2.0) * fs.gtilde_nuc * fs.gtilde_nuc;
                break;
        }
        const double f_next = (k + 1 < rep.steps.size()) ? rep.steps[k + 1].f : rep.f_final;
        const double slack = 1e-12 * std::max(1.0, std::fabs(f));
        if (f_next > ts.bound_rhs + slack) ++rep.bound_violations;
        if (f_next > f + slack) ++rep.monotone_violations;
    }
    rep.violations = rep.bound_violations + rep.monotone_violations;

    rep.worst_gap_ratio = 0.0;
    for (const TrialStep& ts : rep.steps)
        if (ts.gap_ratio >= 0.0) rep.worst_gap_ratio = std::max(rep.worst_gap_ratio, ts.gap_ratio);
    return rep;
}

} // namespace symopt
