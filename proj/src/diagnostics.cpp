#include "symopt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "symopt/svd.hpp"

namespace symopt {

GeometryDiagnostics geometry_diagnostics(const Mat& g, const RowScaleSpec& eta) {
    if (!is_finite(g)) throw InvalidInput("geometry_diagnostics: non-finite input");
    if (is_zero(g)) throw ZeroDirection("geometry_diagnostics: zero direction");
    GeometryDiagnostics out;
    const Norms n = norms(g);
    const int rank = numerical_rank(g);
    out.spectral_advantage = n.nuclear / rank;
    out.stable_rank = (n.frobenius * n.frobenius) / (n.spectral * n.spectral);

    // right polar factor, rows normalized to unit length (zero rows stay zero)
    const Mat z = right_spectral_update(g, SpectralMapSpec::polar(), SolverOptions::exact());
    double zmax = 0.0;
    for (int i = 0; i < z.rows(); ++i) zmax = std::max(zmax, row_norm(z, i));
    Mat t_hyb(z.rows(), z.cols());
    for (int i = 0; i < z.rows(); ++i) {
        const double rn = row_norm(z, i);
        if (rn > 1e-10 * zmax && rn > 0.0) {
            ++out.row_support;
            for (int j = 0; j < z.cols(); ++j) t_hyb(i, j) = z(i, j) / rn;
        }
    }
    out.hybrid_alignment = dot(g, t_hyb) / n.nuclear;

    const Mat gtilde = row_norm_update(g, eta);
    const double gtilde_nuc = norms(gtilde).nuclear;
    out.row_hybrid_rank = numerical_rank(gtilde);
    out.row_hybrid_alignment =
        gtilde_nuc > 0.0 ? dot(g, polar_exact_truncated(gtilde)) / gtilde_nuc : 0.0;
    return out;
}

std::vector<int> topk_experts(const Mat& logits, int row, int topk) {
    const int e = logits.cols();
    std::vector<int> idx(static_cast<std::size_t>(e));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return logits(row, a) > logits(row, b); });
    idx.resize(static_cast<std::size_t>(topk));
    return idx;
}

RouterDiagnostics router_diagnostics(const Mat& logits, int topk) {
    const int n = logits.rows();
    const int e = logits.cols();
    if (n < 1 || e < 1) throw InvalidInput("router_diagnostics: empty batch");
    if (topk < 1 || topk > e) throw InvalidConfig("router_diagnostics: topk out of range");

    RouterDiagnostics out;
    out.fractions.assign(static_cast<std::size_t>(e), 0.0);
    out.mean_probs.assign(static_cast<std::size_t>(e), 0.0);

    for (int t = 0; t < n; ++t) {
        double m = logits(t, 0);
        for (int i = 1; i < e; ++i) m = std::max(m, logits(t, i));
        double denom = 0.0;
        for (int i = 0; i < e; ++i) denom += std::exp(logits(t, i) - m);
        for (int i = 0; i < e; ++i) out.mean_probs[static_cast<std::size_t>(i)] += std::exp(logits(t, i) - m) / denom;
        const double lse = m + std::log(denom);
        out.z_loss += lse * lse;
        for (int i : topk_experts(logits, t, topk)) out.fractions[static_cast<std::size_t>(i)] += 1.0;
    }
    out.z_loss /= n;
    for (double& p : out.mean_probs) p /= n;
    for (double& f : out.fractions) f /= static_cast<double>(n) * topk;

    for (int i = 0; i < e; ++i) out.load_balance_loss += out.fractions[static_cast<std::size_t>(i)] * out.mean_probs[static_cast<std::size_t>(i)];
    out.load_balance_loss *= e;

    double mean_f = 0.0;
    for (double f : out.fractions) mean_f += f;
    mean_f /= e;
    double var = 0.0;
    for (double f : out.fractions) {
        if (f > 0.0) out.load_entropy -= f * std::log(f);
        var += (f - mean_f) * (f - mean_f);
        if (f == 0.0) out.dead_fraction += 1.0;
        out.max_load = std::max(out.max_load, f);
    }
    var /= e;
    out.load_cv = mean_f > 0.0 ? std::sqrt(var) / mean_f : 0.0;
    out.dead_fraction /= e;
    return out;
}

LogitDiagnostics logit_diagnostics(const Mat& logits) {
    const int n = logits.rows();
    const int v = logits.cols();
    if (n < 1 || v < 1) throw InvalidInput("logit_diagnostics: empty sample set");
    LogitDiagnostics out;
    out.max_lse = -std::numeric_limits<double>::infinity();
    double raw = 0.0, centered = 0.0;
    for (int t = 0; t < n; ++t) {
        double m = logits(t, 0);
        double mean = 0.0;
        double sq = 0.0;
        for (int i = 0; i < v; ++i) {
            m = std::max(m, logits(t, i));
            mean += logits(t, i);
            sq += logits(t, i) * logits(t, i);
        }
        mean /= v;
        raw += sq / v;
        double csq = 0.0;
        for (int i = 0; i < v; ++i) {
            const double c = logits(t, i) - mean;
            csq += c * c;
        }
        centered += csq / v;
        double denom = 0.0;
        for (int i = 0; i < v; ++i) denom += std::exp(logits(t, i) - m);
        out.max_lse = std::max(out.max_lse, m + std::log(denom));
    }
    out.raw_rms = std::sqrt(raw / n);
    out.centered_rms = std::sqrt(centered / n);
    return out;
}

} // namespace symopt
