#pragma once

#include <vector>

#include "symopt/mat.hpp"
#include "symopt/updates.hpp"

namespace symopt {

/// Spectral-geometry ratios of a direction matrix.
struct GeometryDiagnostics {
    double spectral_advantage = 0.0;   // |G|_* / rank(G)
    double stable_rank = 0.0;          // |G|_F^2 / |G|_spec^2
    double hybrid_alignment = 0.0;     // <G, T_hyb(G)> / |G|_*
    int row_support = 0;               // nonzero rows of the right polar factor
    double row_hybrid_alignment = 0.0; // <G, polar(G~)> / |G~|_*
    int row_hybrid_rank = 0;           // rank(G~), G~ = D_eta(G) G
};

/// `eta` is the row-scaling rule used for the row-first hybrid quantities
/// (smoothed 1/(t+eps) in the reference setup). Throws ZeroDirection on G=0.
GeometryDiagnostics geometry_diagnostics(const Mat& g, const RowScaleSpec& eta);

struct RouterDiagnostics {
    double load_balance_loss = 0.0; // E * sum_i f_i P_i
    double z_loss = 0.0;            // mean squared log-sum-exp of router logits
    double load_entropy = 0.0;      // entropy of the assignment fractions, in [0, ln E]
    double load_cv = 0.0;           // coefficient of variation of assignment fractions
    double dead_fraction = 0.0;     // fraction of experts with zero assignments
    double max_load = 0.0;          // max_i f_i
    std::vector<double> fractions;  // f_i
    std::vector<double> mean_probs; // P_i
};

/// `logits` holds one row of router logits per token (N x E). Each token
/// contributes `topk` assignments; ties break toward the lower expert index.
RouterDiagnostics router_diagnostics(const Mat& logits, int topk);

/// Top-k expert indices for one logit row, ties toward lower index.
std::vector<int> topk_experts(const Mat& logits, int row, int topk);

struct LogitDiagnostics {
    double raw_rms = 0.0;      // sqrt(mean_t |z_t|^2 / v)
    double centered_rms = 0.0; // same after removing each token's mean logit
    double max_lse = 0.0;      // max_t log sum_i exp(z_ti), overflow-safe
};

LogitDiagnostics logit_diagnostics(const Mat& logits);

} // namespace symopt
