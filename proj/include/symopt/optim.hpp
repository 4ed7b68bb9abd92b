#pragma once

#include <optional>
#include <utility>

#include "symopt/mat.hpp"
#include "symopt/updates.hpp"

namespace symopt {

enum class MomentumKind { EMA, Polyak, Nesterov };

enum class ScheduleKind { WarmupCosine, StableDecay };

/// WarmupCosine: linear 0 -> lr0 over `warmup_steps`, then half-cosine to 0.
/// StableDecay: lr0 for the first stable_frac of training, linear to 0 after.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::StableDecay;
    int total_steps = 1;
    int warmup_steps = 100;
    double stable_frac = 0.6;

    static ScheduleSpec warmup_cosine(int warmup, int total);
    static ScheduleSpec stable_decay(double frac, int total);
    void validate() const;
};

double lr_at(int step, const ScheduleSpec& cfg, double lr0);

struct OptimConfig {
    double lr0 = 0.01;
    double momentum_beta = 0.95;
    MomentumKind momentum_kind = MomentumKind::EMA;
    double alpha = 0.0;      // trace-scaling exponent
    double eps = 1e-8;       // damping for Gram inverse square roots and nu floor
    double weight_decay = 0.0;
    UpdateSpec update;
    ScheduleSpec schedule;

    void validate() const;
};

/// Per-tensor state: momentum buffer (M_{-1} = 0) and step counter.
struct OptimState {
    Mat momentum;
    long step = 0;

    static OptimState init(int rows, int cols) { return {Mat(rows, cols), 0}; }
};

struct StepReport {
    double gamma_k = 0.0;
    std::optional<double> nu_k;
    double update_fro_norm = 0.0;
};

/// EMA: M <- beta M + (1-beta) G, returns M.
/// Polyak: M <- beta M + G, returns M.
/// Nesterov: M <- beta M + G, returns G + beta M.
Mat momentum_direction(OptimState& state, const Mat& g, const OptimConfig& cfg);

/// One optimizer step: W_{k+1} = (1 - gamma_k lambda) W_k - gamma_k U_k, where
/// U_k is built from the momentum direction by the geometry's working-direction
/// centering, the configured update class, and (for one-sided spectral
/// classes) the trace scale nu_k = max(tr(C_k (C_k + eps I)^{-1/2}), eps)
/// raised to alpha. alpha = 0 recovers the unscaled polar-style update.
std::pair<Mat, StepReport> step(const Mat& w, OptimState& state, const Mat& g, const OptimConfig& cfg);

struct AdamState {
    Mat m;
    Mat v;
    long step = 0;

    static AdamState init(int rows, int cols) { return {Mat(rows, cols), Mat(rows, cols), 0}; }
};

/// Coordinate-wise baseline: decoupled weight decay, bias-corrected moments.
Mat adamw_step(const Mat& w, AdamState& state, const Mat& g, double lr, double beta1, double beta2,
               double eps, double weight_decay);

} // namespace symopt
