#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symopt/diagnostics.hpp"
#include "symopt/mat.hpp"
#include "symopt/optim.hpp"

namespace symopt {

/// Tiny language model: untied embedding and LM head around one SwiGLU block
/// (or a top-k router over `experts` SwiGLU blocks when experts > 0). No
/// attention, no normalization layers, residual connection around the block.
struct ToyModelConfig {
    int vocab = 64;
    int d_model = 16;
    int d_ff = 32;
    int experts = 0; // 0 = dense
    int top_k = 2;
    int batch = 8;
    int seq_len = 16; // predictions per sequence
    double init_std = 0.02;
    double aux_load_balance_weight = 0.0; // 0.01 when enabled
    double aux_z_weight = 0.0;            // 0.001 when enabled

    void validate() const;
    int tokens_per_step() const { return batch * seq_len; }
};

/// SiLU-gated block output W_down (silu(W_gate x) .* (W_up x)).
std::vector<double> swiglu_forward(const std::vector<double>& x, const Mat& w_gate, const Mat& w_up,
                                   const Mat& w_down);

struct ToyModel {
    ToyModelConfig cfg;
    Mat embedding; // vocab x d_model
    Mat head;      // vocab x d_model
    Mat router;    // experts x d_model (empty when dense)
    std::vector<Mat> gate; // d_ff x d_model, one per expert (one entry when dense)
    std::vector<Mat> up;
    std::vector<Mat> down; // d_model x d_ff

    static ToyModel init(const ToyModelConfig& cfg, std::uint64_t seed);
    int expert_count() const { return cfg.experts > 0 ? cfg.experts : 1; }
};

struct ToyGradients {
    Mat embedding;
    Mat head;
    Mat router;
    std::vector<Mat> gate, up, down;

    static ToyGradients zeros_like(const ToyModel& model);
};

struct BatchStats {
    double objective = 0.0; // ce plus weighted auxiliary terms
    double ce = 0.0;
    Mat final_logits;  // tokens x vocab
    Mat router_logits; // tokens x experts (empty when dense)
};

/// Mean cross-entropy (plus optional router auxiliary losses) over a batch of
/// token sequences, with gradients accumulated into `grads` when non-null.
/// Each sequence must hold seq_len + 1 tokens.
BatchStats forward_backward(const ToyModel& model, const std::vector<std::vector<int>>& seqs,
                            ToyGradients* grads);

/// Zipf-distributed token chains with a planted bigram preference, fully
/// determined by (run seed, step): resuming needs no generator state.
std::vector<std::vector<int>> sample_batch(const ToyModelConfig& cfg, std::uint64_t run_seed, int step);

/// Intermediate-neuron permutation twin: (P W_gate, P W_up, W_down P^T) per
/// expert; everything else shared.
ToyModel permute_intermediate(const ToyModel& model, const Mat& p);

/// Hidden-basis rotation twin: embedding/gate/up/head/router right-multiplied
/// by R^T, down projections left-multiplied by R. Function-preserving.
ToyModel rotate_hidden_basis(const ToyModel& model, const Mat& r);

// --- training driver -------------------------------------------------------

enum class ParamClass { Embedding, Gate, Up, Down, Head, Router };

/// Optimizer assignment for one parameter class: either the matrix-update
/// optimizer described by OptimConfig or the coordinate-wise baseline.
struct OptimizerChoice {
    bool use_adamw = false;
    OptimConfig matrix;
    double adam_lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double adam_weight_decay = 0.0;
    ScheduleSpec adam_schedule;
};

struct TrainerConfig {
    ToyModelConfig model;
    OptimizerChoice opt_embedding, opt_gate, opt_up, opt_down, opt_head, opt_router;
    int total_steps = 200;
    int log_interval = 20;
    int checkpoint_interval = 0; // 0 = no checkpoints
    std::string output_dir;     // empty = keep results in memory only
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainResult {
    std::vector<double> losses; // objective per step
    std::string csv;            // rows for the steps this invocation executed
    std::string diagnostics_json;
};

/// Deterministic training loop; identical config and seed reproduce the CSV
/// byte for byte. Writes train_log.csv / diagnostics.json / checkpoint files
/// under output_dir when set.
TrainResult toy_train(const TrainerConfig& cfg);

/// Resumes from a checkpoint file and continues to total_steps; the emitted
/// CSV rows match the uninterrupted run's tail exactly.
TrainResult toy_train(const TrainerConfig& cfg, const std::string& resume_checkpoint);

} // namespace symopt
