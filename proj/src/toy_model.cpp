#include "symopt/toy_model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "symopt/rng.hpp"

namespace symopt {

void ToyModelConfig::validate() const {
    if (vocab < 2 || d_model < 1 || d_ff < 1) throw InvalidConfig("ToyModelConfig: dims must be positive");
    if (experts < 0) throw InvalidConfig("ToyModelConfig: negative expert count");
    if (experts > 0 && (top_k < 1 || top_k > experts))
        throw InvalidConfig("ToyModelConfig: top_k must lie in [1, experts]");
    if (batch < 1 || seq_len < 1) throw InvalidConfig("ToyModelConfig: batch and seq_len must be >= 1");
    if (init_std <= 0.0) throw InvalidConfig("ToyModelConfig: init_std must be > 0");
}

namespace {

double silu(double t) { return t / (1.0 + std::exp(-t)); }

double silu_grad(double t) {
    const double s = 1.0 / (1.0 + std::exp(-t));
    return s * (1.0 + t * (1.0 - s));
}

std::vector<double> matvec(const Mat& w, const std::vector<double>& x) {
    std::vector<double> out(static_cast<std::size_t>(w.rows()), 0.0);
    for (int i = 0; i < w.rows(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < w.cols(); ++j) acc += w(i, j) * x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

std::vector<double> matvec_t(const Mat& w, const std::vector<double>& y) {
    std::vector<double> out(static_cast<std::size_t>(w.cols()), 0.0);
    for (int i = 0; i < w.rows(); ++i) {
        const double yi = y[static_cast<std::size_t>(i)];
        if (yi == 0.0) continue;
        for (int j = 0; j < w.cols(); ++j) out[static_cast<std::size_t>(j)] += w(i, j) * yi;
    }
    return out;
}

void add_outer(Mat& acc, const std::vector<double>& y, const std::vector<double>& x) {
    for (int i = 0; i < acc.rows(); ++i) {
        const double yi = y[static_cast<std::size_t>(i)];
        if (yi == 0.0) continue;
        for (int j = 0; j < acc.cols(); ++j) acc(i, j) += yi * x[static_cast<std::size_t>(j)];
    }
}

} // namespace

std::vector<double> swiglu_forward(const std::vector<double>& x, const Mat& w_gate, const Mat& w_up,
                                   const Mat& w_down) {
    if (static_cast<int>(x.size()) != w_gate.cols() || w_gate.rows() != w_up.rows() ||
        w_gate.cols() != w_up.cols() || w_down.cols() != w_gate.rows())
        throw ShapeError("swiglu_forward: inconsistent shapes");
    const std::vector<double> g = matvec(w_gate, x);
    std::vector<double> a = matvec(w_up, x);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= silu(g[i]);
    return matvec(w_down, a);
}

ToyModel ToyModel::init(const ToyModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ToyModel m;
    m.cfg = cfg;
    Rng rng(mix_seed(seed, 0x1017));
    const auto draw = [&](int rows, int cols) {
        Mat w(rows, cols);
        for (double& v : w.data()) v = cfg.init_std * rng.gaussian();
        return w;
    };
    m.embedding = draw(cfg.vocab, cfg.d_model);
    m.head = draw(cfg.vocab, cfg.d_model);
    const int ne = m.expert_count();
    for (int i = 0; i < ne; ++i) {
        m.gate.push_back(draw(cfg.d_ff, cfg.d_model));
        m.up.push_back(draw(cfg.d_ff, cfg.d_model));
        m.down.push_back(draw(cfg.d_model, cfg.d_ff));
    }
    if (cfg.experts > 0) m.router = draw(cfg.experts, cfg.d_model);
    return m;
}

ToyGradients ToyGradients::zeros_like(const ToyModel& model) {
    ToyGradients g;
    g.embedding = Mat(model.embedding.rows(), model.embedding.cols());
    g.head = Mat(model.head.rows(), model.head.cols());
    if (!model.router.empty()) g.router = Mat(model.router.rows(), model.router.cols());
    for (const Mat& w : model.gate) g.gate.emplace_back(w.rows(), w.cols());
    for (const Mat& w : model.up) g.up.emplace_back(w.rows(), w.cols());
    for (const Mat& w : model.down) g.down.emplace_back(w.rows(), w.cols());
    return g;
}

BatchStats forward_backward(const ToyModel& model, const std::vector<std::vector<int>>& seqs,
                            ToyGradients* grads) {
    const ToyModelConfig& cfg = model.cfg;
    const int d = cfg.d_model;
    const int ff = cfg.d_ff;
    const int v = cfg.vocab;
    const bool moe = cfg.experts > 0;
    const int n_tokens = static_cast<int>(seqs.size()) * cfg.seq_len;
    if (seqs.empty()) throw InvalidInput("forward_backward: empty batch");
    for (const auto& s : seqs)
        if (static_cast<int>(s.size()) != cfg.seq_len + 1)
            throw ShapeError("forward_backward: sequence length mismatch");

    BatchStats stats;
    stats.final_logits = Mat(n_tokens, v);
    if (moe) stats.router_logits = Mat(n_tokens, cfg.experts);

    const double inv_n = 1.0 / n_tokens;
    // retained for the auxiliary-loss pass
    std::vector<std::vector<double>> router_probs;
    std::vector<std::vector<int>> router_topk;
    std::vector<int> input_tokens;
    const bool aux = moe && (cfg.aux_load_balance_weight > 0.0 || cfg.aux_z_weight > 0.0);

    int t_idx = 0;
    for (const auto& seq : seqs) {
        for (int pos = 0; pos < cfg.seq_len; ++pos, ++t_idx) {
            const int tok = seq[static_cast<std::size_t>(pos)];
            const int target = seq[static_cast<std::size_t>(pos) + 1];
            if (tok < 0 || tok >= v || target < 0 || target >= v)
                throw InvalidInput("forward_backward: token out of range");

            std::vector<double> x(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] = model.embedding(tok, j);

            // block forward
            std::vector<int> selected;
            std::vector<double> gates;
            std::vector<double> probs; // full router softmax
            if (moe) {
                std::vector<double> rl = matvec(model.router, x);
                for (int i = 0; i < cfg.experts; ++i) stats.router_logits(t_idx, i) = rl[static_cast<std::size_t>(i)];
                double m = rl[0];
                for (double z : rl) m = std::max(m, z);
                double denom = 0.0;
                probs.resize(rl.size());
                for (std::size_t i = 0; i < rl.size(); ++i) {
                    probs[i] = std::exp(rl[i] - m);
                    denom += probs[i];
                }
                for (double& p : probs) p /= denom;
                selected = topk_experts(stats.router_logits, t_idx, cfg.top_k);
                double sel_mass = 0.0;
                for (int e : selected) sel_mass += probs[static_cast<std::size_t>(e)];
                for (int e : selected) gates.push_back(probs[static_cast<std::size_t>(e)] / sel_mass);
            } else {
                selected = {0};
                gates = {1.0};
            }

            std::vector<std::vector<double>> g_vecs, u_vecs, act_vecs, y_vecs;
            std::vector<double> h = x; // residual stream
            for (std::size_t s = 0; s < selected.size(); ++s) {
                const int e = selected[s];
                const std::size_t ei = static_cast<std::size_t>(e);
                std::vector<double> gv = matvec(model.gate[ei], x);
                std::vector<double> uv = matvec(model.up[ei], x);
                std::vector<double> av(static_cast<std::size_t>(ff));
                for (int i = 0; i < ff; ++i)
                    av[static_cast<std::size_t>(i)] =
                        silu(gv[static_cast<std::size_t>(i)]) * uv[static_cast<std::size_t>(i)];
                std::vector<double> yv = matvec(model.down[ei], av);
                for (int j = 0; j < d; ++j) h[static_cast<std::size_t>(j)] += gates[s] * yv[static_cast<std::size_t>(j)];
                g_vecs.push_back(std::move(gv));
                u_vecs.push_back(std::move(uv));
                act_vecs.push_back(std::move(av));
                y_vecs.push_back(std::move(yv));
            }

            // final logits and cross entropy
            std::vector<double> z = matvec(model.head, h);
            for (int i = 0; i < v; ++i) stats.final_logits(t_idx, i) = z[static_cast<std::size_t>(i)];
            double zmax = z[0];
            for (double zi : z) zmax = std::max(zmax, zi);
            double denom = 0.0;
            for (double zi : z) denom += std::exp(zi - zmax);
            const double lse = zmax + std::log(denom);
            stats.ce += inv_n * (lse - z[static_cast<std::size_t>(target)]);

            if (grads) {
                // dz = softmax(z) - e_target, scaled by 1/N
                std::vector<double> dz(static_cast<std::size_t>(v));
                for (int i = 0; i < v; ++i) dz[static_cast<std::size_t>(i)] = inv_n * std::exp(z[static_cast<std::size_t>(i)] - zmax) / denom;
                dz[static_cast<std::size_t>(target)] -= inv_n;

                add_outer(grads->head, dz, h);
                std::vector<double> dh = matvec_t(model.head, dz);
                std::vector<double> dx = dh; // residual path

                std::vector<double> dgates(selected.size(), 0.0);
                for (std::size_t s = 0; s < selected.size(); ++s) {
                    const int e = selected[s];
                    const std::size_t ei = static_cast<std::size_t>(e);
                    for (int j = 0; j < d; ++j)
                        dgates[s] += dh[static_cast<std::size_t>(j)] * y_vecs[s][static_cast<std::size_t>(j)];
                    // expert backward with weight gates[s]
                    std::vector<double> dy(static_cast<std::size_t>(d));
                    for (int j = 0; j < d; ++j) dy[static_cast<std::size_t>(j)] = gates[s] * dh[static_cast<std::size_t>(j)];
                    add_outer(grads->down[ei], dy, act_vecs[s]);
                    std::vector<double> da = matvec_t(model.down[ei], dy);
                    std::vector<double> dg(static_cast<std::size_t>(ff)), du(static_cast<std::size_t>(ff));
                    for (int i = 0; i < ff; ++i) {
                        const std::size_t ii = static_cast<std::size_t>(i);
                        du[ii] = da[ii] * silu(g_vecs[s][ii]);
                        dg[ii] = da[ii] * u_vecs[s][ii] * silu_grad(g_vecs[s][ii]);
                    }
                    add_outer(grads->gate[ei], dg, x);
                    add_outer(grads->up[ei], du, x);
                    const std::vector<double> dxg = matvec_t(model.gate[ei], dg);
                    const std::vector<double> dxu = matvec_t(model.up[ei], du);
                    for (int j = 0; j < d; ++j)
                        dx[static_cast<std::size_t>(j)] += dxg[static_cast<std::size_t>(j)] + dxu[static_cast<std::size_t>(j)];
                }

                if (moe) {
                    // gates = softmax over the selected logits
                    double inner = 0.0;
                    for (std::size_t s = 0; s < selected.size(); ++s) inner += gates[s] * dgates[s];
                    std::vector<double> drl(static_cast<std::size_t>(cfg.experts), 0.0);
                    for (std::size_t s = 0; s < selected.size(); ++s)
                        drl[static_cast<std::size_t>(selected[s])] = gates[s] * (dgates[s] - inner);
                    add_outer(grads->router, drl, x);
                    const std::vector<double> dxr = matvec_t(model.router, drl);
                    for (int j = 0; j < d; ++j) dx[static_cast<std::size_t>(j)] += dxr[static_cast<std::size_t>(j)];
                }

                for (int j = 0; j < d; ++j) grads->embedding(tok, j) += dx[static_cast<std::size_t>(j)];
            }

            if (aux) {
                router_probs.push_back(std::move(probs));
                router_topk.push_back(selected);
                input_tokens.push_back(tok);
            }
        }
    }

    stats.objective = stats.ce;

    if (aux) {
        const int e_count = cfg.experts;
        const RouterDiagnostics diag = router_diagnostics(stats.router_logits, cfg.top_k);
        stats.objective += cfg.aux_load_balance_weight * diag.load_balance_loss +
                           cfg.aux_z_weight * diag.z_loss;
        if (grads) {
            // gradient of the auxiliary terms through the router logits;
            // assignment fractions f are treated as constants
            for (int t = 0; t < n_tokens; ++t) {
                const std::vector<double>& p = router_probs[static_cast<std::size_t>(t)];
                double fp = 0.0;
                for (int i = 0; i < e_count; ++i) fp += diag.fractions[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i)];
                double m = stats.router_logits(t, 0);
                for (int i = 1; i < e_count; ++i) m = std::max(m, stats.router_logits(t, i));
                double denom = 0.0;
                for (int i = 0; i < e_count; ++i) denom += std::exp(stats.router_logits(t, i) - m);
                const double lse = m + std::log(denom);
                std::vector<double> drl(static_cast<std::size_t>(e_count));
                for (int i = 0; i < e_count; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    const double d_lb = e_count * inv_n * p[ii] * (diag.fractions[ii] - fp);
                    const double d_z = 2.0 * inv_n * lse * p[ii];
                    drl[ii] = cfg.aux_load_balance_weight * d_lb + cfg.aux_z_weight * d_z;
                }
                const int tok = input_tokens[static_cast<std::size_t>(t)];
                std::vector<double> x(static_cast<std::size_t>(cfg.d_model));
                for (int j = 0; j < cfg.d_model; ++j) x[static_cast<std::size_t>(j)] = model.embedding(tok, j);
                add_outer(grads->router, drl, x);
                const std::vector<double> dx = matvec_t(model.router, drl);
                for (int j = 0; j < cfg.d_model; ++j) grads->embedding(tok, j) += dx[static_cast<std::size_t>(j)];
            }
        }
    }

    return stats;
}

std::vector<std::vector<int>> sample_batch(const ToyModelConfig& cfg, std::uint64_t run_seed, int step) {
    // Zipf weights over ranks with a planted bigram preference.
    std::vector<double> cdf(static_cast<std::size_t>(cfg.vocab));
    double acc = 0.0;
    for (int r = 0; r < cfg.vocab; ++r) {
        acc += 1.0 / std::pow(static_cast<double>(r + 1), 1.2);
        cdf[static_cast<std::size_t>(r)] = acc;
    }
    const double total = acc;
    const auto zipf = [&](Rng& rng) {
        const double u = rng.uniform() * total;
        int lo = 0, hi = cfg.vocab - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (cdf[static_cast<std::size_t>(mid)] < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    };
    const auto favorite = [&](int t) { return static_cast<int>((17L * t + 3L) % cfg.vocab); };

    std::vector<std::vector<int>> seqs;
    seqs.reserve(static_cast<std::size_t>(cfg.batch));
    for (int b = 0; b < cfg.batch; ++b) {
        Rng rng(mix_seed(mix_seed(run_seed, 0xda7a), static_cast<std::uint64_t>(step) * cfg.batch + b));
        std::vector<int> seq;
        seq.reserve(static_cast<std::size_t>(cfg.seq_len) + 1);
        int cur = zipf(rng);
        seq.push_back(cur);
        for (int k = 0; k < cfg.seq_len; ++k) {
            cur = (rng.uniform() < 0.55) ? favorite(cur) : zipf(rng);
            seq.push_back(cur);
        }
        seqs.push_back(std::move(seq));
    }
    return seqs;
}

ToyModel permute_intermediate(const ToyModel& model, const Mat& p) {
    if (p.rows() != model.cfg.d_ff) throw ShapeError("permute_intermediate: permutation size mismatch");
    ToyModel out = model;
    for (std::size_t e = 0; e < out.gate.size(); ++e) {
        out.gate[e] = p * model.gate[e];
        out.up[e] = p * model.up[e];
        out.down[e] = model.down[e] * transpose(p);
    }
    return out;
}

ToyModel rotate_hidden_basis(const ToyModel& model, const Mat& r) {
    if (r.rows() != model.cfg.d_model) throw ShapeError("rotate_hidden_basis: rotation size mismatch");
    ToyModel out = model;
    const Mat rt = transpose(r);
    out.embedding = model.embedding * rt;
    out.head = model.head * rt;
    if (!model.router.empty()) out.router = model.router * rt;
    for (std::size_t e = 0; e < out.gate.size(); ++e) {
        out.gate[e] = model.gate[e] * rt;
        out.up[e] = model.up[e] * rt;
        out.down[e] = r * model.down[e];
    }
    return out;
}

// --- trainer ----------------------------------------------------------------

void TrainerConfig::validate() const {
    model.validate();
    if (total_steps < 1) throw InvalidConfig("TrainerConfig: total_steps must be >= 1");
    if (log_interval < 1) throw InvalidConfig("TrainerConfig: log_interval must be >= 1");
    if (checkpoint_interval < 0) throw InvalidConfig("TrainerConfig: negative checkpoint_interval");
}

namespace {

struct TensorSlot {
    std::string name;
    ParamClass klass;
    Mat* weight;
    OptimState opt;
    AdamState adam;
};

struct Trainer {
    TrainerConfig cfg;
    ToyModel model;
    std::vector<TensorSlot> slots;
    Mat head_sums0;
    Mat router_sums0;

    explicit Trainer(const TrainerConfig& c) : cfg(c), model(ToyModel::init(c.model, c.seed)) {
        auto add = [&](const std::string& name, ParamClass k, Mat* w) {
            TensorSlot slot;
            slot.name = name;
            slot.klass = k;
            slot.weight = w;
            slot.opt = OptimState::init(w->rows(), w->cols());
            slot.adam = AdamState::init(w->rows(), w->cols());
            slots.push_back(std::move(slot));
        };
        add("embedding", ParamClass::Embedding, &model.embedding);
        for (int e = 0; e < model.expert_count(); ++e) {
            add("gate" + std::to_string(e), ParamClass::Gate, &model.gate[static_cast<std::size_t>(e)]);
            add("up" + std::to_string(e), ParamClass::Up, &model.up[static_cast<std::size_t>(e)]);
            add("down" + std::to_string(e), ParamClass::Down, &model.down[static_cast<std::size_t>(e)]);
        }
        add("head", ParamClass::Head, &model.head);
        if (!model.router.empty()) add("router", ParamClass::Router, &model.router);
        head_sums0 = column_sums(model.head);
        if (!model.router.empty()) router_sums0 = column_sums(model.router);
    }

    const OptimizerChoice& choice(ParamClass k) const {
        switch (k) {
            case ParamClass::Embedding: return cfg.opt_embedding;
            case ParamClass::Gate: return cfg.opt_gate;
            case ParamClass::Up: return cfg.opt_up;
            case ParamClass::Down: return cfg.opt_down;
            case ParamClass::Head: return cfg.opt_head;
            case ParamClass::Router: return cfg.opt_router;
        }
        throw InvalidConfig("unknown parameter class");
    }

    Mat* grad_for(const TensorSlot& slot, ToyGradients& g) {
        switch (slot.klass) {
            case ParamClass::Embedding: return &g.embedding;
            case ParamClass::Head: return &g.head;
            case ParamClass::Router: return &g.router;
            default: break;
        }
        const int e = std::stoi(slot.name.substr(slot.name.find_first_of("0123456789")));
        if (slot.klass == ParamClass::Gate) return &g.gate[static_cast<std::size_t>(e)];
        if (slot.klass == ParamClass::Up) return &g.up[static_cast<std::size_t>(e)];
        return &g.down[static_cast<std::size_t>(e)];
    }
};

void write_checkpoint(const Trainer& tr, int step, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << "symopt-checkpoint 1\n";
    out << "step " << step << '\n';
    out << "tensors " << tr.slots.size() << '\n';
    for (const TensorSlot& slot : tr.slots) {
        out << "name " << slot.name << '\n';
        write_mat(out, *slot.weight);
        if (tr.choice(slot.klass).use_adamw) {
            out << "opt adamw " << slot.adam.step << '\n';
            write_mat(out, slot.adam.m);
            write_mat(out, slot.adam.v);
        } else {
            out << "opt matrix " << slot.opt.step << '\n';
            write_mat(out, slot.opt.momentum);
        }
    }
}

int load_checkpoint(Trainer& tr, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "symopt-checkpoint" || version != 1) throw IoError("unrecognized checkpoint header");
    std::string key;
    int step = 0;
    std::size_t count = 0;
    in >> key >> step;
    if (key != "step") throw IoError("malformed checkpoint (step)");
    in >> key >> count;
    if (key != "tensors" || count != tr.slots.size()) throw IoError("checkpoint tensor count mismatch");
    for (TensorSlot& slot : tr.slots) {
        std::string name;
        in >> key >> name;
        if (key != "name" || name != slot.name) throw IoError("checkpoint tensor order mismatch: " + name);
        *slot.weight = read_mat(in);
        std::string opt_kind;
        long opt_step = 0;
        in >> key >> opt_kind >> opt_step;
        if (key != "opt") throw IoError("malformed checkpoint (opt)");
        if (opt_kind == "adamw") {
            slot.adam.step = opt_step;
            slot.adam.m = read_mat(in);
            slot.adam.v = read_mat(in);
        } else if (opt_kind == "matrix") {
            slot.opt.step = opt_step;
            slot.opt.momentum = read_mat(in);
        } else {
            throw IoError("unknown optimizer kind in checkpoint: " + opt_kind);
        }
    }
    return step;
}

TrainResult run_training(Trainer& tr, int start_step) {
    const TrainerConfig& cfg = tr.cfg;
    TrainResult result;
    std::ostringstream csv;
    std::ostringstream diag_series;
    bool first_diag = true;

    if (start_step == 0)
        csv << "step,split,loss,ce_loss,lr,upd_embedding,upd_gate,upd_up,upd_down,upd_head,upd_router,"
               "drift_head,drift_router\n";

    // held-out batch, disjoint from every training step's stream
    const auto val_seqs = sample_batch(cfg.model, mix_seed(cfg.seed, 0x7a11), 1000000007);
    const bool moe = cfg.model.experts > 0;
    for (int step_idx = start_step; step_idx < cfg.total_steps; ++step_idx) {
        ToyGradients grads = ToyGradients::zeros_like(tr.model);
        const auto seqs = sample_batch(cfg.model, cfg.seed, step_idx);
        const BatchStats stats = forward_backward(tr.model, seqs, &grads);

        double upd_norm[6] = {0, 0, 0, 0, 0, 0};
        double lr_logged = 0.0;
        for (TensorSlot& slot : tr.slots) {
            const OptimizerChoice& oc = tr.choice(slot.klass);
            const Mat* g = tr.grad_for(slot, grads);
            double unorm = 0.0;
            if (oc.use_adamw) {
                const double lr = lr_at(step_idx, oc.adam_schedule, oc.adam_lr);
                const Mat before = *slot.weight;
                *slot.weight = adamw_step(*slot.weight, slot.adam, *g, lr, oc.adam_beta1, oc.adam_beta2,
                                          oc.adam_eps, oc.adam_weight_decay);
                unorm = lr > 0.0 ? fro_norm(before - *slot.weight) / lr : 0.0;
                if (slot.klass == ParamClass::Embedding) lr_logged = lr;
            } else {
                auto [next, rep] = step(*slot.weight, slot.opt, *g, oc.matrix);
                *slot.weight = next;
                unorm = rep.update_fro_norm;
                if (slot.klass == ParamClass::Embedding) lr_logged = rep.gamma_k;
            }
            upd_norm[static_cast<int>(slot.klass)] += unorm;
        }

        const double drift_head = max_abs_diff(column_sums(tr.model.head), tr.head_sums0);
        const double drift_router =
            moe ? max_abs_diff(column_sums(tr.model.router), tr.router_sums0) : 0.0;

        const int step_no = step_idx + 1;
        result.losses.push_back(stats.objective);
        csv << step_no << ",train," << format_double(stats.objective) << ',' << format_double(stats.ce)
            << ',' << format_double(lr_logged);
        for (double un : upd_norm) csv << ',' << format_double(un);
        csv << ',' << format_double(drift_head) << ',' << format_double(drift_router) << '\n';

        if (step_no % cfg.log_interval == 0 || step_no == cfg.total_steps) {
            // held-out pass: loss row plus the logit and router diagnostics
            const BatchStats val = forward_backward(tr.model, val_seqs, nullptr);
            csv << step_no << ",val," << format_double(val.objective) << ',' << format_double(val.ce)
                << ',' << format_double(lr_logged) << ",0,0,0,0,0,0," << format_double(drift_head) << ','
                << format_double(drift_router) << '\n';

            const LogitDiagnostics ld = logit_diagnostics(val.final_logits);
            GeometryDiagnostics gd{};
            if (!is_zero(grads.head)) gd = geometry_diagnostics(grads.head, RowScaleSpec::smoothed(1e-8));
            if (!first_diag) diag_series << ",\n";
            first_diag = false;
            diag_series << "    {\"step\": " << step_no << ", \"loss\": " << format_double(stats.objective)
                        << ", \"ce_loss\": " << format_double(stats.ce)
                        << ", \"val_loss\": " << format_double(val.objective)
                        << ", \"val_ce_loss\": " << format_double(val.ce)
                        << ", \"raw_logit_rms\": " << format_double(ld.raw_rms)
                        << ", \"centered_logit_rms\": " << format_double(ld.centered_rms)
                        << ", \"max_lse\": " << format_double(ld.max_lse)
                        << ", \"head_grad_spectral_advantage\": " << format_double(gd.spectral_advantage)
                        << ", \"head_grad_stable_rank\": " << format_double(gd.stable_rank)
                        << ", \"head_grad_hybrid_alignment\": " << format_double(gd.hybrid_alignment)
                        << ", \"head_grad_row_support\": " << gd.row_support
                        << ", \"head_grad_row_hybrid_alignment\": " << format_double(gd.row_hybrid_alignment)
                        << ", \"head_grad_row_hybrid_rank\": " << gd.row_hybrid_rank
                        << ", \"drift_head\": " << format_double(drift_head)
                        << ", \"drift_router\": " << format_double(drift_router);
            if (moe) {
                const RouterDiagnostics rd = router_diagnostics(val.router_logits, cfg.model.top_k);
                diag_series << ", \"load_balance_loss\": " << format_double(rd.load_balance_loss)
                            << ", \"router_z_loss\": " << format_double(rd.z_loss)
                            << ", \"load_entropy\": " << format_double(rd.load_entropy)
                            << ", \"load_cv\": " << format_double(rd.load_cv)
                            << ", \"dead_fraction\": " << format_double(rd.dead_fraction)
                            << ", \"max_load\": " << format_double(rd.max_load);
            }
            diag_series << "}";
        }

        if (cfg.checkpoint_interval > 0 && !cfg.output_dir.empty() &&
            step_no % cfg.checkpoint_interval == 0 && step_no < cfg.total_steps) {
            write_checkpoint(tr, step_no, cfg.output_dir + "/ckpt_" + std::to_string(step_no) + ".txt");
        }
    }

    std::ostringstream json;
    json << "{\n  \"series\": [\n" << diag_series.str() << "\n  ],\n";
    json << "  \"final_loss\": " << format_double(result.losses.empty() ? 0.0 : result.losses.back())
         << ",\n  \"steps\": " << cfg.total_steps << ",\n  \"seed\": " << cfg.seed << "\n}\n";

    result.csv = csv.str();
    result.diagnostics_json = json.str();

    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream csv_out(cfg.output_dir + "/train_log.csv");
        if (!csv_out) throw IoError("cannot write train_log.csv under " + cfg.output_dir);
        csv_out << result.csv;
        std::ofstream json_out(cfg.output_dir + "/diagnostics.json");
        if (!json_out) throw IoError("cannot write diagnostics.json under " + cfg.output_dir);
        json_out << result.diagnostics_json;
        if (cfg.checkpoint_interval > 0)
            write_checkpoint(tr, cfg.total_steps, cfg.output_dir + "/ckpt_final.txt");
    }
    return result;
}

} // namespace

TrainResult toy_train(const TrainerConfig& cfg) {
    cfg.validate();
    Trainer tr(cfg);
    if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);
    return run_training(tr, 0);
}

TrainResult toy_train(const TrainerConfig& cfg, const std::string& resume_checkpoint) {
    cfg.validate();
    Trainer tr(cfg);
    if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);
    const int start = load_checkpoint(tr, resume_checkpoint);
    if (start >= cfg.total_steps) throw InvalidConfig("resume checkpoint is at or past total_steps");
    return run_training(tr, start);
}

} // namespace symopt
