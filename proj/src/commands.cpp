#include "symopt/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "symopt/rng.hpp"
#include "symopt/svd.hpp"
#include "symopt/symmetry.hpp"

namespace symopt {

namespace {

Mat with_spectrum(int m, int n, const std::vector<double>& sigma, std::uint64_t seed) {
    const Mat p = random_orthogonal(m, mix_seed(seed, 1));
    const Mat q = random_orthogonal(n, mix_seed(seed, 2));
    Mat a(m, n);
    for (std::size_t k = 0; k < sigma.size(); ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) a(i, j) += sigma[k] * p(i, static_cast<int>(k)) * q(j, static_cast<int>(k));
    return a;
}

std::vector<double> log_uniform(int count, double lo, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 3));
    std::vector<double> s(static_cast<std::size_t>(count));
    for (double& x : s) x = std::exp(std::log(lo) * rng.uniform());
    return s;
}

Mat spd_with_eigs(int n, const std::vector<double>& lambda, std::uint64_t seed) {
    const Mat q = random_orthogonal(n, seed);
    Mat a(n, n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) += lambda[static_cast<std::size_t>(k)] * q(i, k) * q(j, k);
    return 0.5 * (a + transpose(a));
}

// FNV-1a, so per-entry seeds do not depend on std::hash's implementation.
std::uint64_t stable_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string action_name(const GroupAction& a) {
    auto kind = [](ActionKind k) {
        switch (k) {
            case ActionKind::Orthogonal: return "orthogonal";
            case ActionKind::Permutation: return "permutation";
            case ActionKind::Identity: return "identity";
        }
        return "?";
    };
    std::string s = std::string(kind(a.left)) + "x" + kind(a.right);
    if (a.shift) s += "+shift";
    return s;
}

void write_suite_csv(const std::string& path, const std::vector<SuiteRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "suite,name,action,solver,rows,cols,trials,max_residual,threshold,negative_control,pass\n";
    for (const SuiteRow& r : rows) {
        out << r.suite << ',' << r.name << ',' << r.action << ',' << r.solver << ',' << r.rows << ','
            << r.cols << ',' << r.trials << ',' << format_double(r.residual) << ','
            << format_double(r.threshold) << ',' << (r.negative_control ? 1 : 0) << ','
            << (r.pass ? 1 : 0) << '\n';
    }
}

} // namespace

std::vector<SuiteRow> run_oracle_suite(std::uint64_t seed) {
    std::vector<SuiteRow> rows;
    const CoeffTable table = CoeffTable::baseline_cubic();

    // polynomial polar vs the SVD factorization oracle
    const int shapes[][2] = {{8, 8}, {16, 4}, {64, 8}};
    for (const auto& sh : shapes) {
        const int r = std::min(sh[0], sh[1]);
        double worst = 0.0;
        const int trials = 50;
        for (int t = 0; t < trials; ++t) {
            const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(t * 512 + sh[0] + sh[1]));
            const Mat a = with_spectrum(sh[0], sh[1], log_uniform(r, 0.1, s), s);
            auto [x, rep] = ns_polar(a, table, 12);
            worst = std::max(worst, fro_norm(x - polar_exact(a)));
        }
        SuiteRow row;
        row.suite = "oracles";
        row.name = "ns_polar_vs_exact";
        row.solver = "iterative12";
        row.rows = sh[0];
        row.cols = sh[1];
        row.trials = trials;
        row.residual = worst;
        row.threshold = 1e-6 * std::sqrt(static_cast<double>(r));
        row.pass = worst <= row.threshold;
        rows.push_back(row);
    }

    // inverse square root: residual form and agreement with the eigen oracle
    for (int n : {8, 16, 32, 64}) {
        const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(n) * 77);
        const Mat a = spd_with_eigs(n, log_uniform(n, 0.01, s), s);
        const double eps = 1e-9;
        auto [z, rep] = polar_express_inv_sqrt(a, table, 12, eps);
        Mat sym = 0.5 * (a + transpose(a));
        for (int i = 0; i < n; ++i) sym(i, i) += eps;
        SuiteRow row;
        row.suite = "oracles";
        row.name = "inv_sqrt_residual";
        row.solver = "iterative12";
        row.rows = n;
        row.cols = n;
        row.trials = 1;
        row.residual = fro_norm(z * sym * z - Mat::identity(n));
        row.threshold = 1e-6;
        row.pass = row.residual <= row.threshold;
        rows.push_back(row);
    }
    {
        double worst = 0.0;
        const int trials = 25;
        for (int t = 0; t < trials; ++t) {
            const std::uint64_t s = mix_seed(seed, 9000 + static_cast<std::uint64_t>(t));
            Rng rng(mix_seed(s, 4));
            std::vector<double> lam(8);
            for (double& l : lam) l = 0.5 + 0.5 * rng.uniform();
            const Mat a = spd_with_eigs(8, lam, s);
            auto [z, rep] = polar_express_inv_sqrt(a, table, 5, 1e-7);
            const Mat exact = inv_sqrt_exact(a, 1e-7);
            worst = std::max(worst, fro_norm(z - exact) / fro_norm(exact));
        }
        SuiteRow row;
        row.suite = "oracles";
        row.name = "inv_sqrt_5step_vs_exact";
        row.solver = "iterative5";
        row.rows = 8;
        row.cols = 8;
        row.trials = trials;
        row.residual = worst;
        row.threshold = 1e-3;
        row.pass = worst <= row.threshold;
        rows.push_back(row);
    }
    return rows;
}

std::vector<SuiteRow> run_equivariance_suite(int trials, std::uint64_t seed) {
    std::vector<SuiteRow> rows;
    const int dims[][2] = {{8, 5}, {5, 8}, {8, 8}, {64, 8}};

    struct Entry {
        std::string name;
        UpdateSpec spec;
        GroupAction action;
    };
    std::vector<Entry> entries;

    const auto add = [&](const std::string& name, UpdateSpec spec, GroupAction action) {
        entries.push_back({name, std::move(spec), action});
    };

    GroupAction biorth{ActionKind::Orthogonal, ActionKind::Orthogonal, false};
    GroupAction lpro{ActionKind::Permutation, ActionKind::Orthogonal, false};
    GroupAction tlpro{ActionKind::Orthogonal, ActionKind::Permutation, false};
    GroupAction lmhead{ActionKind::Permutation, ActionKind::Orthogonal, true};
    GroupAction router{ActionKind::Permutation, ActionKind::Identity, true};

    for (SolverKind sk : {SolverKind::Exact, SolverKind::Iterative}) {
        SolverOptions solver;
        solver.kind = sk;
        solver.steps = 12;
        const bool exact = sk == SolverKind::Exact;

        UpdateSpec spec;
        spec.solver = solver;

        spec.geometry = LayerGeometry::bi_orthogonal();
        spec.klass = UpdateClass::Spectral;
        spec.spectral = SpectralMapSpec::polar();
        add("spectral_polar", spec, biorth);
        spec.spectral = SpectralMapSpec::damped_inv_sqrt(1e-6);
        add("spectral_damped_inv_sqrt", spec, biorth);
        if (exact) {
            spec.spectral = SpectralMapSpec::power_map(0.5);
            add("spectral_power_half", spec, biorth);
            spec.klass = UpdateClass::NuclearScaledPolar;
            add("nuclear_scaled_polar", spec, biorth);
        }

        spec.klass = UpdateClass::RowNorm;
        spec.rowscale = RowScaleSpec::smoothed(1e-8);
        spec.spectral = SpectralMapSpec::damped_inv_sqrt(1e-8);
        for (auto [geom, act, tag] : {std::tuple{LayerGeometry::lpro(), lpro, std::string("lpro")},
                                      std::tuple{LayerGeometry::transposed_lpro(), tlpro, std::string("tlpro")}}) {
            spec.geometry = geom;
            spec.klass = UpdateClass::RowNorm;
            if (exact) add(tag + "_row_norm", spec, act); // row scaling has no inner solver
            spec.klass = UpdateClass::RightSpectral;
            add(tag + "_right_spectral", spec, act);
            spec.klass = UpdateClass::HybridRowThenSpectral;
            add(tag + "_hybrid_row_then_spectral", spec, act);
            spec.klass = UpdateClass::HybridSpectralThenRow;
            add(tag + "_hybrid_spectral_then_row", spec, act);
        }

        // quotient geometries: quotient_rows is bound to the operand rows below
        spec.geometry = LayerGeometry::lm_head(0);
        spec.klass = UpdateClass::RowNorm;
        if (exact) add("lm_head_row_norm", spec, lmhead);
        spec.klass = UpdateClass::RightSpectral;
        add("lm_head_right_spectral", spec, lmhead);
        spec.klass = UpdateClass::HybridRowThenSpectral;
        add("lm_head_hybrid_row_then_spectral", spec, lmhead);
        spec.klass = UpdateClass::HybridSpectralThenRow;
        add("lm_head_hybrid_spectral_then_row", spec, lmhead);

        spec.geometry = LayerGeometry::router(0);
        spec.klass = UpdateClass::RowNorm;
        if (exact) add("router_row_norm", spec, router);
        spec.klass = UpdateClass::LeftSpectral;
        add("router_left_spectral", spec, router);
        spec.klass = UpdateClass::HybridSpectralThenRow;
        add("router_hybrid_left_then_row", spec, router);
    }

    for (const Entry& entry : entries) {
        for (const auto& d : dims) {
            UpdateSpec spec = entry.spec;
            if (spec.geometry.is_quotient()) spec.geometry.quotient_rows = d[0];
            const bool exact = spec.solver.kind == SolverKind::Exact;
            SuiteRow row;
            row.suite = "equivariance";
            row.name = entry.name;
            row.action = action_name(entry.action);
            row.solver = exact ? "exact" : "iterative12";
            row.rows = d[0];
            row.cols = d[1];
            row.trials = trials;
            row.residual = equivariance_residual(spec, entry.action, trials,
                                                 mix_seed(seed, stable_hash(entry.name)), d[0], d[1]);
            row.threshold = exact ? 1e-8 : 1e-6;
            row.pass = row.residual <= row.threshold;
            rows.push_back(row);
        }
    }

    // negative controls: the suite must detect non-equivariant maps
    {
        auto adamw_direction = [](const Mat& d) {
            AdamState st = AdamState::init(d.rows(), d.cols());
            const Mat w(d.rows(), d.cols());
            const Mat next = adamw_step(w, st, d, 1.0, 0.9, 0.999, 1e-8, 0.0);
            return -1.0 * next;
        };
        SuiteRow row;
        row.suite = "equivariance";
        row.name = "adamw_negative_control";
        row.action = action_name(biorth);
        row.solver = "exact";
        row.rows = 8;
        row.cols = 8;
        row.trials = trials;
        row.residual = equivariance_residual(adamw_direction, LayerGeometry::bi_orthogonal(), biorth, trials,
                                             mix_seed(seed, 0xadab), 8, 8);
        row.threshold = 1e-2;
        row.negative_control = true;
        row.pass = row.residual > row.threshold;
        rows.push_back(row);

        UpdateSpec spec;
        spec.geometry = LayerGeometry::lpro();
        spec.klass = UpdateClass::RowNorm;
        spec.rowscale = RowScaleSpec::smoothed(1e-8);
        SuiteRow row2;
        row2.suite = "equivariance";
        row2.name = "row_norm_under_rotation_negative_control";
        row2.action = action_name(biorth);
        row2.solver = "exact";
        row2.rows = 8;
        row2.cols = 5;
        row2.trials = trials;
        row2.residual = equivariance_residual(spec, biorth, trials, mix_seed(seed, 0xbead), 8, 5);
        row2.threshold = 1e-2;
        row2.negative_control = true;
        row2.pass = row2.residual > row2.threshold;
        rows.push_back(row2);
    }
    return rows;
}

std::vector<SuiteRow> run_convergence_suite(std::uint64_t seed) {
    std::vector<SuiteRow> rows;
    const int m = 8, n = 6;
    const double l_max = 10.0, mu = 1.0;

    std::vector<double> lambda(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        lambda[static_cast<std::size_t>(i)] = mu + (l_max - mu) * static_cast<double>(i) / (m - 1);
    const Mat a_op = spd_with_eigs(m, lambda, mix_seed(seed, 51));
    Rng rng(mix_seed(seed, 52));
    const Mat w_star = gaussian_mat(m, n, rng);
    const Mat w0 = w_star + 0.1 * gaussian_mat(m, n, rng);
    const SyntheticLoss aniso = SyntheticLoss::quadratic_aniso(a_op, w_star);

    struct Setup {
        DescentFamily family;
        double gamma;
    };
    const Setup setups[] = {
        {DescentFamily::SpectralIdentity, 0.1},        // gamma* = c1/(L c2) = 1/L
        {DescentFamily::NuclearPolar, 1.0 / (l_max * n)},
        {DescentFamily::RightSpectralDamped, 0.005},
        {DescentFamily::LeftSpectralDamped, 0.005},
        {DescentFamily::RowNormBounded, 0.01},
        {DescentFamily::RowNormSmoothed, 0.004},
        {DescentFamily::HybridPolarRow, 0.001},
        {DescentFamily::HybridRowPolar, 0.004},
    };
    for (const Setup& s : setups) {
        TrialConfig tc;
        tc.family = s.family;
        tc.gamma = s.gamma;
        tc.steps = 1000;
        tc.damping = 0.25;
        tc.smooth_eps = 0.5;
        const ConvergenceReport rep = run_convergence_trial(aniso, w0, tc);
        SuiteRow row;
        row.suite = "convergence";
        row.name = family_name(s.family);
        row.action = "quadratic_aniso";
        row.rows = m;
        row.cols = n;
        row.trials = tc.steps;
        row.residual = static_cast<double>(rep.violations);
        row.threshold = 0.0;
        const bool gamma_ok = s.gamma <= rep.admissible_gamma_max;
        const bool rho_ok = rep.theory_rho < 0.0 || rep.worst_gap_ratio <= rep.theory_rho + 1e-9;
        row.pass = rep.violations == 0 && gamma_ok && rho_ok;
        rows.push_back(row);
    }
    return rows;
}

int cmd_verify(const RunConfig& cfg, const std::string& suite) {
    if (suite != "equivariance" && suite != "convergence" && suite != "oracles" && suite != "all")
        throw InvalidConfig("unknown suite '" + suite + "'; expected equivariance, convergence, oracles, or all");
    std::filesystem::create_directories(cfg.output_dir);
    bool all_pass = true;
    std::vector<SuiteRow> rows;

    const auto run = [&](const std::string& name, std::vector<SuiteRow> suite_rows, const std::string& csv) {
        for (const SuiteRow& r : suite_rows) {
            std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << name << ": " << r.name;
            if (!r.action.empty()) std::cout << " (" << r.action << ")";
            if (!r.solver.empty()) std::cout << " [" << r.solver << "]";
            std::cout << " " << r.rows << "x" << r.cols << " residual=" << format_double(r.residual)
                      << (r.negative_control ? " > " : " <= ") << format_double(r.threshold) << "\n";
            all_pass = all_pass && r.pass;
        }
        write_suite_csv(cfg.output_dir + "/" + csv, suite_rows);
        rows.insert(rows.end(), suite_rows.begin(), suite_rows.end());
    };

    if (suite == "oracles" || suite == "all") run("oracles", run_oracle_suite(cfg.seed), "oracle_residuals.csv");
    if (suite == "equivariance" || suite == "all")
        run("equivariance", run_equivariance_suite(cfg.verify_trials, cfg.seed), "equivariance_residuals.csv");
    if (suite == "convergence" || suite == "all")
        run("convergence", run_convergence_suite(cfg.seed), "convergence_checks.csv");

    std::cout << (all_pass ? "verify: all checks passed\n" : "verify: FAILURES detected\n");
    return all_pass ? 0 : 1;
}

int cmd_train(const RunConfig& cfg, const std::string& resume_checkpoint) {
    if (!cfg.has_trainer) throw InvalidConfig("config has no [model] section; nothing to train");
    const TrainResult result = resume_checkpoint.empty() ? toy_train(cfg.trainer)
                                                         : toy_train(cfg.trainer, resume_checkpoint);
    std::cout << "train: steps=" << cfg.trainer.total_steps
              << " final_loss=" << format_double(result.losses.empty() ? 0.0 : result.losses.back())
              << " output=" << cfg.output_dir << "\n";
    return 0;
}

int cmd_converge(const RunConfig& cfg) {
    if (!cfg.has_converge) throw InvalidConfig("config has no [converge] section");
    const ConvergeSetup& cs = cfg.converge;

    SyntheticLoss loss;
    Rng rng(mix_seed(cfg.seed, 61));
    if (cs.loss_kind == "quadratic_fro") {
        loss = SyntheticLoss::quadratic_fro(gaussian_mat(cs.rows, cs.cols, rng), cs.l_smooth);
    } else if (cs.loss_kind == "quadratic_aniso") {
        std::vector<double> lambda(static_cast<std::size_t>(cs.rows));
        for (int i = 0; i < cs.rows; ++i)
            lambda[static_cast<std::size_t>(i)] =
                cs.mu + (cs.l_smooth - cs.mu) * static_cast<double>(i) / std::max(1, cs.rows - 1);
        const Mat a = spd_with_eigs(cs.rows, lambda, mix_seed(cfg.seed, 62));
        loss = SyntheticLoss::quadratic_aniso(a, gaussian_mat(cs.rows, cs.cols, rng));
    } else {
        const Mat b = gaussian_mat(cs.rows, cs.cols, rng);
        loss = SyntheticLoss::low_rank_factor(b * transpose(b), cs.cols);
        loss.known_l = cs.l_smooth; // user-supplied local estimate
    }
    const Mat w0 = loss.kind == LossKind::LowRankFactor
                       ? gaussian_mat(cs.rows, cs.cols, rng)
                       : loss.w_star + 0.1 * gaussian_mat(cs.rows, cs.cols, rng);

    TrialConfig tc;
    tc.family = cs.family;
    tc.gamma = cs.gamma;
    tc.steps = cs.steps;
    tc.damping = cs.damping;
    tc.smooth_eps = cs.smooth_eps;
    tc.bounded_lo = cs.bounded_lo;
    tc.bounded_hi = cs.bounded_hi;
    const ConvergenceReport rep = run_convergence_trial(loss, w0, tc);

    std::filesystem::create_directories(cfg.output_dir);
    {
        std::ofstream out(cfg.output_dir + "/converge_trace.csv");
        if (!out) throw IoError("cannot write converge_trace.csv under " + cfg.output_dir);
        out << "step,f,grad_fro,grad_spec,grad_nuc,grad_rank,align,upd_fro2,bound_rhs,gap_ratio\n";
        for (std::size_t k = 0; k < rep.steps.size(); ++k) {
            const TrialStep& ts = rep.steps[k];
            out << (k + 1) << ',' << format_double(ts.f) << ',' << format_double(ts.grad_fro) << ','
                << format_double(ts.grad_spec) << ',' << format_double(ts.grad_nuc) << ',' << ts.grad_rank
                << ',' << format_double(ts.align) << ',' << format_double(ts.upd_fro2) << ','
                << format_double(ts.bound_rhs) << ',' << format_double(ts.gap_ratio) << '\n';
        }
    }
    std::ostringstream summary;
    summary << "family=" << family_name(cs.family) << " loss=" << cs.loss_kind
            << " gamma=" << format_double(cs.gamma) << " steps=" << cs.steps
            << " violations=" << rep.violations << " worst_ratio=" << format_double(rep.worst_gap_ratio)
            << " theory_rho=" << format_double(rep.theory_rho)
            << " admissible_gamma_max=" << format_double(rep.admissible_gamma_max)
            << " f_final=" << format_double(rep.f_final) << "\n";
    std::cout << summary.str();
    {
        std::ofstream out(cfg.output_dir + "/converge_summary.txt");
        if (!out) throw IoError("cannot write converge_summary.txt under " + cfg.output_dir);
        out << summary.str();
    }
    const bool rho_ok = rep.theory_rho < 0.0 || rep.worst_gap_ratio <= rep.theory_rho + 1e-9;
    return (rep.violations == 0 && rho_ok) ? 0 : 1;
}

} // namespace symopt
