#include "symopt/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace symopt {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double to_double(const ConfigEntry& e, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing text");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(e.line, "expected a number for '" + e.key + "', got '" + text + "'");
    }
}

long to_long(const ConfigEntry& e, const std::string& text) {
    try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing text");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(e.line, "expected an integer for '" + e.key + "', got '" + text + "'");
    }
}

// Per-section typed reader that tracks which keys were consumed so unknown
// keys can be reported with their line numbers.
class SectionReader {
  public:
    explicit SectionReader(const ConfigSection& s) : section_(s), used_(s.entries.size(), false) {}

    const ConfigEntry* find(const std::string& key) {
        const ConfigEntry* hit = nullptr;
        for (std::size_t i = 0; i < section_.entries.size(); ++i) {
            if (section_.entries[i].key == key) {
                hit = &section_.entries[i];
                used_[i] = true;
            }
        }
        return hit; // last occurrence wins
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        const ConfigEntry* e = find(key);
        return e ? e->value : fallback;
    }

    double get_double(const std::string& key, double fallback) {
        const ConfigEntry* e = find(key);
        return e ? to_double(*e, e->value) : fallback;
    }

    long get_long(const std::string& key, long fallback) {
        const ConfigEntry* e = find(key);
        return e ? to_long(*e, e->value) : fallback;
    }

    std::vector<const ConfigEntry*> all(const std::string& key) {
        std::vector<const ConfigEntry*> out;
        for (std::size_t i = 0; i < section_.entries.size(); ++i) {
            if (section_.entries[i].key == key) {
                out.push_back(&section_.entries[i]);
                used_[i] = true;
            }
        }
        return out;
    }

    void finish() const {
        for (std::size_t i = 0; i < section_.entries.size(); ++i)
            if (!used_[i])
                throw ConfigError(section_.entries[i].line,
                                  "unknown key '" + section_.entries[i].key + "' in section [" +
                                      section_.kind + (section_.name.empty() ? "" : " " + section_.name) + "]");
    }

  private:
    const ConfigSection& section_;
    std::vector<bool> used_;
};

} // namespace

const ConfigSection* ConfigFile::find(const std::string& kind, const std::string& name) const {
    for (const ConfigSection& s : sections)
        if (s.kind == kind && s.name == name) return &s;
    return nullptr;
}

ConfigFile parse_config_text(const std::string& text) {
    ConfigFile file;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    ConfigSection* current = nullptr;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
            const std::string inner = trim(line.substr(1, line.size() - 2));
            if (inner.empty()) throw ConfigError(line_no, "empty section name");
            const auto parts = split_ws(inner);
            if (parts.size() > 2) throw ConfigError(line_no, "section header takes at most two words");
            ConfigSection s;
            s.kind = parts[0];
            s.name = parts.size() > 1 ? parts[1] : "";
            s.line = line_no;
            file.sections.push_back(std::move(s));
            current = &file.sections.back();
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value'");
        if (!current) throw ConfigError(line_no, "key outside of any [section]");
        ConfigEntry e;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = line_no;
        if (e.key.empty()) throw ConfigError(line_no, "empty key");
        current->entries.push_back(std::move(e));
    }
    return file;
}

ConfigFile parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

namespace {

DescentFamily parse_family(const ConfigEntry& e) {
    const std::string& v = e.value;
    if (v == "spectral_identity") return DescentFamily::SpectralIdentity;
    if (v == "nuclear_polar") return DescentFamily::NuclearPolar;
    if (v == "right_spectral_damped") return DescentFamily::RightSpectralDamped;
    if (v == "left_spectral_damped") return DescentFamily::LeftSpectralDamped;
    if (v == "row_norm_bounded") return DescentFamily::RowNormBounded;
    if (v == "row_norm_smoothed") return DescentFamily::RowNormSmoothed;
    if (v == "hybrid_polar_row") return DescentFamily::HybridPolarRow;
    if (v == "hybrid_row_polar") return DescentFamily::HybridRowPolar;
    throw ConfigError(e.line, "unknown descent family '" + v + "'");
}

UpdateClass parse_class(const ConfigEntry& e) {
    const std::string& v = e.value;
    if (v == "Spectral") return UpdateClass::Spectral;
    if (v == "NuclearScaledPolar") return UpdateClass::NuclearScaledPolar;
    if (v == "RightSpectral") return UpdateClass::RightSpectral;
    if (v == "LeftSpectral") return UpdateClass::LeftSpectral;
    if (v == "RowNorm") return UpdateClass::RowNorm;
    if (v == "HybridRowThenSpectral") return UpdateClass::HybridRowThenSpectral;
    if (v == "HybridSpectralThenRow") return UpdateClass::HybridSpectralThenRow;
    if (v == "SignDiagLift") return UpdateClass::SignDiagLift;
    throw ConfigError(e.line, "unknown update class '" + v + "'");
}

LayerGeometry parse_geometry(const ConfigEntry& e, const ToyModelConfig& model) {
    const std::string& v = e.value;
    if (v == "BiOrthogonal") return LayerGeometry::bi_orthogonal();
    if (v == "LPRO") return LayerGeometry::lpro();
    if (v == "TransposedLPRO") return LayerGeometry::transposed_lpro();
    if (v == "LMHeadQuotient") return LayerGeometry::lm_head(model.vocab);
    if (v == "RouterQuotient") return LayerGeometry::router(model.experts);
    throw ConfigError(e.line, "unknown geometry '" + v + "'");
}

SpectralMapSpec parse_psi(const ConfigEntry& e) {
    const auto parts = split_ws(e.value);
    if (parts.empty()) throw ConfigError(e.line, "empty spectral map");
    if (parts[0] == "identity") return SpectralMapSpec::identity();
    if (parts[0] == "polar") return SpectralMapSpec::polar();
    if (parts[0] == "power") {
        if (parts.size() != 2) throw ConfigError(e.line, "power map needs one exponent");
        return SpectralMapSpec::power_map(to_double(e, parts[1]));
    }
    if (parts[0] == "damped_inv_sqrt") {
        if (parts.size() != 2) throw ConfigError(e.line, "damped_inv_sqrt needs one epsilon");
        return SpectralMapSpec::damped_inv_sqrt(to_double(e, parts[1]));
    }
    throw ConfigError(e.line, "unknown spectral map '" + parts[0] + "'");
}

RowScaleSpec parse_eta(const ConfigEntry& e) {
    const auto parts = split_ws(e.value);
    if (parts.empty()) throw ConfigError(e.line, "empty row scale rule");
    if (parts[0] == "smoothed") {
        if (parts.size() != 2) throw ConfigError(e.line, "smoothed rule needs one epsilon");
        return RowScaleSpec::smoothed(to_double(e, parts[1]));
    }
    if (parts[0] == "bounded") {
        if (parts.size() != 3) throw ConfigError(e.line, "bounded rule needs lo and hi");
        return RowScaleSpec::bounded(to_double(e, parts[1]), to_double(e, parts[2]));
    }
    throw ConfigError(e.line, "unknown row scale rule '" + parts[0] + "'");
}

ScheduleSpec parse_schedule(const ConfigEntry& e, int total_steps) {
    const auto parts = split_ws(e.value);
    if (parts.empty()) throw ConfigError(e.line, "empty schedule");
    try {
        if (parts[0] == "stable_decay") {
            if (parts.size() != 2) throw ConfigError(e.line, "stable_decay needs a fraction");
            return ScheduleSpec::stable_decay(to_double(e, parts[1]), total_steps);
        }
        if (parts[0] == "warmup_cosine") {
            if (parts.size() != 2) throw ConfigError(e.line, "warmup_cosine needs a warmup step count");
            return ScheduleSpec::warmup_cosine(static_cast<int>(to_long(e, parts[1])), total_steps);
        }
    } catch (const InvalidConfig& err) {
        throw ConfigError(e.line, err.what());
    }
    throw ConfigError(e.line, "unknown schedule '" + parts[0] + "'");
}

SolverOptions parse_solver_section(const ConfigFile& file) {
    SolverOptions solver;
    const ConfigSection* s = file.find("solver");
    if (!s) return solver;
    SectionReader r(*s);
    const std::string kind = r.get_string("kind", "exact");
    if (kind == "exact")
        solver.kind = SolverKind::Exact;
    else if (kind == "iterative")
        solver.kind = SolverKind::Iterative;
    else
        throw ConfigError(s->line, "solver kind must be exact or iterative");
    solver.steps = static_cast<int>(r.get_long("steps", 12));
    const auto coeffs = r.all("coeff");
    if (!coeffs.empty()) {
        CoeffTable table;
        for (const ConfigEntry* e : coeffs) {
            const auto parts = split_ws(e->value);
            if (parts.size() != 3) throw ConfigError(e->line, "coeff takes exactly three numbers");
            table.triples.push_back({to_double(*e, parts[0]), to_double(*e, parts[1]), to_double(*e, parts[2])});
        }
        solver.coeffs = table;
    }
    r.finish();
    return solver;
}

OptimizerChoice parse_optimizer(const ConfigSection& s, const ToyModelConfig& model, int total_steps,
                                const SolverOptions& default_solver) {
    SectionReader r(s);
    OptimizerChoice oc;
    const std::string kind = r.get_string("kind", "matrix");
    if (kind == "adamw") {
        oc.use_adamw = true;
        oc.adam_lr = r.get_double("lr", 1e-3);
        oc.adam_beta1 = r.get_double("beta1", 0.9);
        oc.adam_beta2 = r.get_double("beta2", 0.999);
        oc.adam_eps = r.get_double("eps", 1e-8);
        oc.adam_weight_decay = r.get_double("weight_decay", 0.0);
        if (const ConfigEntry* e = r.find("schedule"))
            oc.adam_schedule = parse_schedule(*e, total_steps);
        else
            oc.adam_schedule = ScheduleSpec::warmup_cosine(std::min(100, std::max(1, total_steps / 10)), total_steps);
        r.finish();
        return oc;
    }
    if (kind != "matrix") throw ConfigError(s.line, "optimizer kind must be matrix or adamw");

    OptimConfig& cfg = oc.matrix;
    cfg.lr0 = r.get_double("lr0", 0.02);
    cfg.momentum_beta = r.get_double("beta", 0.9);
    const std::string mom = r.get_string("momentum", "ema");
    if (mom == "ema")
        cfg.momentum_kind = MomentumKind::EMA;
    else if (mom == "polyak")
        cfg.momentum_kind = MomentumKind::Polyak;
    else if (mom == "nesterov")
        cfg.momentum_kind = MomentumKind::Nesterov;
    else
        throw ConfigError(s.line, "momentum must be ema, polyak, or nesterov");
    cfg.alpha = r.get_double("alpha", 0.0);
    cfg.eps = r.get_double("eps", 1e-8);
    cfg.weight_decay = r.get_double("weight_decay", 0.0);

    if (const ConfigEntry* e = r.find("class")) cfg.update.klass = parse_class(*e);
    if (const ConfigEntry* e = r.find("geometry")) cfg.update.geometry = parse_geometry(*e, model);
    if (const ConfigEntry* e = r.find("psi")) cfg.update.spectral = parse_psi(*e);
    if (const ConfigEntry* e = r.find("eta")) cfg.update.rowscale = parse_eta(*e);

    cfg.update.solver = default_solver;
    if (const ConfigEntry* e = r.find("solver")) {
        const auto parts = split_ws(e->value);
        if (parts[0] == "exact")
            cfg.update.solver.kind = SolverKind::Exact;
        else if (parts[0] == "iterative") {
            cfg.update.solver.kind = SolverKind::Iterative;
            if (parts.size() > 1) cfg.update.solver.steps = static_cast<int>(to_long(*e, parts[1]));
        } else if (parts[0] != "default")
            throw ConfigError(e->line, "solver must be default, exact, or iterative");
    }

    if (const ConfigEntry* e = r.find("schedule"))
        cfg.schedule = parse_schedule(*e, total_steps);
    else
        cfg.schedule = ScheduleSpec::stable_decay(0.6, total_steps);
    r.finish();

    try {
        cfg.validate();
    } catch (const InvalidConfig& err) {
        throw ConfigError(s.line, std::string("invalid optimizer: ") + err.what());
    }
    return oc;
}

} // namespace

RunConfig assemble_run_config(const ConfigFile& file) {
    RunConfig rc;
    if (const ConfigSection* s = file.find("run")) {
        SectionReader r(*s);
        rc.seed = static_cast<std::uint64_t>(r.get_long("seed", 1));
        rc.output_dir = r.get_string("output_dir", "out");
        rc.trainer.total_steps = static_cast<int>(r.get_long("total_steps", 200));
        rc.trainer.log_interval = static_cast<int>(r.get_long("log_interval", 20));
        rc.trainer.checkpoint_interval = static_cast<int>(r.get_long("checkpoint_interval", 0));
        rc.verify_trials = static_cast<int>(r.get_long("verify_trials", 100));
        r.finish();
    }
    rc.trainer.seed = rc.seed;
    rc.trainer.output_dir = rc.output_dir;

    if (const ConfigSection* s = file.find("model")) {
        rc.has_trainer = true;
        SectionReader r(*s);
        ToyModelConfig& m = rc.trainer.model;
        m.vocab = static_cast<int>(r.get_long("vocab", 64));
        m.d_model = static_cast<int>(r.get_long("d_model", 16));
        m.d_ff = static_cast<int>(r.get_long("d_ff", 32));
        m.experts = static_cast<int>(r.get_long("experts", 0));
        m.top_k = static_cast<int>(r.get_long("top_k", 2));
        m.batch = static_cast<int>(r.get_long("batch", 8));
        m.seq_len = static_cast<int>(r.get_long("seq_len", 16));
        m.init_std = r.get_double("init_std", 0.02);
        m.aux_load_balance_weight = r.get_double("aux_load_balance_weight", 0.0);
        m.aux_z_weight = r.get_double("aux_z_weight", 0.0);
        r.finish();
        try {
            m.validate();
        } catch (const InvalidConfig& err) {
            throw ConfigError(s->line, std::string("invalid model: ") + err.what());
        }

        const SolverOptions default_solver = parse_solver_section(file);
        const struct {
            const char* name;
            OptimizerChoice* slot;
        } classes[] = {
            {"embedding", &rc.trainer.opt_embedding}, {"gate", &rc.trainer.opt_gate},
            {"up", &rc.trainer.opt_up},               {"down", &rc.trainer.opt_down},
            {"head", &rc.trainer.opt_head},           {"router", &rc.trainer.opt_router},
        };
        for (const auto& c : classes) {
            const ConfigSection* os = file.find("optimizer", c.name);
            if (!os) {
                // default: coordinate-wise baseline
                OptimizerChoice oc;
                oc.use_adamw = true;
                oc.adam_schedule =
                    ScheduleSpec::warmup_cosine(std::min(100, std::max(1, rc.trainer.total_steps / 10)),
                                                rc.trainer.total_steps);
                *c.slot = oc;
                continue;
            }
            *c.slot = parse_optimizer(*os, m, rc.trainer.total_steps, default_solver);
        }
    }

    if (const ConfigSection* s = file.find("converge")) {
        rc.has_converge = true;
        SectionReader r(*s);
        ConvergeSetup& cs = rc.converge;
        if (const ConfigEntry* e = r.find("family")) cs.family = parse_family(*e);
        cs.loss_kind = r.get_string("loss", "quadratic_fro");
        if (cs.loss_kind != "quadratic_fro" && cs.loss_kind != "quadratic_aniso" && cs.loss_kind != "low_rank_factor")
            throw ConfigError(s->line, "unknown loss kind '" + cs.loss_kind + "'");
        cs.rows = static_cast<int>(r.get_long("rows", 8));
        cs.cols = static_cast<int>(r.get_long("cols", 6));
        cs.l_smooth = r.get_double("l_smooth", 1.0);
        cs.mu = r.get_double("mu", 1.0);
        cs.gamma = r.get_double("gamma", 0.1);
        cs.steps = static_cast<int>(r.get_long("steps", 1000));
        cs.damping = r.get_double("damping", 1e-8);
        cs.smooth_eps = r.get_double("smooth_eps", 0.5);
        cs.bounded_lo = r.get_double("bounded_lo", 0.5);
        cs.bounded_hi = r.get_double("bounded_hi", 2.0);
        r.finish();
    }

    for (const ConfigSection& s : file.sections) {
        if (s.kind != "run" && s.kind != "model" && s.kind != "solver" && s.kind != "optimizer" &&
            s.kind != "converge")
            throw ConfigError(s.line, "unknown section [" + s.kind + "]");
        if (s.kind == "optimizer") {
            const std::string& n = s.name;
            if (n != "embedding" && n != "gate" && n != "up" && n != "down" && n != "head" && n != "router")
                throw ConfigError(s.line, "unknown optimizer target '" + n + "'");
        }
    }
    return rc;
}

RunConfig load_run_config(const std::string& path) { return assemble_run_config(parse_config_file(path)); }

} // namespace symopt
