#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "symopt/errors.hpp"
#include "symopt/losses.hpp"
#include "symopt/toy_model.hpp"

namespace symopt {

/// Configuration file syntax error; carries a 1-based line number.
struct ConfigError : Error {
    int line;
    ConfigError(int line_, const std::string& what) : Error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

/// Flat sectioned key-value text:
///   # comment
///   [section] or [section name]
///   key = value
/// Values keep their raw text; typed access happens at assembly time.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line;
};

struct ConfigSection {
    std::string kind;    // e.g. "optimizer"
    std::string name;    // e.g. "embedding" (may be empty)
    std::vector<ConfigEntry> entries;
    int line;
};

struct ConfigFile {
    std::vector<ConfigSection> sections;

    const ConfigSection* find(const std::string& kind, const std::string& name = "") const;
};

ConfigFile parse_config_text(const std::string& text);
ConfigFile parse_config_file(const std::string& path);

/// Parameters for a converge run (matrices are built from the seed on demand).
struct ConvergeSetup {
    DescentFamily family = DescentFamily::SpectralIdentity;
    std::string loss_kind = "quadratic_fro"; // quadratic_fro | quadratic_aniso | low_rank_factor
    int rows = 8;
    int cols = 6;
    double l_smooth = 1.0;
    double mu = 1.0; // smallest curvature for quadratic_aniso
    double gamma = 0.1;
    int steps = 1000;
    double damping = 1e-8;
    double smooth_eps = 0.5;
    double bounded_lo = 0.5;
    double bounded_hi = 2.0;
};

/// Everything a command needs, assembled from one config file.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int verify_trials = 100;

    bool has_trainer = false;
    TrainerConfig trainer;

    bool has_converge = false;
    ConvergeSetup converge;
};

RunConfig assemble_run_config(const ConfigFile& file);
RunConfig load_run_config(const std::string& path);

} // namespace symopt
