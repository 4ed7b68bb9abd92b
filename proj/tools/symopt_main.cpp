#include <CLI11.hpp>

#include <iostream>

#include "symopt/commands.hpp"

// Exit codes: 0 = all checks pass, 1 = invariant or runtime failure,
// 2 = configuration error.
int main(int argc, char** argv) {
    CLI::App app{"symmetry-compatible matrix optimizer toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_override;
    long seed_override = -1;

    std::string suite = "all";
    CLI::App* verify = app.add_subcommand("verify", "run property suites (equivariance/convergence/oracles)");
    verify->add_option("--config", config_path, "config file")->required();
    verify->add_option("--suite", suite, "equivariance | convergence | oracles | all");
    verify->add_option("--seed", seed_override, "override the config seed");
    verify->add_option("--output", output_override, "override the output directory");

    std::string resume_path;
    CLI::App* train = app.add_subcommand("train", "run a toy-model training experiment");
    train->add_option("--config", config_path, "config file")->required();
    train->add_option("--resume", resume_path, "resume from a checkpoint file");
    train->add_option("--seed", seed_override, "override the config seed");
    train->add_option("--output", output_override, "override the output directory");

    CLI::App* converge = app.add_subcommand("converge", "run a synthetic-loss convergence trial");
    converge->add_option("--config", config_path, "config file")->required();
    converge->add_option("--seed", seed_override, "override the config seed");
    converge->add_option("--output", output_override, "override the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        symopt::RunConfig cfg = symopt::load_run_config(config_path);
        if (seed_override >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed_override);
            cfg.trainer.seed = cfg.seed;
        }
        if (!output_override.empty()) {
            cfg.output_dir = output_override;
            cfg.trainer.output_dir = output_override;
        }
        if (verify->parsed()) return symopt::cmd_verify(cfg, suite);
        if (train->parsed()) return symopt::cmd_train(cfg, resume_path);
        if (converge->parsed()) return symopt::cmd_converge(cfg);
    } catch (const symopt::ConfigError& e) {
        std::cerr << "config error: " << config_path << ": " << e.what() << "\n";
        return 2;
    } catch (const symopt::InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const symopt::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 1;
    } catch (const symopt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
