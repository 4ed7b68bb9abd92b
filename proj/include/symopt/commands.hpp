#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symopt/config.hpp"

namespace symopt {

/// One row of a verification suite: a measured residual against a threshold.
/// Negative-control rows pass when the residual EXCEEDS the threshold.
struct SuiteRow {
    std::string suite;
    std::string name;
    std::string action;
    std::string solver;
    int rows = 0;
    int cols = 0;
    int trials = 0;
    double residual = 0.0;
    double threshold = 0.0;
    bool negative_control = false;
    bool pass = false;
};

std::vector<SuiteRow> run_oracle_suite(std::uint64_t seed);
std::vector<SuiteRow> run_equivariance_suite(int trials, std::uint64_t seed);
std::vector<SuiteRow> run_convergence_suite(std::uint64_t seed);

/// suite is one of: equivariance, convergence, oracles, all.
/// Writes one CSV per executed suite under the config's output_dir and prints
/// a row per check. Returns 0 when everything passes, 1 otherwise.
int cmd_verify(const RunConfig& cfg, const std::string& suite);

/// Runs toy training per the config; resume_checkpoint may be empty.
int cmd_train(const RunConfig& cfg, const std::string& resume_checkpoint = "");

/// Runs one convergence trial and writes trace plus summary files.
int cmd_converge(const RunConfig& cfg);

} // namespace symopt
