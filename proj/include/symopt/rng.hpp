#pragma once

#include <cstdint>
#include <random>

#include "symopt/mat.hpp"

namespace symopt {

/// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
/// is pinned by the standard) and maps raw bits to doubles explicitly, so the
/// stream is identical across platforms and standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (explicit, not std::normal_distribution,
    /// which is implementation-defined).
    double gaussian();

    /// Uniform integer in [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n);

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Stable seed mixing for deriving independent streams, e.g. per trial or step.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

Mat gaussian_mat(int rows, int cols, Rng& rng);

} // namespace symopt
