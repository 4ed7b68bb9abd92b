#pragma once

#include <cstdint>
#include <functional>

#include "symopt/mat.hpp"
#include "symopt/updates.hpp"

namespace symopt {

enum class ActionKind { Orthogonal, Permutation, Identity };

/// A sampled group element g acting on directions as D -> L D R^T (+ 1 a^T
/// when `shift` is set; shifts are only valid for quotient geometries, where
/// the transported update is L U(D) R^T without the shift).
struct GroupAction {
    ActionKind left = ActionKind::Identity;
    ActionKind right = ActionKind::Identity;
    bool shift = false;
};

/// Orthonormalization of a seeded Gaussian matrix; deterministic per seed,
/// |Q^T Q - I|_F <= 1e-12.
Mat random_orthogonal(int n, std::uint64_t seed);

/// Seeded uniform permutation matrix (Fisher-Yates).
Mat random_permutation(int n, std::uint64_t seed);

/// max over trials of |U(g.D) - g.U(D)|_F / max(1, |U(D)|_F), with fresh
/// random D and g each trial (per-trial seeds are seed + trial index).
/// The map overload lets non-update baselines (e.g. a coordinate-wise step)
/// run through the same harness as negative controls.
double equivariance_residual(const UpdateSpec& update, const GroupAction& action, int trials,
                             std::uint64_t seed, int rows, int cols);
double equivariance_residual(const std::function<Mat(const Mat&)>& map, const LayerGeometry& geometry,
                             const GroupAction& action, int trials, std::uint64_t seed, int rows, int cols);

/// |1^T U|_inf / max(1, |U|_max): deviation of the update from the
/// zero-column-sum (horizontal) subspace.
double horizontality_residual(const Mat& u);

} // namespace symopt
