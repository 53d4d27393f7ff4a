#pragma once

#include <Eigen/Core>

namespace fiberair {

/// Per-symbol auxiliary backward channel r_k(.|y): row k holds M
/// nonnegative probabilities summing to 1.
struct PosteriorTable {
  Eigen::MatrixXd probs;  // K x M

  int symbol_count() const { return static_cast<int>(probs.rows()); }
  int alphabet_size() const { return static_cast<int>(probs.cols()); }
};

/// Floor applied to posterior entries before any log; keeps a degenerate
/// Gaussian fit from producing -inf without materially biasing the rate.
inline constexpr double kProbabilityFloor = 1e-300;

}  // namespace fiberair
