#pragma once

// Ordinary least squares with an intercept, scored by training R^2, and the
// lower-triangle vectorization shared by the resemblance analyses.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gaze_attn/matrix.hpp"

namespace gaze_attn {

/// Relative singular-value cutoff of the least-squares solver.
inline constexpr double kRankCutoff = 1e-10;

struct DesignMatrix {
  Matrix values;  // n observations x p features
  std::vector<std::string> feature_names;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }

  /// Builds a design from equally long feature columns.
  static DesignMatrix from_columns(const std::vector<std::vector<double>>& columns,
                                   std::vector<std::string> names = {});
};

struct FitResult {
  std::vector<double> weights;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t rank = 0;  // numerical rank of [X | 1]
  std::vector<std::string> warnings;
};

/// Entries (i, j) with j <= i, row by row. Length n(n+1)/2.
std::vector<double> lower_tri_flatten(const Matrix& m);

/// Concatenation in the given (ascending sentence id) order.
std::vector<double> concat_sentences(const std::vector<std::vector<double>>& parts);

/// Minimum-norm least-squares fit of y ~ X w + b through an SVD of [X | 1]
/// with relative cutoff kRankCutoff. Rank deficiency and a zero-variance
/// target are reported as warnings (the latter with r2 = 0).
FitResult ols_fit(const DesignMatrix& x, std::span<const double> y);

/// 1 - SSR/SST clamped to [0, 1]; 0 when SST is 0.
double r_squared(std::span<const double> y, std::span<const double> y_hat);

}  // namespace gaze_attn
