#pragma once

// Independent reference implementations used only by tests. Each takes a
// deliberately different numerical route from the library code it checks.

#include <cstdint>
#include <span>
#include <vector>

#include "gaze_attn/corpus_io.hpp"
#include "gaze_attn/matrix.hpp"

namespace gaze_attn::oracle {

/// 1/2 sum_i sum_{j<=i} (a_ij - b_ij)(ln a_ij - ln b_ij); entries must be > 0
/// on the causal support.
double jeffreys_bruteforce(const Matrix& a, const Matrix& b);

struct OlsSolution {
  std::vector<double> weights;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Normal equations of [X | 1] solved with an eigen-decomposition
/// pseudo-inverse. R^2 is computed in long double.
OlsSolution ols_normal_equations(const Matrix& x, std::span<const double> y);

/// Word alignment by averaging rows first, then summing columns.
Matrix word_align_rows_first(const Matrix& token_matrix, const TokenMap& map);

/// Two-sided permutation p-value of Pearson r (y shuffled).
double permutation_pearson_p(std::span<const double> x, std::span<const double> y, std::size_t n_perm,
                             std::uint64_t seed);
/// Two-sided sign-flip p-value of the paired t statistic.
double permutation_paired_p(std::span<const double> a, std::span<const double> b, std::size_t n_perm,
                            std::uint64_t seed);
/// Two-sided label-permutation p-value of the Welch t statistic.
double permutation_welch_p(std::span<const double> a, std::span<const double> b, std::size_t n_perm,
                           std::uint64_t seed);

/// I_x(a, b) in 50 significant digits, rounded to double.
double ibeta_high_precision(double a, double b, double x);

}  // namespace gaze_attn::oracle
