#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gaze_attn {

struct CorrelationResult {
  double r = 0.0;
  double p_two_sided = 1.0;
  std::size_t n = 0;
};

enum class TTestKind { independent_welch, paired };

std::string_view to_string(TTestKind kind);

struct TTestResult {
  double t = 0.0;
  double p_two_sided = 1.0;
  double df = 0.0;
  TTestKind kind = TTestKind::paired;
};

struct ScalingPoint {
  double param_count = 0.0;
  double score = 0.0;
};

/// Score as a straight line in log10(parameter count).
struct ScalingFit {
  double slope = 0.0;      // score per decade of parameters
  double intercept = 0.0;  // score at 1 parameter
  double r = 0.0;
  std::optional<double> p_two_sided;  // needs at least three points
  std::vector<ScalingPoint> points;
};

double mean(std::span<const double> x);
/// Unbiased sample variance (n - 1 denominator).
double sample_variance(std::span<const double> x);

/// Sample Pearson r; p from t = r sqrt((n-2)/(1-r^2)) with n-2 degrees of
/// freedom, two-sided. |r| = 1 gives p = 0. Needs n >= 3 and nonzero
/// variance on both sides.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

/// Paired t-test on a - b, df = n - 1.
TTestResult t_test_paired(std::span<const double> a, std::span<const double> b);
/// Welch's unequal-variance t-test with Welch-Satterthwaite df.
TTestResult t_test_independent(std::span<const double> a, std::span<const double> b);

/// Per-test threshold alpha / n_tests.
double bonferroni(double alpha, std::size_t n_tests);

ScalingFit scaling_fit(std::span<const ScalingPoint> points);
double scaling_predict(const ScalingFit& fit, double param_count);

}  // namespace gaze_attn
