#include "gaze_attn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gaze_attn/error.hpp"
#include "gaze_attn/special_functions.hpp"

namespace gaze_attn {

std::string_view to_string(TTestKind kind) {
  return kind == TTestKind::paired ? "paired" : "independent_welch";
}

double mean(std::span<const double> x) {
  if (x.empty()) throw DataError("mean of an empty sample");
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw DataError("variance needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

namespace {

void check_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("non-finite value in statistical input");
  }
}

double correlation(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("degenerate input (zero variance)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  if (x.size() < 3) throw DataError("pearson needs at least three pairs");
  check_finite(x);
  check_finite(y);
  CorrelationResult result;
  result.n = x.size();
  result.r = correlation(x, y);
  const double df = static_cast<double>(result.n - 2);
  const double one_minus = 1.0 - result.r * result.r;
  if (one_minus <= 0.0) {
    result.p_two_sided = 0.0;
    return result;
  }
  result.p_two_sided = student_t_two_sided_p(result.r * std::sqrt(df / one_minus), df);
  return result;
}

TTestResult t_test_paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("paired t-test: length mismatch");
  if (a.size() < 2) throw DataError("paired t-test needs at least two pairs");
  check_finite(a);
  check_finite(b);
  std::vector<double> diff(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) diff[k] = a[k] - b[k];
  const double var = sample_variance(diff);
  if (var == 0.0) throw DataError("paired t-test: zero variance of the differences");
  TTestResult result;
  result.kind = TTestKind::paired;
  result.df = static_cast<double>(diff.size() - 1);
  result.t = mean(diff) / std::sqrt(var / static_cast<double>(diff.size()));
  result.p_two_sided = student_t_two_sided_p(result.t, result.df);
  return result;
}

TTestResult t_test_independent(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DataError("independent t-test needs two values per sample");
  check_finite(a);
  check_finite(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na;
  const double vb = sample_variance(b) / nb;
  if (va + vb == 0.0) throw DataError("independent t-test: both samples have zero variance");
  TTestResult result;
  result.kind = TTestKind::independent_welch;
  result.t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  result.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  result.p_two_sided = student_t_two_sided_p(result.t, result.df);
  return result;
}

double bonferroni(double alpha, std::size_t n_tests) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("alpha must be in (0, 1]");
  if (n_tests < 1) throw UsageError("n_tests must be >= 1");
  return alpha / static_cast<double>(n_tests);
}

ScalingFit scaling_fit(std::span<const ScalingPoint> points) {
  if (points.size() < 2) throw DataError("scaling fit needs at least two points");
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& pt : points) {
    if (!(pt.param_count > 0.0) || !std::isfinite(pt.param_count)) {
      throw DataError("parameter counts must be positive");
    }
    if (!std::isfinite(pt.score)) throw DataError("non-finite score");
    x.push_back(std::log10(pt.param_count));
    y.push_back(pt.score);
  }
  if (std::set<double>(x.begin(), x.end()).size() < 2) {
    throw DataError("scaling fit needs at least two distinct parameter counts");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  ScalingFit fit;
  fit.points.assign(points.begin(), points.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (points.size() >= 3) {
    const auto corr = pearson(x, y);
    fit.r = corr.r;
    fit.p_two_sided = corr.p_two_sided;
  } else {
    fit.r = fit.slope > 0.0 ? 1.0 : (fit.slope < 0.0 ? -1.0 : 0.0);
  }
  return fit;
}

double scaling_predict(const ScalingFit& fit, double param_count) {
  if (!(param_count > 0.0)) throw UsageError("parameter count must be positive");
  return fit.intercept + fit.slope * std::log10(param_count);
}

}  // namespace gaze_attn
