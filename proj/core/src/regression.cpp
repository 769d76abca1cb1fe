#include "gaze_attn/regression.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "gaze_attn/error.hpp"

namespace gaze_attn {

DesignMatrix DesignMatrix::from_columns(const std::vector<std::vector<double>>& columns,
                                        std::vector<std::string> names) {
  if (columns.empty()) throw UsageError("design needs at least one column");
  const std::size_t n = columns.front().size();
  DesignMatrix design;
  design.values = Matrix(n, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != n) throw DataError("design columns differ in length");
    for (std::size_t r = 0; r < n; ++r) design.values(r, c) = columns[c][r];
  }
  if (names.empty()) {
    for (std::size_t c = 0; c < columns.size(); ++c) names.push_back("x" + std::to_string(c));
  }
  if (names.size() != columns.size()) throw UsageError("feature name count does not match columns");
  design.feature_names = std::move(names);
  return design;
}

std::vector<double> lower_tri_flatten(const Matrix& m) {
  if (!m.square()) throw DataError("lower_tri_flatten needs a square matrix");
  std::vector<double> out;
  out.reserve(m.rows() * (m.rows() + 1) / 2);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) out.push_back(m(i, j));
  }
  return out;
}

std::vector<double> concat_sentences(const std::vector<std::vector<double>>& parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<double> out;
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw DataError("r_squared: length mismatch");
  if (y.size() < 2) throw DataError("r_squared needs at least two observations");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sst = 0.0;
  double ssr = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    sst += (y[k] - mean) * (y[k] - mean);
    ssr += (y[k] - y_hat[k]) * (y[k] - y_hat[k]);
  }
  if (sst == 0.0) return 0.0;
  return std::clamp(1.0 - ssr / sst, 0.0, 1.0);
}

FitResult ols_fit(const DesignMatrix& x, std::span<const double> y) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (p < 1) throw DataError("design has no features");
  if (n != y.size()) {
    throw DataError("design has " + std::to_string(n) + " rows but target has " + std::to_string(y.size()));
  }
  if (n < 2) throw DataError("ols_fit needs at least two observations");

  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      const double v = x.values(r, c);
      if (!std::isfinite(v)) throw DataError("non-finite value in design matrix");
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = 1.0;
    if (!std::isfinite(y[r])) throw DataError("non-finite value in target");
    b(static_cast<Eigen::Index>(r)) = y[r];
  }

  FitResult fit;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  const bool constant_target = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankCutoff);
  fit.rank = static_cast<std::size_t>(svd.rank());
  if (fit.rank < p + 1) {
    fit.warnings.push_back("rank-deficient design (rank " + std::to_string(fit.rank) + " of " +
                           std::to_string(p + 1) + "); minimum-norm weights");
  }
  const Eigen::VectorXd solution = svd.solve(b);
  fit.weights.assign(solution.data(), solution.data() + p);
  fit.intercept = solution(static_cast<Eigen::Index>(p));

  if (constant_target) {
    fit.warnings.push_back("zero variance target");
    fit.r2 = 0.0;
    return fit;
  }
  const Eigen::VectorXd fitted = a * solution;
  fit.r2 = r_squared(y, std::span<const double>(fitted.data(), n));
  return fit;
}

}  // namespace gaze_attn
