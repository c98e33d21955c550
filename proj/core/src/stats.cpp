#include "hdsdm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hdsdm/error.hpp"

namespace hdsdm {

double kolmogorov_survival(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(ErrorKind::Validation, "ks_test: no samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double root = std::sqrt(n);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

double split_rhat(const Eigen::MatrixXd& draws) {
  const Eigen::Index half = draws.cols() / 2;
  if (half < 2) throw Error(ErrorKind::Validation, "split_rhat: need at least 4 draws per chain");
  const Eigen::Index m = 2 * draws.rows();
  Eigen::MatrixXd split(m, half);
  for (Eigen::Index c = 0; c < draws.rows(); ++c) {
    split.row(2 * c) = draws.row(c).head(half);
    split.row(2 * c + 1) = draws.row(c).segment(draws.cols() - half, half);
  }
  const auto n = static_cast<double>(half);
  const Eigen::VectorXd means = split.rowwise().mean();
  const double grand = means.mean();
  const double b = n / static_cast<double>(m - 1) * (means.array() - grand).square().sum();
  double w = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    w += (split.row(j).array() - means[j]).square().sum() / (n - 1.0);
  }
  w /= static_cast<double>(m);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double sample_median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::Validation, "median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<long>(mid)));
  }
  return m;
}

double population_variance(const Eigen::VectorXd& values) {
  if (values.size() == 0) return 0.0;
  return (values.array() - values.mean()).square().mean();
}

}  // namespace hdsdm
