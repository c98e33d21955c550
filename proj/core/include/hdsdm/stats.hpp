#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hdsdm {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value
/// uses the Kolmogorov limit law with Stephens' finite-n correction.
KsResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Survival function of the Kolmogorov distribution.
double kolmogorov_survival(double t);

/// Split potential scale reduction factor; each row of `draws` is one chain.
double split_rhat(const Eigen::MatrixXd& draws);

double sample_median(std::vector<double> values);

/// Population variance (divisor n).
double population_variance(const Eigen::VectorXd& values);

}  // namespace hdsdm
