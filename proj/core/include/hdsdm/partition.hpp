#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdsdm/inference.hpp"
#include "hdsdm/model.hpp"

namespace hdsdm {

/// Var_X[f(X) | u] over the effect's quadrature grid (equal weights).
double finite_pop_variance(const StandardizedEffect& effect, const CoefficientBlock& coeffs);

struct PartitionResult {
  std::vector<std::string> groups;
  /// Per retained sample: realized variance of each group (samples x groups).
  Eigen::MatrixXd s2;
  /// Per retained sample: shares of the total realized variance.
  Eigen::MatrixXd phi;
  Eigen::VectorXd mean_phi;
  Eigen::VectorXd mean_s2;
  /// Samples whose total realized variance was zero.
  int skipped = 0;
};

/// Realized variance of a group: the trends of its terms are summed on their
/// shared quadrature grid before taking the variance.
double group_variance(const AssembledModel& model, const std::vector<std::size_t>& terms,
                      const PosteriorSample& sample);

/// phi per sample over the model's groups (terms of one declaration share a group).
PartitionResult phi(std::span<const PosteriorSample> samples, const AssembledModel& model);

struct SensitivityPoint {
  double q = 0.0;
  PartitionResult partition;
  /// Posterior-mean trend per group on its quadrature grid, centered to mean 0.
  std::vector<Eigen::VectorXd> trends;
};

/// Posterior-mean group trends, centered.
std::vector<Eigen::VectorXd> mean_trends(std::span<const PosteriorSample> samples,
                                         const AssembledModel& model);

/// Refits with Dirichlet(q) on `split` for each q.
std::vector<SensitivityPoint> sensitivity_sweep(const ModelSpec& model, const Dataset& data,
                                                const std::string& split,
                                                std::span<const double> q_values,
                                                const McmcSettings& settings);

}  // namespace hdsdm
