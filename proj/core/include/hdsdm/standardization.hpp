#pragma once

#include <string>

#include <Eigen/Dense>

#include "hdsdm/bases.hpp"
#include "hdsdm/gmrf.hpp"
#include "hdsdm/random.hpp"

namespace hdsdm {

/// Uniform covariate law represented by an equally weighted quadrature grid.
class CovariateDistribution {
 public:
  enum class Kind { UniformInterval, UniformDiscrete, UniformPointCloud };

  /// Midpoint grid of `points` cells on [lower, upper].
  static CovariateDistribution uniform_interval(double lower, double upper,
                                                int points = 1000);
  /// Enumerates the integers first, ..., last.
  static CovariateDistribution uniform_discrete(int first, int last);
  /// Points are the rows of `cloud` (any dimension).
  static CovariateDistribution point_cloud(const Eigen::MatrixXd& cloud);

  Kind kind() const { return kind_; }
  const Eigen::MatrixXd& points() const { return points_; }
  double weight() const { return 1.0 / static_cast<double>(points_.rows()); }
  Eigen::Index size() const { return points_.rows(); }
  int dim() const { return static_cast<int>(points_.cols()); }

  /// Mean and standard deviation of one coordinate under the law. Uniform
  /// intervals use the exact (a+b)/2 and (b-a)/sqrt(12).
  double mean(int column = 0) const;
  double stddev(int column = 0) const;

  /// Weighted average of each column of `values` (rows are grid points).
  Eigen::VectorXd expectation(const Eigen::MatrixXd& values) const;

 private:
  Kind kind_ = Kind::UniformPointCloud;
  Eigen::MatrixXd points_;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

/// d_k = E_X[D_k(X)].
Eigen::VectorXd zero_mean_constraint(const BasisSpec& basis,
                                     const CovariateDistribution& dist);

/// C^2 = E_X[D(X)' S D(X)] with S the constrained covariance at sigma^2 = 1.
double reference_variance(const BasisSpec& basis, const PrecisionStructure& precision,
                          const Eigen::MatrixXd& constraints,
                          const CovariateDistribution& dist);

/// Basis + constrained precision + reference standard deviation. Coefficients
/// follow N(0, sigma^2 S / C^2), so Var_{X,u}[f | sigma^2] = sigma^2.
class StandardizedEffect {
 public:
  StandardizedEffect(std::string id, BasisSpec basis, PrecisionStructure precision,
                     Eigen::MatrixXd constraints, CovariateDistribution dist);

  const std::string& id() const { return id_; }
  const BasisSpec& basis() const { return basis_; }
  const PrecisionStructure& precision() const { return precision_; }
  const Eigen::MatrixXd& constraints() const { return law_.constraints(); }
  const CovariateDistribution& dist() const { return dist_; }
  double scale_constant() const { return scale_; }
  int size() const { return precision_.size(); }
  /// Coefficient law at sigma^2 = 1 (already divided by C^2).
  const ConstrainedGaussian& law() const { return law_; }
  /// D evaluated on the quadrature grid.
  const Eigen::MatrixXd& quadrature_design() const { return quad_design_; }

  Eigen::MatrixXd design(const Eigen::MatrixXd& x) const { return eval_basis(basis_, x); }

  Eigen::VectorXd sample_coefficients(double sigma2, Rng& rng) const {
    return law_.sample(sigma2, rng);
  }

  /// Realized trend on the quadrature grid.
  Eigen::VectorXd trend(const Eigen::VectorXd& coefficients) const {
    return quad_design_ * coefficients;
  }

 private:
  std::string id_;
  BasisSpec basis_;
  PrecisionStructure precision_;
  CovariateDistribution dist_;
  Eigen::MatrixXd quad_design_;
  double scale_ = 1.0;
  ConstrainedGaussian law_;
};

/// Attaches the zero-mean constraint unless the law already implies it and
/// scales by the reference standard deviation.
StandardizedEffect standardize(std::string id, BasisSpec basis, PrecisionStructure precision,
                               CovariateDistribution dist,
                               const Eigen::MatrixXd& extra_constraints = {});

struct PSplineSplit {
  StandardizedEffect linear;
  StandardizedEffect nonlinear;
};

/// Linear component on the standardized covariate plus an RW2 P-spline
/// constrained to zero mean and zero covariance with the covariate.
PSplineSplit split_pspline(const std::string& id, const BSpline1D& basis,
                           const CovariateDistribution& dist);

/// Monte Carlo estimate of Var_{X,u}[f | sigma^2 = 1]: each draw pairs a fresh
/// coefficient vector with a random grid point.
double mc_effect_variance(const StandardizedEffect& effect, int draws, Rng& rng);

}  // namespace hdsdm
