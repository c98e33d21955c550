#include "hdsdm/standardization.hpp"

#include <cmath>
#include <utility>

#include "hdsdm/error.hpp"

namespace hdsdm {

CovariateDistribution CovariateDistribution::uniform_interval(double lower, double upper,
                                                              int points) {
  if (!(upper > lower) || points < 1) {
    throw Error(ErrorKind::Specification, "uniform interval needs upper > lower and points >= 1");
  }
  CovariateDistribution d;
  d.kind_ = Kind::UniformInterval;
  d.lower_ = lower;
  d.upper_ = upper;
  d.points_.resize(points, 1);
  const double h = (upper - lower) / points;
  for (int i = 0; i < points; ++i) d.points_(i, 0) = lower + (i + 0.5) * h;
  return d;
}

CovariateDistribution CovariateDistribution::uniform_discrete(int first, int last) {
  if (last < first) {
    throw Error(ErrorKind::Specification, "discrete support needs last >= first");
  }
  CovariateDistribution d;
  d.kind_ = Kind::UniformDiscrete;
  d.lower_ = first;
  d.upper_ = last;
  d.points_.resize(last - first + 1, 1);
  for (int v = first; v <= last; ++v) d.points_(v - first, 0) = v;
  return d;
}

CovariateDistribution CovariateDistribution::point_cloud(const Eigen::MatrixXd& cloud) {
  if (cloud.rows() == 0 || cloud.cols() == 0) {
    throw Error(ErrorKind::Validation, "point cloud must be non-empty");
  }
  if (!cloud.allFinite()) {
    throw Error(ErrorKind::Validation, "point cloud contains non-finite values");
  }
  CovariateDistribution d;
  d.kind_ = Kind::UniformPointCloud;
  d.points_ = cloud;
  return d;
}

double CovariateDistribution::mean(int column) const {
  if (kind_ == Kind::UniformInterval) return 0.5 * (lower_ + upper_);
  return points_.col(column).mean();
}

double CovariateDistribution::stddev(int column) const {
  if (kind_ == Kind::UniformInterval) return (upper_ - lower_) / std::sqrt(12.0);
  const Eigen::VectorXd c = points_.col(column).array() - points_.col(column).mean();
  return std::sqrt(c.squaredNorm() / static_cast<double>(c.size()));
}

Eigen::VectorXd CovariateDistribution::expectation(const Eigen::MatrixXd& values) const {
  return values.colwise().mean().transpose();
}

Eigen::VectorXd zero_mean_constraint(const BasisSpec& basis,
                                     const CovariateDistribution& dist) {
  return dist.expectation(eval_basis(basis, dist.points()));
}

namespace {

double variance_from_law(const Eigen::MatrixXd& quad_design, const Eigen::MatrixXd& cov) {
  // E_X[D' S D] = trace(S G), G = E_X[D D']
  const Eigen::MatrixXd gram =
      quad_design.transpose() * quad_design / static_cast<double>(quad_design.rows());
  return (cov.cwiseProduct(gram)).sum();
}

bool mean_already_zero(const ConstrainedGaussian& law, const Eigen::VectorXd& d) {
  const double dd = d.squaredNorm();
  if (dd <= 1e-24) return true;
  const double lmax = law.covariance().diagonal().maxCoeff();
  return d.dot(law.covariance() * d) <= 1e-12 * dd * std::max(lmax, 1e-300);
}

}  // namespace

double reference_variance(const BasisSpec& basis, const PrecisionStructure& precision,
                          const Eigen::MatrixXd& constraints,
                          const CovariateDistribution& dist) {
  if (basis_size(basis) != precision.size()) {
    throw Error(ErrorKind::Dimension, "basis and precision sizes differ");
  }
  const ConstrainedGaussian law(precision, constraints);
  const double c2 = variance_from_law(eval_basis(basis, dist.points()), law.covariance());
  if (!(c2 > 1e-14)) {
    throw Error(ErrorKind::Degenerate, "effect has (near) zero reference variance");
  }
  return c2;
}

StandardizedEffect::StandardizedEffect(std::string id, BasisSpec basis,
                                       PrecisionStructure precision,
                                       Eigen::MatrixXd constraints,
                                       CovariateDistribution dist)
    : id_(std::move(id)),
      basis_(std::move(basis)),
      precision_(std::move(precision)),
      dist_(std::move(dist)) {
  if (basis_size(basis_) != precision_.size()) {
    throw Error(ErrorKind::Dimension, "effect '" + id_ + "': basis and precision sizes differ");
  }
  if (input_dim(basis_) != dist_.dim()) {
    throw Error(ErrorKind::Dimension,
                "effect '" + id_ + "': distribution dimension does not match the basis");
  }
  quad_design_ = eval_basis(basis_, dist_.points());
  const ConstrainedGaussian law(precision_, constraints);
  const double c2 = variance_from_law(quad_design_, law.covariance());
  if (!(c2 > 1e-14)) {
    throw Error(ErrorKind::Degenerate, "effect '" + id_ + "' has (near) zero reference variance");
  }
  scale_ = std::sqrt(c2);
  law_ = law.scaled(1.0 / c2);
}

StandardizedEffect standardize(std::string id, BasisSpec basis, PrecisionStructure precision,
                               CovariateDistribution dist,
                               const Eigen::MatrixXd& extra_constraints) {
  const Eigen::MatrixXd extra =
      extra_constraints.cols() > 0 ? extra_constraints : Eigen::MatrixXd(precision.size(), 0);
  const ConstrainedGaussian base(precision, extra);
  const Eigen::VectorXd d = zero_mean_constraint(basis, dist);
  Eigen::MatrixXd a = extra;
  if (!mean_already_zero(base, d)) {
    a.conservativeResize(Eigen::NoChange, a.cols() + 1);
    a.col(a.cols() - 1) = d;
  }
  return StandardizedEffect(std::move(id), std::move(basis), std::move(precision), a,
                            std::move(dist));
}

PSplineSplit split_pspline(const std::string& id, const BSpline1D& basis,
                           const CovariateDistribution& dist) {
  if (dist.dim() != 1 || dist.kind() == CovariateDistribution::Kind::UniformPointCloud) {
    throw Error(ErrorKind::Specification,
                "split_pspline needs a one-dimensional interval or discrete distribution");
  }
  const LinearBasis linear{dist.mean(), dist.stddev()};
  StandardizedEffect lin = standardize(id + "_L", linear, build_iid(1), dist);

  const Eigen::MatrixXd d = eval_basis(basis, dist.points());
  const Eigen::VectorXd xt = eval_basis(linear, dist.points()).col(0);
  Eigen::MatrixXd a(basis.size, 2);
  a.col(0) = dist.expectation(d);
  a.col(1) = dist.expectation(d.array().colwise() * xt.array());
  StandardizedEffect nonlin(id + "_N", basis, build_rw2(basis.size), a, dist);
  return PSplineSplit{std::move(lin), std::move(nonlin)};
}

double mc_effect_variance(const StandardizedEffect& effect, int draws, Rng& rng) {
  const Eigen::MatrixXd& design = effect.quadrature_design();
  std::uniform_int_distribution<Eigen::Index> pick(0, design.rows() - 1);
  double mean = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd u = effect.sample_coefficients(1.0, rng);
    const double f = design.row(pick(rng)).dot(u);
    const double delta = f - mean;
    mean += delta / (i + 1);
    m2 += delta * (f - mean);
  }
  return m2 / (draws - 1);
}

}  // namespace hdsdm
