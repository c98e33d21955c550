#pragma once

#include <string>

#include <Eigen/Dense>

#include "hdsdm/linalg.hpp"
#include "hdsdm/random.hpp"

namespace hdsdm {

/// Symmetric positive-semidefinite precision with an explicit orthonormal
/// null-space basis. Immutable after construction.
class PrecisionStructure {
 public:
  /// Validates symmetry and semidefiniteness; the null space is taken from the
  /// eigen classification.
  static PrecisionStructure from_matrix(const Eigen::MatrixXd& q);

  /// As `from_matrix`, but with a known null space. Throws if the eigen count
  /// disagrees with the supplied basis or Q*S != 0.
  static PrecisionStructure with_null_space(const Eigen::MatrixXd& q,
                                            const Eigen::MatrixXd& null_space);

  const Eigen::MatrixXd& matrix() const { return q_; }
  const Eigen::MatrixXd& null_space() const { return null_; }
  const Spectrum& spectrum() const { return spectrum_; }
  int size() const { return static_cast<int>(q_.rows()); }
  int rank() const { return spectrum_.rank; }
  int nullity() const { return size() - rank(); }

 private:
  PrecisionStructure(Eigen::MatrixXd q, Spectrum s, Eigen::MatrixXd null)
      : q_(std::move(q)), spectrum_(std::move(s)), null_(std::move(null)) {}

  Eigen::MatrixXd q_;
  Spectrum spectrum_;
  Eigen::MatrixXd null_;
};

/// First-order random walk: Q = D1' D1, null space span{1}.
PrecisionStructure build_rw1(int k);

/// Second-order random walk: Q = D2' D2, null space span{1, (1..K)}.
PrecisionStructure build_rw2(int k);

/// Intrinsic CAR on a graph: Q = diag(W 1) - W, one null vector per
/// connected component.
PrecisionStructure build_icar(const Eigen::MatrixXd& adjacency);

PrecisionStructure build_iid(int k);

Eigen::MatrixXd generalized_inverse(const PrecisionStructure& p);
double generalized_log_det(const PrecisionStructure& p);

struct CoefficientBlock {
  std::string effect_id;
  Eigen::VectorXd values;
};

/// Zero-mean Gaussian law of an intrinsic GMRF subject to A'u = 0.
///
/// The precision is flat along its null space. Constraints that pin null-space
/// directions select the representative u = v + S a with A'u = 0 (an oblique
/// projection); the remaining constraints condition v ~ N(0, Q^+) by kriging.
/// Null directions that no constraint pins are left at zero, so with no
/// constraints the law is N(0, Q^+).
class ConstrainedGaussian {
 public:
  ConstrainedGaussian() = default;
  ConstrainedGaussian(const PrecisionStructure& p, const Eigen::MatrixXd& a);

  /// Law with covariance multiplied by `factor`.
  ConstrainedGaussian scaled(double factor) const;

  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& constraints() const { return a_; }
  /// K x r factor with covariance = F F'.
  const Eigen::MatrixXd& factor() const { return factor_; }
  /// Pseudo-inverse of the covariance (precision on the support subspace).
  const Eigen::MatrixXd& precision() const { return precision_; }
  int rank() const { return rank_; }
  int size() const { return static_cast<int>(cov_.rows()); }
  double log_pseudo_det() const { return log_pdet_; }

  /// u ~ N(0, sigma2 * covariance) with A'u = 0 on every draw.
  Eigen::VectorXd sample(double sigma2, Rng& rng) const;

  /// Log density on the support subspace (w.r.t. r-dimensional Lebesgue
  /// measure) of N(0, sigma2 * covariance).
  double log_density(const Eigen::VectorXd& u, double sigma2) const;

  /// Removes constraint violations due to rounding.
  Eigen::VectorXd project(const Eigen::VectorXd& u) const;

 private:
  void finalize();

  Eigen::MatrixXd a_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd precision_;
  Eigen::MatrixXd projector_;  // orthogonal projector onto {u : A'u = 0}
  int rank_ = 0;
  double log_pdet_ = 0.0;
};

/// Draw u ~ N(0, sigma2 Q^+) subject to A'u = 0.
CoefficientBlock sample_constrained(const PrecisionStructure& p,
                                    const Eigen::MatrixXd& a, double sigma2,
                                    Rng& rng, std::string effect_id = {});

}  // namespace hdsdm
