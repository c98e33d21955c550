#pragma once

#include <vector>

#include <Eigen/Dense>

namespace hdsdm {

/// Relative threshold below which an eigenvalue is classified as zero.
inline constexpr double kZeroEigenTolerance = 1e-9;

/// Symmetric eigendecomposition with eigenvalues classified as zero when
/// |lambda| <= tol * lambda_max. Eigenvalues are sorted ascending.
struct Spectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  double max_value = 0.0;
  int rank = 0;

  bool is_zero(Eigen::Index i) const { return zero_mask_[i]; }
  Eigen::MatrixXd range_basis() const;
  Eigen::MatrixXd null_basis() const;

  friend Spectrum spectrum(const Eigen::MatrixXd& m, double tol);
  friend Spectrum spectrum_with_rank(const Eigen::MatrixXd& m, int rank);

 private:
  std::vector<bool> zero_mask_;
};

Spectrum spectrum(const Eigen::MatrixXd& m, double tol = kZeroEigenTolerance);

/// Decomposition where the rank is known a priori: the `rank` largest
/// eigenvalues are treated as nonzero regardless of their magnitude.
Spectrum spectrum_with_rank(const Eigen::MatrixXd& m, int rank);

Eigen::MatrixXd pseudo_inverse(const Spectrum& s);
double log_pseudo_determinant(const Spectrum& s);

/// Moore-Penrose pseudo-inverse of a general (possibly rectangular) matrix.
Eigen::MatrixXd pseudo_inverse_general(const Eigen::MatrixXd& m,
                                       double tol = 1e-10);

int numerical_rank(const Eigen::MatrixXd& m, double tol = 1e-10);

/// Orthonormal basis of the column span (Gram-Schmidt through QR).
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& columns);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace hdsdm
