#include "hdsdm/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "hdsdm/error.hpp"

namespace hdsdm {

namespace {

Spectrum decompose(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::Dimension, "spectrum: matrix must be square");
  }
  Spectrum s;
  if (m.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrize(m));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::Numerical, "spectrum: eigendecomposition failed");
  }
  s.values = solver.eigenvalues();
  s.vectors = solver.eigenvectors();
  s.max_value = std::max(0.0, s.values.maxCoeff());
  return s;
}

}  // namespace

Spectrum spectrum(const Eigen::MatrixXd& m, double tol) {
  Spectrum s = decompose(m);
  const double cut = tol * s.max_value;
  s.zero_mask_.assign(static_cast<std::size_t>(s.values.size()), false);
  s.rank = 0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    const bool zero = s.max_value <= 0.0 || std::abs(s.values[i]) <= cut;
    s.zero_mask_[static_cast<std::size_t>(i)] = zero;
    if (!zero) ++s.rank;
  }
  return s;
}

Spectrum spectrum_with_rank(const Eigen::MatrixXd& m, int rank) {
  Spectrum s = decompose(m);
  const auto n = static_cast<int>(s.values.size());
  if (rank < 0 || rank > n) {
    throw Error(ErrorKind::Dimension, "spectrum_with_rank: rank out of range");
  }
  s.zero_mask_.assign(static_cast<std::size_t>(n), true);
  // ascending order: the last `rank` eigenvalues are the nonzero ones
  for (int i = n - rank; i < n; ++i) s.zero_mask_[static_cast<std::size_t>(i)] = false;
  s.rank = rank;
  return s;
}

Eigen::MatrixXd Spectrum::range_basis() const {
  Eigen::MatrixXd out(vectors.rows(), rank);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!is_zero(i)) out.col(c++) = vectors.col(i);
  }
  return out;
}

Eigen::MatrixXd Spectrum::null_basis() const {
  Eigen::MatrixXd out(vectors.rows(), values.size() - rank);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (is_zero(i)) out.col(c++) = vectors.col(i);
  }
  return out;
}

Eigen::MatrixXd pseudo_inverse(const Spectrum& s) {
  const Eigen::Index n = s.values.size();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!s.is_zero(i)) inv[i] = 1.0 / s.values[i];
  }
  return s.vectors * inv.asDiagonal() * s.vectors.transpose();
}

double log_pseudo_determinant(const Spectrum& s) {
  if (s.rank == 0) {
    throw Error(ErrorKind::Degenerate,
                "generalized determinant undefined for an all-zero matrix");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    if (s.is_zero(i)) continue;
    if (s.values[i] <= 0.0) {
      throw Error(ErrorKind::Numerical,
                  "negative eigenvalue classified as nonzero");
    }
    acc += std::log(s.values[i]);
  }
  return acc;
}

Eigen::MatrixXd pseudo_inverse_general(const Eigen::MatrixXd& m, double tol) {
  if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cut = tol * (sv.size() > 0 ? sv[0] : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cut && sv[i] > 0.0) inv[i] = 1.0 / sv[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int numerical_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cut = tol * sv[0];
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cut && sv[i] > 0.0) ++r;
  }
  return r;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& columns) {
  if (columns.cols() == 0) return columns;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(columns);
  Eigen::MatrixXd q = qr.householderQ() *
                      Eigen::MatrixXd::Identity(columns.rows(), columns.cols());
  return q;
}

}  // namespace hdsdm
