#include "hdsdm/gmrf.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

#include "hdsdm/error.hpp"

namespace hdsdm {

namespace {

void check_symmetric_psd(const Eigen::MatrixXd& q, const Spectrum& s) {
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorKind::Validation, "precision matrix is not symmetric");
  }
  if (s.values.size() > 0 &&
      s.values.minCoeff() < -kZeroEigenTolerance * s.max_value) {
    throw Error(ErrorKind::Validation,
                "precision matrix is not positive semidefinite");
  }
}

Eigen::MatrixXd difference_matrix(int k, int order) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(k, k);
  for (int o = 0; o < order; ++o) {
    const Eigen::Index rows = d.rows() - 1;
    d = (d.bottomRows(rows) - d.topRows(rows)).eval();
  }
  return d;
}

}  // namespace

PrecisionStructure PrecisionStructure::from_matrix(const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols() || q.rows() == 0) {
    throw Error(ErrorKind::Dimension, "precision matrix must be square and non-empty");
  }
  Spectrum s = hdsdm::spectrum(q);
  check_symmetric_psd(q, s);
  Eigen::MatrixXd null = s.null_basis();
  return PrecisionStructure(q, std::move(s), std::move(null));
}

PrecisionStructure PrecisionStructure::with_null_space(
    const Eigen::MatrixXd& q, const Eigen::MatrixXd& null_space) {
  if (q.rows() != q.cols() || q.rows() == 0 ||
      (null_space.cols() > 0 && null_space.rows() != q.rows())) {
    throw Error(ErrorKind::Dimension, "precision/null-space dimension mismatch");
  }
  Spectrum s = hdsdm::spectrum(q);
  check_symmetric_psd(q, s);
  Eigen::MatrixXd null = null_space.cols() > 0
                             ? orthonormalize(null_space)
                             : Eigen::MatrixXd(q.rows(), 0);
  if (s.rank + null.cols() != q.rows()) {
    throw Error(ErrorKind::Validation,
                "eigen-classified rank disagrees with the supplied null space");
  }
  if (null.cols() > 0 &&
      (q * null).cwiseAbs().maxCoeff() > kZeroEigenTolerance * std::max(1.0, s.max_value)) {
    throw Error(ErrorKind::Validation, "supplied null space is not annihilated by Q");
  }
  return PrecisionStructure(q, std::move(s), std::move(null));
}

PrecisionStructure build_rw1(int k) {
  if (k < 2) throw Error(ErrorKind::Dimension, "rw1 requires K >= 2");
  const Eigen::MatrixXd d = difference_matrix(k, 1);
  return PrecisionStructure::with_null_space(d.transpose() * d,
                                             Eigen::VectorXd::Ones(k));
}

PrecisionStructure build_rw2(int k) {
  if (k < 3) throw Error(ErrorKind::Dimension, "rw2 requires K >= 3");
  const Eigen::MatrixXd d = difference_matrix(k, 2);
  Eigen::MatrixXd null(k, 2);
  null.col(0).setOnes();
  null.col(1) = Eigen::VectorXd::LinSpaced(k, 1.0, static_cast<double>(k));
  return PrecisionStructure::with_null_space(d.transpose() * d, null);
}

PrecisionStructure build_icar(const Eigen::MatrixXd& w) {
  const Eigen::Index k = w.rows();
  if (k == 0 || w.cols() != k) {
    throw Error(ErrorKind::Dimension, "adjacency matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (w(i, i) != 0.0) {
      throw Error(ErrorKind::Validation, "adjacency matrix must have a zero diagonal");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      if (w(i, j) != 0.0 && w(i, j) != 1.0) {
        throw Error(ErrorKind::Validation, "adjacency matrix must be binary");
      }
      if (w(i, j) != w(j, i)) {
        throw Error(ErrorKind::Validation, "adjacency matrix must be symmetric");
      }
    }
  }
  // connected components by breadth-first search
  std::vector<int> component(static_cast<std::size_t>(k), -1);
  int components = 0;
  for (Eigen::Index start = 0; start < k; ++start) {
    if (component[static_cast<std::size_t>(start)] >= 0) continue;
    std::queue<Eigen::Index> frontier;
    frontier.push(start);
    component[static_cast<std::size_t>(start)] = components;
    while (!frontier.empty()) {
      const Eigen::Index node = frontier.front();
      frontier.pop();
      for (Eigen::Index j = 0; j < k; ++j) {
        if (w(node, j) != 0.0 && component[static_cast<std::size_t>(j)] < 0) {
          component[static_cast<std::size_t>(j)] = components;
          frontier.push(j);
        }
      }
    }
    ++components;
  }
  Eigen::MatrixXd null = Eigen::MatrixXd::Zero(k, components);
  for (Eigen::Index i = 0; i < k; ++i) null(i, component[static_cast<std::size_t>(i)]) = 1.0;

  Eigen::MatrixXd q = -w;
  q.diagonal() = w.rowwise().sum();
  return PrecisionStructure::with_null_space(q, null);
}

PrecisionStructure build_iid(int k) {
  if (k < 1) throw Error(ErrorKind::Dimension, "iid requires K >= 1");
  return PrecisionStructure::with_null_space(Eigen::MatrixXd::Identity(k, k),
                                             Eigen::MatrixXd(k, 0));
}

Eigen::MatrixXd generalized_inverse(const PrecisionStructure& p) {
  return pseudo_inverse(p.spectrum());
}

double generalized_log_det(const PrecisionStructure& p) {
  return log_pseudo_determinant(p.spectrum());
}

ConstrainedGaussian::ConstrainedGaussian(const PrecisionStructure& p,
                                         const Eigen::MatrixXd& a) {
  const Eigen::Index k = p.size();
  a_ = a.cols() > 0 ? a : Eigen::MatrixXd(k, 0);
  if (a_.rows() != k) {
    throw Error(ErrorKind::Dimension, "constraint matrix must have K rows");
  }
  const Eigen::Index c = a_.cols();
  if (c >= k) {
    throw Error(ErrorKind::Constraint, "number of constraints must be below K");
  }
  if (c > 0 && numerical_rank(a_) < c) {
    throw Error(ErrorKind::Constraint, "constraint columns are linearly dependent");
  }

  const Eigen::MatrixXd sigma0 = generalized_inverse(p);
  if (c == 0) {
    cov_ = sigma0;
  } else {
    const Eigen::MatrixXd& s = p.null_space();
    const Eigen::MatrixXd m = a_.transpose() * s;              // c x m
    const Eigen::MatrixXd m_pinv = pseudo_inverse_general(m);  // m x c
    const Eigen::MatrixXd eye_c = Eigen::MatrixXd::Identity(c, c);
    // constraints left after the null-space coordinates are resolved
    const Eigen::MatrixXd b = (eye_c - m * m_pinv) * a_.transpose();  // c x K
    Eigen::MatrixXd conditioned = sigma0;
    const Eigen::MatrixXd g = b * sigma0 * b.transpose();
    if (g.cwiseAbs().maxCoeff() > 0.0) {
      const Eigen::MatrixXd g_pinv = pseudo_inverse_general(symmetrize(g));
      conditioned = sigma0 - sigma0 * b.transpose() * g_pinv * b * sigma0;
    }
    const Eigen::MatrixXd t =
        Eigen::MatrixXd::Identity(k, k) - s * m_pinv * a_.transpose();
    cov_ = symmetrize(t * conditioned * t.transpose());
  }
  finalize();
}

void ConstrainedGaussian::finalize() {
  const Eigen::Index k = cov_.rows();
  Spectrum s = spectrum(cov_);
  rank_ = s.rank;
  if (rank_ == 0) {
    throw Error(ErrorKind::Degenerate, "constrained covariance is identically zero");
  }
  factor_.resize(k, rank_);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    if (s.is_zero(i)) continue;
    factor_.col(col++) = s.vectors.col(i) * std::sqrt(s.values[i]);
  }
  precision_ = pseudo_inverse(s);
  log_pdet_ = log_pseudo_determinant(s);
  projector_ = Eigen::MatrixXd::Identity(k, k);
  if (a_.cols() > 0) {
    const Eigen::MatrixXd ata = a_.transpose() * a_;
    projector_ -= a_ * ata.ldlt().solve(a_.transpose());
  }
}

ConstrainedGaussian ConstrainedGaussian::scaled(double factor) const {
  if (!(factor > 0.0)) {
    throw Error(ErrorKind::Validation, "covariance scale factor must be positive");
  }
  ConstrainedGaussian out = *this;
  out.cov_ *= factor;
  out.factor_ *= std::sqrt(factor);
  out.precision_ /= factor;
  out.log_pdet_ += rank_ * std::log(factor);
  return out;
}

Eigen::VectorXd ConstrainedGaussian::sample(double sigma2, Rng& rng) const {
  const Eigen::VectorXd xi = standard_normal(rank_, rng);
  return project(std::sqrt(sigma2) * (factor_ * xi));
}

Eigen::VectorXd ConstrainedGaussian::project(const Eigen::VectorXd& u) const {
  if (a_.cols() == 0) return u;
  return projector_ * u;
}

double ConstrainedGaussian::log_density(const Eigen::VectorXd& u,
                                        double sigma2) const {
  const double quad = u.dot(precision_ * u);
  return -0.5 * rank_ * std::log(2.0 * std::numbers::pi * sigma2) -
         0.5 * log_pdet_ - 0.5 * quad / sigma2;
}

CoefficientBlock sample_constrained(const PrecisionStructure& p,
                                    const Eigen::MatrixXd& a, double sigma2,
                                    Rng& rng, std::string effect_id) {
  if (!(sigma2 > 0.0)) {
    throw Error(ErrorKind::Validation, "sigma2 must be positive");
  }
  const ConstrainedGaussian law(p, a);
  return CoefficientBlock{std::move(effect_id), law.sample(sigma2, rng)};
}

}  // namespace hdsdm
