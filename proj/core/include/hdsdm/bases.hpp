#pragma once

#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace hdsdm {

/// Single column (x - center) / scale.
struct LinearBasis {
  double center = 0.0;
  double scale = 1.0;
  bool operator==(const LinearBasis&) const = default;
};

/// One column per integer level first_level, ..., first_level + levels - 1.
struct IndicatorBasis {
  int first_level = 1;
  int levels = 2;
  bool operator==(const IndicatorBasis&) const = default;
};

/// Clamped B-splines on [lower, upper] with equally spaced interior knots.
struct BSpline1D {
  int degree = 3;
  int size = 20;
  double lower = 0.0;
  double upper = 1.0;
  bool operator==(const BSpline1D&) const = default;
};

/// Tensor product of two 1D B-spline bases; column index i * K_B + j.
/// `retained` lists kept tensor columns (empty keeps all).
struct BSpline2D {
  BSpline1D first;
  BSpline1D second;
  std::vector<int> retained;
  bool operator==(const BSpline2D&) const = default;
};

/// Product of two standardized covariates, for a linear-by-linear interaction.
struct ProductLinearBasis {
  LinearBasis first;
  LinearBasis second;
  bool operator==(const ProductLinearBasis&) const = default;
};

using BasisSpec =
    std::variant<LinearBasis, IndicatorBasis, BSpline1D, BSpline2D, ProductLinearBasis>;

int basis_size(const BasisSpec& spec);
/// Number of covariate columns the basis consumes.
int input_dim(const BasisSpec& spec);

/// Design matrix, row i = D(x_i)'. `x` is N x input_dim. Throws a domain
/// error listing offending rows when x leaves the declared support.
Eigen::MatrixXd eval_basis(const BasisSpec& spec, const Eigen::MatrixXd& x);
Eigen::MatrixXd eval_basis(const BasisSpec& spec, std::span<const double> x);

/// Nonzero B-spline values at x: returns the index of the first nonzero
/// function and fills degree + 1 values.
int bspline_nonzero(const BSpline1D& spec, double x, std::span<double> values);

BSpline2D tensor_basis(const BasisSpec& first, const BasisSpec& second);

struct PrunedBasis {
  BSpline2D spec;
  std::vector<int> retained;
};

/// Keeps the tensor functions whose max |value| over the points exceeds 1e-12.
PrunedBasis prune_basis(const BSpline2D& spec, const Eigen::MatrixXd& points);

/// 4-neighbour adjacency among retained cells of a rows x cols lattice
/// (cell index r * cols + c).
Eigen::MatrixXd lattice_adjacency(std::span<const int> retained, int rows, int cols);

}  // namespace hdsdm
