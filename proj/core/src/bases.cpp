#include "hdsdm/bases.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hdsdm/error.hpp"

namespace hdsdm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate(const BSpline1D& s) {
  if (s.degree < 0 || s.size < s.degree + 1) {
    throw Error(ErrorKind::Specification, "B-spline needs size >= degree + 1");
  }
  if (!(s.upper > s.lower)) {
    throw Error(ErrorKind::Specification, "B-spline support must have upper > lower");
  }
}

double knot(const BSpline1D& s, int i) {
  // clamped: degree + 1 repeated knots at each boundary
  const int intervals = s.size - s.degree;
  const int j = std::clamp(i - s.degree, 0, intervals);
  if (j == intervals) return s.upper;
  return s.lower + (s.upper - s.lower) * j / intervals;
}

bool in_support(const BSpline1D& s, double x) {
  const double slack = 1e-12 * (s.upper - s.lower);
  return x >= s.lower - slack && x <= s.upper + slack;
}

[[noreturn]] void throw_out_of_support(const std::vector<Eigen::Index>& rows) {
  std::ostringstream msg;
  msg << "covariate values outside declared support at rows:";
  const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) msg << ' ' << rows[i];
  if (rows.size() > shown) msg << " ... (" << rows.size() << " total)";
  throw Error(ErrorKind::Domain, msg.str());
}

void check_columns(const Eigen::MatrixXd& x, int dim) {
  if (x.cols() != dim) {
    throw Error(ErrorKind::Dimension, "covariate matrix has the wrong number of columns");
  }
}

Eigen::MatrixXd eval_1d(const BSpline1D& s, const Eigen::VectorXd& x) {
  validate(s);
  std::vector<Eigen::Index> bad;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !in_support(s, x[i])) bad.push_back(i);
  }
  if (!bad.empty()) throw_out_of_support(bad);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.size(), s.size);
  std::vector<double> values(static_cast<std::size_t>(s.degree + 1));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int first = bspline_nonzero(s, x[i], values);
    for (int j = 0; j <= s.degree; ++j) out(i, first + j) = values[static_cast<std::size_t>(j)];
  }
  return out;
}

Eigen::MatrixXd eval_2d(const BSpline2D& s, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd a = eval_1d(s.first, x.col(0));
  const Eigen::MatrixXd b = eval_1d(s.second, x.col(1));
  const int kb = s.second.size;
  const int full = s.first.size * kb;
  const bool all = s.retained.empty();
  const Eigen::Index cols = all ? full : static_cast<Eigen::Index>(s.retained.size());
  Eigen::MatrixXd out(x.rows(), cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const int idx = all ? static_cast<int>(c) : s.retained[static_cast<std::size_t>(c)];
    if (idx < 0 || idx >= full) {
      throw Error(ErrorKind::Specification, "retained index outside the tensor basis");
    }
    out.col(c) = a.col(idx / kb).cwiseProduct(b.col(idx % kb));
  }
  return out;
}

Eigen::VectorXd eval_linear(const LinearBasis& s, const Eigen::VectorXd& x) {
  if (!(s.scale > 0.0)) {
    throw Error(ErrorKind::Specification, "linear basis scale must be positive");
  }
  std::vector<Eigen::Index> bad;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) bad.push_back(i);
  }
  if (!bad.empty()) throw_out_of_support(bad);
  return (x.array() - s.center) / s.scale;
}

}  // namespace

int bspline_nonzero(const BSpline1D& s, double x, std::span<double> values) {
  const int p = s.degree;
  x = std::clamp(x, s.lower, s.upper);
  // knot span: t[span] <= x < t[span + 1], span in [p, size - 1]
  const int intervals = s.size - p;
  int j = static_cast<int>(std::floor((x - s.lower) / (s.upper - s.lower) * intervals));
  j = std::clamp(j, 0, intervals - 1);
  const int span = j + p;

  // Cox-de Boor triangle
  std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
  values[0] = 1.0;
  for (int d = 1; d <= p; ++d) {
    left[static_cast<std::size_t>(d)] = x - knot(s, span + 1 - d);
    right[static_cast<std::size_t>(d)] = knot(s, span + d) - x;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(d - r)];
      const double temp = denom > 0.0 ? values[static_cast<std::size_t>(r)] / denom : 0.0;
      values[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(d - r)] * temp;
    }
    values[static_cast<std::size_t>(d)] = saved;
  }
  return span - p;
}

int basis_size(const BasisSpec& spec) {
  return std::visit(
      Overloaded{
          [](const LinearBasis&) { return 1; },
          [](const IndicatorBasis& s) { return s.levels; },
          [](const BSpline1D& s) { return s.size; },
          [](const BSpline2D& s) {
            return s.retained.empty() ? s.first.size * s.second.size
                                      : static_cast<int>(s.retained.size());
          },
          [](const ProductLinearBasis&) { return 1; },
      },
      spec);
}

int input_dim(const BasisSpec& spec) {
  return std::visit(
      Overloaded{
          [](const BSpline2D&) { return 2; },
          [](const ProductLinearBasis&) { return 2; },
          [](const auto&) { return 1; },
      },
      spec);
}

Eigen::MatrixXd eval_basis(const BasisSpec& spec, const Eigen::MatrixXd& x) {
  check_columns(x, input_dim(spec));
  return std::visit(
      Overloaded{
          [&](const LinearBasis& s) -> Eigen::MatrixXd {
            return eval_linear(s, x.col(0));
          },
          [&](const IndicatorBasis& s) -> Eigen::MatrixXd {
            if (s.levels < 1) {
              throw Error(ErrorKind::Specification, "indicator basis needs >= 1 level");
            }
            Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), s.levels);
            std::vector<Eigen::Index> bad;
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
              const double v = x(i, 0);
              const double level = std::round(v);
              const auto idx = static_cast<long long>(level) - s.first_level;
              if (!std::isfinite(v) || std::abs(v - level) > 1e-9 || idx < 0 ||
                  idx >= s.levels) {
                bad.push_back(i);
                continue;
              }
              out(i, static_cast<Eigen::Index>(idx)) = 1.0;
            }
            if (!bad.empty()) throw_out_of_support(bad);
            return out;
          },
          [&](const BSpline1D& s) -> Eigen::MatrixXd { return eval_1d(s, x.col(0)); },
          [&](const BSpline2D& s) -> Eigen::MatrixXd { return eval_2d(s, x); },
          [&](const ProductLinearBasis& s) -> Eigen::MatrixXd {
            return eval_linear(s.first, x.col(0)).cwiseProduct(eval_linear(s.second, x.col(1)));
          },
      },
      spec);
}

Eigen::MatrixXd eval_basis(const BasisSpec& spec, std::span<const double> x) {
  const Eigen::MatrixXd column =
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return eval_basis(spec, column);
}

BSpline2D tensor_basis(const BasisSpec& first, const BasisSpec& second) {
  const auto* a = std::get_if<BSpline1D>(&first);
  const auto* b = std::get_if<BSpline1D>(&second);
  if (a == nullptr || b == nullptr) {
    throw Error(ErrorKind::Specification, "tensor_basis requires two 1D B-spline bases");
  }
  validate(*a);
  validate(*b);
  return BSpline2D{*a, *b, {}};
}

PrunedBasis prune_basis(const BSpline2D& spec, const Eigen::MatrixXd& points) {
  if (points.rows() == 0) {
    throw Error(ErrorKind::Validation, "prune_basis needs a non-empty point cloud");
  }
  BSpline2D full = spec;
  full.retained.clear();
  const Eigen::MatrixXd values = eval_basis(full, points);
  PrunedBasis out;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    if (values.col(c).cwiseAbs().maxCoeff() > 1e-12) {
      out.retained.push_back(static_cast<int>(c));
    }
  }
  out.spec = full;
  out.spec.retained = out.retained;
  return out;
}

Eigen::MatrixXd lattice_adjacency(std::span<const int> retained, int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorKind::Dimension, "lattice dimensions must be positive");
  }
  const int cells = rows * cols;
  std::vector<int> position(static_cast<std::size_t>(cells), -1);
  for (std::size_t i = 0; i < retained.size(); ++i) {
    const int idx = retained[i];
    if (idx < 0 || idx >= cells) {
      throw Error(ErrorKind::Dimension, "retained index outside the lattice");
    }
    if (position[static_cast<std::size_t>(idx)] >= 0) {
      throw Error(ErrorKind::Validation, "duplicate retained index");
    }
    position[static_cast<std::size_t>(idx)] = static_cast<int>(i);
  }
  const auto n = static_cast<Eigen::Index>(retained.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int idx = retained[static_cast<std::size_t>(i)];
    const int r = idx / cols;
    const int c = idx % cols;
    const int neighbours[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& nb : neighbours) {
      if (nb[0] < 0 || nb[0] >= rows || nb[1] < 0 || nb[1] >= cols) continue;
      const int j = position[static_cast<std::size_t>(nb[0] * cols + nb[1])];
      if (j >= 0) w(i, j) = 1.0;
    }
  }
  return w;
}

}  // namespace hdsdm
