#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "hdsdm/bases.hpp"
#include "hdsdm/error.hpp"

using namespace hdsdm;

namespace {

// Textbook recursive Cox-de Boor on the clamped uniform knot vector.
double cox_de_boor(const std::vector<double>& t, int i, int p, double x) {
  if (p == 0) {
    const bool last = x == t.back() && t[static_cast<std::size_t>(i + 1)] == t.back() &&
                      t[static_cast<std::size_t>(i)] < t.back();
    return (t[static_cast<std::size_t>(i)] <= x && x < t[static_cast<std::size_t>(i + 1)]) || last ? 1.0 : 0.0;
  }
  double out = 0.0;
  const double d1 = t[static_cast<std::size_t>(i + p)] - t[static_cast<std::size_t>(i)];
  const double d2 = t[static_cast<std::size_t>(i + p + 1)] - t[static_cast<std::size_t>(i + 1)];
  if (d1 > 0) out += (x - t[static_cast<std::size_t>(i)]) / d1 * cox_de_boor(t, i, p - 1, x);
  if (d2 > 0) out += (t[static_cast<std::size_t>(i + p + 1)] - x) / d2 * cox_de_boor(t, i + 1, p - 1, x);
  return out;
}

std::vector<double> clamped_knots(const BSpline1D& s) {
  std::vector<double> t;
  for (int i = 0; i <= s.degree; ++i) t.push_back(s.lower);
  const int intervals = s.size - s.degree;
  for (int j = 1; j < intervals; ++j) t.push_back(s.lower + (s.upper - s.lower) * j / intervals);
  for (int i = 0; i <= s.degree; ++i) t.push_back(s.upper);
  return t;
}

}  // namespace

TEST(EvalBasis, IndicatorRows) {
  const Eigen::MatrixXd d = eval_basis(IndicatorBasis{1, 2}, std::vector<double>{1.0, 2.0});
  EXPECT_EQ(d(0, 0), 1.0);
  EXPECT_EQ(d(0, 1), 0.0);
  EXPECT_EQ(d(1, 1), 1.0);
}

TEST(EvalBasis, IndicatorRejectsUnknownLevel) {
  EXPECT_THROW(eval_basis(IndicatorBasis{1, 2}, std::vector<double>{3.0}), Error);
  EXPECT_THROW(eval_basis(IndicatorBasis{1, 2}, std::vector<double>{1.5}), Error);
}

TEST(EvalBasis, LinearCentered) {
  const Eigen::MatrixXd d = eval_basis(LinearBasis{2.0, 4.0}, std::vector<double>{2.0, 6.0});
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_EQ(d(1, 0), 1.0);
}

TEST(EvalBasis, BSplinePartitionOfUnity) {
  const BSpline1D s{3, 20, -1.5, 4.0};
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(1000, s.lower, s.upper);
  const Eigen::MatrixXd d = eval_basis(s, std::span<const double>(x.data(), 1000));
  ASSERT_EQ(d.cols(), 20);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    EXPECT_NEAR(d.row(i).sum(), 1.0, 1e-10);
    EXPECT_GE(d.row(i).minCoeff(), 0.0);
  }
}

TEST(EvalBasis, BSplineMatchesRecursiveDefinition) {
  Rng rng = make_stream(21, 0);
  for (const BSpline1D s : {BSpline1D{3, 20, 0.0, 1.0}, BSpline1D{2, 7, -3.0, 5.0}, BSpline1D{3, 4, 1.0, 2.0}}) {
    const auto t = clamped_knots(s);
    std::vector<double> x{s.lower, s.upper};
    for (int i = 0; i < 200; ++i) x.push_back(gen::uniform_real(rng, s.lower, s.upper));
    const Eigen::MatrixXd d = eval_basis(s, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (int k = 0; k < s.size; ++k) {
        EXPECT_NEAR(d(static_cast<Eigen::Index>(i), k), cox_de_boor(t, k, s.degree, x[i]), 1e-12);
      }
    }
  }
}

TEST(EvalBasis, OutOfSupportListsRows) {
  try {
    eval_basis(BSpline1D{3, 10, 0.0, 1.0}, std::vector<double>{0.5, 1.5, 0.2, -0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
    const std::string msg = e.what();
    EXPECT_NE(msg.find(" 1"), std::string::npos);
    EXPECT_NE(msg.find(" 3"), std::string::npos);
  }
}

TEST(TensorBasis, SizeAndKronecker) {
  const BSpline1D a{2, 3, 0.0, 1.0};
  const BSpline1D b{3, 4, -2.0, 2.0};
  const BSpline2D t = tensor_basis(a, b);
  EXPECT_EQ(basis_size(t), 12);

  Rng rng = make_stream(22, 0);
  Eigen::MatrixXd pts(100, 2);
  for (int i = 0; i < 100; ++i) {
    pts(i, 0) = gen::uniform_real(rng, 0.0, 1.0);
    pts(i, 1) = gen::uniform_real(rng, -2.0, 2.0);
  }
  const Eigen::MatrixXd d = eval_basis(t, pts);
  const Eigen::MatrixXd da = eval_basis(a, pts.col(0));
  const Eigen::MatrixXd db = eval_basis(b, pts.col(1));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(d.row(i).sum(), 1.0, 1e-12);
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 4; ++q) worst = std::max(worst, std::abs(d(i, p * 4 + q) - da(i, p) * db(i, q)));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(TensorBasis, RejectsNonSplines) {
  EXPECT_THROW(tensor_basis(LinearBasis{}, BSpline1D{}), Error);
}

TEST(PruneBasis, FullRectangleKeepsEverything) {
  const BSpline2D t = tensor_basis(BSpline1D{3, 6, 0.0, 1.0}, BSpline1D{3, 6, 0.0, 1.0});
  Eigen::MatrixXd pts(400, 2);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) pts.row(i * 20 + j) << (i + 0.5) / 20.0, (j + 0.5) / 20.0;
  }
  EXPECT_EQ(prune_basis(t, pts).retained.size(), 36u);
}

TEST(PruneBasis, SinglePointMatchesBruteForce) {
  const BSpline2D t = tensor_basis(BSpline1D{3, 8, 0.0, 1.0}, BSpline1D{3, 8, 0.0, 1.0});
  Eigen::MatrixXd pt(1, 2);
  pt << 0.37, 0.81;
  const PrunedBasis p = prune_basis(t, pt);
  const Eigen::MatrixXd full = eval_basis(t, pt);
  std::vector<int> expected;
  for (int k = 0; k < 64; ++k) {
    if (std::abs(full(0, k)) > 1e-12) expected.push_back(k);
  }
  EXPECT_EQ(p.retained, expected);
  EXPECT_EQ(p.retained.size(), 16u);
}

TEST(PruneBasis, PrunedEvaluationIsColumnSubset) {
  Rng rng = make_stream(23, 0);
  const BSpline2D t = tensor_basis(BSpline1D{3, 7, 0.0, 2.0}, BSpline1D{3, 5, 0.0, 1.0});
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd cloud(30, 2);
    const double cx = gen::uniform_real(rng, 0.2, 1.8);
    const double cy = gen::uniform_real(rng, 0.2, 0.8);
    for (int i = 0; i < 30; ++i) {
      cloud(i, 0) = std::clamp(cx + 0.2 * gen::uniform_real(rng, -1, 1), 0.0, 2.0);
      cloud(i, 1) = std::clamp(cy + 0.2 * gen::uniform_real(rng, -1, 1), 0.0, 1.0);
    }
    const PrunedBasis p = prune_basis(t, cloud);
    const Eigen::MatrixXd pruned = eval_basis(p.spec, cloud);
    const Eigen::MatrixXd full = eval_basis(t, cloud);
    ASSERT_EQ(pruned.cols(), static_cast<Eigen::Index>(p.retained.size()));
    for (std::size_t k = 0; k < p.retained.size(); ++k) {
      EXPECT_EQ((pruned.col(static_cast<Eigen::Index>(k)) - full.col(p.retained[k])).norm(), 0.0);
    }
  }
}

TEST(PruneBasis, RejectsEmptyCloud) {
  EXPECT_THROW(prune_basis(tensor_basis(BSpline1D{}, BSpline1D{}), Eigen::MatrixXd(0, 2)), Error);
}

TEST(LatticeAdjacency, FullTwoByTwo) {
  const std::vector<int> all{0, 1, 2, 3};
  const Eigen::MatrixXd w = lattice_adjacency(all, 2, 2);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(w.row(i).sum(), 2.0);
}

TEST(LatticeAdjacency, LShape) {
  // cells (0,0), (1,0), (1,1) on a 2 x 2 lattice; (1,0) is the corner
  const std::vector<int> kept{0, 2, 3};
  const Eigen::MatrixXd w = lattice_adjacency(kept, 2, 2);
  EXPECT_EQ(w.row(0).sum(), 1.0);
  EXPECT_EQ(w.row(1).sum(), 2.0);
  EXPECT_EQ(w.row(2).sum(), 1.0);
}

TEST(LatticeAdjacency, RandomSubsetsAreSymmetricWithZeroDiagonal) {
  Rng rng = make_stream(24, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = gen::uniform_int(rng, 1, 8);
    const int cols = gen::uniform_int(rng, 1, 8);
    std::vector<int> kept;
    for (int k = 0; k < rows * cols; ++k) {
      if (uniform01(rng) < 0.6) kept.push_back(k);
    }
    const Eigen::MatrixXd w = lattice_adjacency(kept, rows, cols);
    EXPECT_TRUE(w.isApprox(w.transpose()) || w.size() == 0);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      EXPECT_EQ(w(i, i), 0.0);
      EXPECT_LE(w.row(i).sum(), 4.0);
    }
  }
}

TEST(LatticeAdjacency, RejectsIndicesOutsideGrid) {
  const std::vector<int> kept{0, 9};
  EXPECT_THROW(lattice_adjacency(kept, 3, 3), Error);
}
