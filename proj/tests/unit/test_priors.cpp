#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "hdsdm/error.hpp"
#include "hdsdm/gmrf.hpp"
#include "hdsdm/priors.hpp"
#include "hdsdm/stats.hpp"

using namespace hdsdm;

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int depth = 0) {
  const double c = 0.5 * (a + b);
  const double whole = (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
  const double left = (c - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + c)) + f(c));
  const double right = (b - c) / 6.0 * (f(c) + 4.0 * f(0.5 * (c + b)) + f(b));
  if (depth > 40 || std::abs(left + right - whole) < 15.0 * tol) return left + right;
  return adaptive_simpson(f, a, c, tol / 2, depth + 1) + adaptive_simpson(f, c, b, tol / 2, depth + 1);
}

void expect_kind(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

// Linear (constant) versus RW2 spline covariances over n covariate values.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linear_vs_spline(int k1, int n) {
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = (i + 0.5) / n;
  Eigen::MatrixXd d0 = (x.array() - 0.5) * std::sqrt(12.0);
  Eigen::MatrixXd sigma0 = d0 * d0.transpose();
  // k1 bumps: a rank-k1 covariance orthogonal to the linear direction
  Eigen::MatrixXd d1(n, k1);
  for (int j = 0; j < k1; ++j) {
    for (int i = 0; i < n; ++i) d1(i, j) = std::cos((j + 2) * M_PI * x(i, 0));
  }
  const Eigen::VectorXd lin = d0.col(0).normalized();
  d1 -= lin * (lin.transpose() * d1);
  return {sigma0, d1 * d1.transpose()};
}

}  // namespace

TEST(PcVariance, Lambda) {
  EXPECT_NEAR(pc_variance_lambda(3.0, 0.05), 0.99858, 1e-5);
  EXPECT_NEAR(pc_variance_lambda(1.0, std::exp(-1.0)), 1.0, 1e-15);
  for (double u : {0.1, 1.0, 7.0}) {
    for (double a : {0.01, 0.3, 0.9}) {
      EXPECT_NEAR(std::exp(-pc_variance_lambda(u, a) * u), a, 1e-12);
    }
  }
  expect_kind(ErrorKind::Domain, [] { pc_variance_lambda(0.0, 0.1); });
  expect_kind(ErrorKind::Domain, [] { pc_variance_lambda(1.0, 1.0); });
}

TEST(Pc0, PaperMedian) {
  EXPECT_NEAR(pc0_quantile(0.5, 0.1), 0.238, 0.001);
  EXPECT_NEAR(pc0_cdf(pc0_quantile(0.5, 0.1), 0.1), 0.5, 1e-14);
}

TEST(Pc0, CdfEndpointsAndNormalization) {
  for (double lambda : {1e-3, 0.1, 1.0, 10.0, 50.0}) {
    EXPECT_DOUBLE_EQ(pc0_cdf(1.0, lambda), 1.0);
    const double mass = adaptive_simpson(
        [&](double s) { return s <= 0.0 || s >= 1.0 ? 0.0 : 2.0 * s * std::exp(pc0_simplified_logpdf(s * s, lambda)); },
        0.0, 1.0, 1e-12);
    EXPECT_NEAR(mass, 1.0, 1e-8) << lambda;
  }
  expect_kind(ErrorKind::Domain, [] { pc0_simplified_logpdf(0.0, 1.0); });
  expect_kind(ErrorKind::Domain, [] { pc0_simplified_logpdf(0.5, 0.0); });
}

TEST(Pc0, InverseCdfDrawsPassKs) {
  Rng rng = make_stream(51, 0);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = pc0_quantile(uniform01(rng), 0.1);
  const KsResult ks = ks_test(draws, [](double w) { return pc0_cdf(w, 0.1); });
  EXPECT_GT(ks.p_value, 0.01) << ks.statistic;
}

TEST(Pc0Calibrate, PaperCases) {
  EXPECT_NEAR(pc0_calibrate(pc0_quantile(0.5, 0.1), 0.5), 0.1, 1e-8);
  expect_kind(ErrorKind::Infeasible, [] { pc0_calibrate(0.25, 0.5); });
  expect_kind(ErrorKind::Infeasible, [] { pc0_calibrate(0.3, 0.5); });
  const double lambda = pc0_calibrate(0.04, 0.5);
  EXPECT_NEAR(pc0_cdf(0.04, lambda), 0.5, 1e-10);
}

TEST(Pc0Calibrate, InverseOfQuantile) {
  Rng rng = make_stream(52, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const double lambda = std::exp(gen::uniform_real(rng, std::log(0.01), std::log(30.0)));
    const double p = gen::uniform_real(rng, 0.05, 0.95);
    const double u = pc0_quantile(p, lambda);
    EXPECT_NEAR(pc0_calibrate(u, p), lambda, 1e-8 * std::max(1.0, lambda)) << lambda << ' ' << p;
  }
}

TEST(DirichletCalibrate, MatchesMonteCarlo) {
  Rng rng = make_stream(53, 0);
  for (int p : {2, 6}) {
    const double q = dirichlet_q_calibrate(p);
    EXPECT_GT(q, 0.0);
    const double lo = std::log(1.0 / 4.0 / (3.0 / 4.0));
    const double hi = -lo;
    const double centre = std::log(1.0 / (p - 1.0));
    std::gamma_distribution<double> ga(q, 1.0), gb((p - 1) * q, 1.0);
    int inside = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double a = ga(rng), b = gb(rng);
      const double l = std::log(a) - std::log(b) - centre;
      inside += l > lo && l < hi;
    }
    EXPECT_NEAR(static_cast<double>(inside) / n, 0.5, 0.01) << p;
  }
  expect_kind(ErrorKind::Specification, [] { dirichlet_q_calibrate(1); });
}

TEST(SumOfRanks, LinearVersusNonlinear) {
  const RankInfo bound = sum_of_ranks_check(1, 1000, 20, 1000, 1000);
  EXPECT_TRUE(bound.holds_by_bounds);
  EXPECT_TRUE(bound.condition_holds);
  const auto [s0, s1] = linear_vs_spline(5, 50);
  const RankInfo exact = sum_of_ranks_check(1, 50, 5, 50, 50, &s0, &s1);
  EXPECT_EQ(exact.r0, 1);
  EXPECT_EQ(exact.r1, 5);
  EXPECT_TRUE(exact.condition_holds);
}

TEST(SumOfRanks, KroneckerInteractionFails) {
  // Mains: cubic B-spline-like bases with 4 functions on 3 x 3 levels; the
  // interaction is their Kronecker product.
  Eigen::MatrixXd da(3, 4), db(3, 4);
  da << 1, 0.2, 0.1, 0.3, 0.4, 1, 0.5, 0.1, 0.2, 0.3, 1, 0.7;
  db << 0.5, 1, 0.2, 0.1, 1, 0.1, 0.3, 0.6, 0.2, 0.4, 0.9, 1;
  Eigen::MatrixXd ga(9, 8);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      ga.row(i * 3 + j) << da.row(i), db.row(j);
    }
  }
  Eigen::MatrixXd gi(9, 16);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) gi(i * 3 + j, a * 4 + b) = da(i, a) * db(j, b);
      }
    }
  }
  const Eigen::MatrixXd s0 = ga * ga.transpose();
  const Eigen::MatrixXd s1 = gi * gi.transpose();
  const RankInfo info = sum_of_ranks_check(8, 9, 16, 9, 9, &s0, &s1);
  EXPECT_FALSE(info.holds_by_bounds);
  EXPECT_TRUE(info.ranks_computed);
  EXPECT_EQ(info.r0, 5);
  EXPECT_EQ(info.r1, 9);
  EXPECT_FALSE(info.condition_holds);
}

TEST(SumOfRanks, RejectsInconsistentDimensions) {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  expect_kind(ErrorKind::Dimension, [&] { sum_of_ranks_check(1, 4, 1, 4, 4, &s, &s); });
  expect_kind(ErrorKind::Dimension, [] { sum_of_ranks_check(-1, 4, 1, 4, 4); });
}

TEST(KldDistance, ZeroAtBase) {
  const auto [s0, s1] = linear_vs_spline(5, 30);
  for (double w : {1e-6, 0.3, 0.9, 1.0}) EXPECT_NEAR(kld_distance(w, w, s0, s1), 0.0, 1e-6);
}

TEST(KldDistance, DiagonalClosedForm) {
  // Disjoint supports: eigenvalues (1-w) a_i on the first block, w b_j on the second.
  const Eigen::VectorXd a = Eigen::Vector3d(1.0, 2.5, 0.3);
  const Eigen::VectorXd b = Eigen::Vector2d(4.0, 0.7);
  Eigen::MatrixXd s0 = Eigen::MatrixXd::Zero(6, 6), s1 = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 3; ++i) s0(i, i) = a[i];
  for (int j = 0; j < 2; ++j) s1(3 + j, 3 + j) = b[j];
  for (double w0 : {0.05, 0.4}) {
    for (double w : {0.1, 0.5, 0.8}) {
      const double r0 = (1 - w) / (1 - w0), r1 = w / w0;
      const double d2 = 3 * (r0 - 1 - std::log(r0)) + 2 * (r1 - 1 - std::log(r1));
      EXPECT_NEAR(kld_distance(w, w0, s0, s1), std::sqrt(d2), 1e-10);
    }
  }
}

TEST(KldDistance, LimitRecoversSqrtOmega) {
  const auto [s0, s1] = linear_vs_spline(5, 50);
  const Pc0ExactSetup setup{s0, s1, 1e-6};
  for (double w : {0.1, 0.5, 0.9}) {
    const double d = kld_distance(w, 1e-6, s0, s1);
    EXPECT_NEAR(d * d * 1e-6 / (5.0 * w), 1.0, 0.01) << w;
    EXPECT_NEAR(normalized_pc0_distance(w, setup) / std::sqrt(w), 1.0, 0.01) << w;
  }
}

TEST(KldDistance, ContinuousInOmega) {
  // |d'| stays below 1e3 on [1e-3, 1), so a 1e-6 step moves d by < 1e-3
  const auto [s0, s1] = linear_vs_spline(4, 20);
  for (int i = 1; i < 1000; ++i) {
    const double w = i / 1000.0;
    EXPECT_LT(std::abs(kld_distance(w + 1e-6, 0.2, s0, s1) - kld_distance(w, 0.2, s0, s1)), 1e-3) << w;
  }
}

TEST(KldDistance, RejectsBadInput) {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
  expect_kind(ErrorKind::Domain, [&] { kld_distance(0.0, 0.5, s, s); });
  expect_kind(ErrorKind::Dimension, [&] { kld_distance(0.5, 0.5, s, Eigen::MatrixXd::Identity(3, 3)); });
  expect_kind(ErrorKind::Validation, [&] { kld_distance(0.5, 0.5, -s, s); });
}

TEST(Pc0Exact, AgreesWithSimplifiedForm) {
  const auto [s0, s1] = linear_vs_spline(5, 50);
  const auto setup = std::make_shared<const Pc0ExactSetup>(Pc0ExactSetup{s0, s1, 1e-6});
  for (double w : {0.05, 0.3, 0.7}) {
    EXPECT_NEAR(pc0_exact_logpdf(w, 0.1, *setup), pc0_simplified_logpdf(w, 0.1), 0.02) << w;
  }
}

TEST(LogPrior, UniformBinaryIsConstant) {
  const DecompTree tree(DecompTree::split("w", {DecompTree::leaf("a"), DecompTree::leaf("b")}));
  const std::vector<PriorSpec> priors{PriorSpec::pc_variance(1.0), PriorSpec::uniform("w")};
  HDParams p;
  p.total_variance = 1.3;
  p.proportions["w"] = Eigen::Vector2d(0.2, 0.8);
  const double a = log_prior(tree, priors, p);
  p.proportions["w"] = Eigen::Vector2d(0.9, 0.1);
  EXPECT_NEAR(log_prior(tree, priors, p), a, 1e-15);
}

TEST(LogPrior, CaseStudyPriorSetByHand) {
  const DecompTree tree(DecompTree::split(
      "omega_A",
      {DecompTree::split("omega_X",
                         {DecompTree::split("omega_N_X1", {DecompTree::leaf("X1_L"), DecompTree::leaf("X1_N")}, 1),
                          DecompTree::leaf("X2"), DecompTree::leaf("vessel")}),
       DecompTree::split("omega_S", {DecompTree::leaf("S"), DecompTree::leaf("T")})}));
  const std::vector<PriorSpec> priors{PriorSpec::jeffreys(), PriorSpec::uniform("omega_A"),
                                      PriorSpec::dirichlet("omega_X", 0.5), PriorSpec::uniform("omega_S"),
                                      PriorSpec::pc0("omega_N_X1", 0.1)};
  HDParams p;
  p.total_variance = 2.0;
  p.proportions["omega_A"] = Eigen::Vector2d(0.6, 0.4);
  p.proportions["omega_X"] = Eigen::Vector3d(0.2, 0.3, 0.5);
  p.proportions["omega_S"] = Eigen::Vector2d(0.5, 0.5);
  p.proportions["omega_N_X1"] = Eigen::Vector2d(0.9, 0.1);
  const double jeffreys = -std::log(2.0) - std::log(60.0);
  const double dir = std::lgamma(1.5) - 3 * std::lgamma(0.5) - 0.5 * (std::log(0.2) + std::log(0.3) + std::log(0.5));
  const double pc0 = std::log(0.1) - 0.1 * std::sqrt(0.1) - std::log(2 * std::sqrt(0.1)) - std::log(1 - std::exp(-0.1));
  EXPECT_NEAR(log_prior(tree, priors, p), jeffreys + dir + pc0, 1e-12);
  p.total_variance = std::exp(31.0);
  EXPECT_EQ(log_prior(tree, priors, p), -std::numeric_limits<double>::infinity());
}

TEST(LogPrior, UnconstrainedDensityIntegratesToOne) {
  const DecompTree tree(DecompTree::split("w", {DecompTree::leaf("a"), DecompTree::leaf("b")}, 1));
  const std::vector<PriorSpec> priors{PriorSpec::pc_variance(0.7), PriorSpec::pc0("w", 2.0)};
  Rng rng = make_stream(54, 0);
  // Logistic proposals: their exponential tails dominate the target's.
  const double scale = 3.0;
  const Eigen::Vector2d centre(0.0, -1.0);
  double sum = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    Eigen::Vector2d y;
    double log_q = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double u = uniform01(rng);
      const double z = std::log(u / (1 - u));
      y[j] = centre[j] + scale * z;
      log_q += -z - 2 * std::log1p(std::exp(-z)) - std::log(scale);
    }
    sum += std::exp(log_prior_unconstrained(tree, priors, y) - log_q);
  }
  EXPECT_NEAR(sum / n, 1.0, 0.01);
}

TEST(ValidatePriors, CatchesMistakes) {
  const DecompTree tree(DecompTree::split(
      "r", {DecompTree::leaf("a"), DecompTree::leaf("b"), DecompTree::leaf("c")}));
  std::vector<PriorSpec> ok{PriorSpec::jeffreys(), PriorSpec::dirichlet("r", 1.0)};
  EXPECT_NO_THROW(validate_priors(tree, ok));
  expect_kind(ErrorKind::Specification, [&] { validate_priors(tree, std::vector<PriorSpec>{PriorSpec::jeffreys()}); });
  expect_kind(ErrorKind::Specification,
              [&] { validate_priors(tree, std::vector<PriorSpec>{PriorSpec::jeffreys(), PriorSpec::pc0("r", 1.0)}); });
  expect_kind(ErrorKind::Domain,
              [&] { validate_priors(tree, std::vector<PriorSpec>{PriorSpec::jeffreys(), PriorSpec::dirichlet("r", 0.0)}); });
  expect_kind(ErrorKind::Specification, [&] {
    validate_priors(tree, std::vector<PriorSpec>{PriorSpec::uniform("V"), PriorSpec::dirichlet("r", 1.0)});
  });
}

TEST(SamplePrior, MarginalsMatchCdfs) {
  const DecompTree tree(DecompTree::split(
      "r", {DecompTree::split("w", {DecompTree::leaf("a"), DecompTree::leaf("b")}, 1), DecompTree::leaf("c"),
            DecompTree::leaf("d")}));
  const std::vector<PriorSpec> priors{PriorSpec::pc_variance(1.3), PriorSpec::dirichlet("r", 0.4),
                                      PriorSpec::beta("w", 2.0, 5.0)};
  Rng rng = make_stream(55, 0);
  std::vector<double> v, r0, w;
  for (int i = 0; i < 20000; ++i) {
    const HDParams p = sample_prior(tree, priors, rng);
    v.push_back(p.total_variance);
    r0.push_back(p.proportions.at("r")[0]);
    w.push_back(p.omega(tree, "w"));
  }
  EXPECT_GT(ks_test(v, [&](double x) { return prior_marginal_cdf(tree, priors, "V", 0, x); }).p_value, 0.01);
  EXPECT_GT(ks_test(r0, [&](double x) { return prior_marginal_cdf(tree, priors, "r", 0, x); }).p_value, 0.01);
  EXPECT_GT(ks_test(w, [&](double x) { return prior_marginal_cdf(tree, priors, "w", 1, x); }).p_value, 0.01);
}

TEST(PriorMedians, MatchQuantiles) {
  const DecompTree tree(DecompTree::split("w", {DecompTree::leaf("a"), DecompTree::leaf("b")}, 1));
  const HDParams m = prior_medians(tree, std::vector<PriorSpec>{PriorSpec::pc_variance(2.0), PriorSpec::pc0("w", 0.1)});
  EXPECT_NEAR(-std::expm1(-2.0 * std::sqrt(m.total_variance)), 0.5, 1e-14);
  EXPECT_NEAR(m.omega(tree, "w"), pc0_quantile(0.5, 0.1), 1e-15);
}
