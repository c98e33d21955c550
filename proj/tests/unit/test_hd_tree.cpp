#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "hdsdm/error.hpp"
#include "hdsdm/hd_tree.hpp"

using namespace hdsdm;

namespace {

std::vector<EffectTags> case_study_tags() {
  std::vector<EffectTags> tags;
  for (int p = 1; p <= 5; ++p) {
    const std::string g = "X" + std::to_string(p);
    tags.push_back({g + "_L", true, false, g, 0});
    tags.push_back({g + "_N", true, false, g, 1});
  }
  tags.push_back({"vessel", true, false, "vessel", 0});
  tags.push_back({"S", false, false, "S", 0});
  tags.push_back({"T", false, false, "T", 0});
  return tags;
}

// (V, designated share or first K-1 proportions) as a flat vector.
Eigen::VectorXd constrained_coords(const DecompTree& tree, const HDParams& p) {
  std::vector<double> out{p.total_variance};
  for (int s : tree.splits()) {
    const TreeNode& n = tree.node(s);
    const Eigen::VectorXd& w = p.proportions.at(n.name);
    if (n.children.size() == 2) {
      out.push_back(w[n.designated]);
    } else {
      for (Eigen::Index k = 0; k + 1 < w.size(); ++k) out.push_back(w[k]);
    }
  }
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace

TEST(DefaultTree, CaseStudyShape) {
  const auto tags = case_study_tags();
  const DecompTree tree = build_default_tree(tags);
  EXPECT_EQ(tree.leaves().size(), 13u);
  const auto ids = tree.split_ids();
  const std::set<std::string> splits(ids.begin(), ids.end());
  const std::set<std::string> expected{"omega_A", "omega_X", "omega_S", "omega_N_X1", "omega_N_X2",
                                       "omega_N_X3", "omega_N_X4", "omega_N_X5"};
  EXPECT_EQ(splits, expected);
  EXPECT_EQ(tree.node(tree.find("omega_X")).children.size(), 6u);
  const TreeNode& n1 = tree.node(tree.find("omega_N_X1"));
  EXPECT_EQ(tree.node(n1.children[static_cast<std::size_t>(n1.designated)]).name, "X1_N");
  EXPECT_EQ(build_default_tree(tags), tree);
}

TEST(DefaultTree, OneAbioticOneBiotic) {
  const std::vector<EffectTags> tags{{"x", true, false, "x", 0}, {"s", false, false, "s", 0}};
  const DecompTree tree = build_default_tree(tags);
  EXPECT_EQ(tree.splits().size(), 1u);
  EXPECT_EQ(tree.node(tree.root()).name, "omega_A");
}

TEST(DefaultTree, InteractionsKeepLevelTwo) {
  const std::vector<EffectTags> tags{{"x1", true, false, "x1", 0},
                                     {"x2", true, false, "x2", 0},
                                     {"x1x2", true, true, "x1x2", 0},
                                     {"s", false, false, "s", 0}};
  const DecompTree tree = build_default_tree(tags);
  EXPECT_TRUE(tree.contains("omega_A_int"));
  EXPECT_FALSE(tree.contains("omega_B_int"));
  const TreeNode& n = tree.node(tree.find("omega_A_int"));
  EXPECT_EQ(tree.node(n.children[static_cast<std::size_t>(n.designated)]).name, "x1x2");
}

TEST(DefaultTree, RejectsUntaggedEffects) {
  const std::vector<EffectTags> tags{{"x", true, false, "", 0}};
  EXPECT_THROW(build_default_tree(tags), Error);
}

TEST(DecompTree, RejectsMalformedSpecs) {
  EXPECT_THROW(DecompTree(DecompTree::split("s", {DecompTree::leaf("a")})), Error);
  EXPECT_THROW(DecompTree(DecompTree::split("s", {DecompTree::leaf("a"), DecompTree::leaf("a")})), Error);
  EXPECT_THROW(DecompTree(DecompTree::split("s", {DecompTree::leaf("a"), DecompTree::leaf("b")}, 2)), Error);
}

TEST(ToVariances, TwoLeaves) {
  const DecompTree tree(DecompTree::split("w", {DecompTree::leaf("a"), DecompTree::leaf("b")}));
  HDParams p;
  p.total_variance = 2.0;
  p.proportions["w"] = Eigen::Vector2d(0.5, 0.5);
  const auto s = to_variances(tree, p);
  EXPECT_DOUBLE_EQ(s.at("a"), 1.0);
  EXPECT_DOUBLE_EQ(s.at("b"), 1.0);
  const HDParams back = from_variances(tree, {{"a", 1.0}, {"b", 1.0}});
  EXPECT_DOUBLE_EQ(back.total_variance, 2.0);
  EXPECT_DOUBLE_EQ(back.omega(tree, "w"), 0.5);
}

TEST(ToVariances, CaseStudyEqualShares) {
  const auto tags = case_study_tags();
  const DecompTree tree = build_default_tree(tags);
  HDParams p;
  p.total_variance = 3.0;
  for (int s : tree.splits()) {
    const auto k = static_cast<Eigen::Index>(tree.node(s).children.size());
    p.proportions[tree.node(s).name] = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  }
  const auto sigma2 = to_variances(tree, p);
  const double per_group = 0.5 * 3.0 / 6.0;
  EXPECT_NEAR(sigma2.at("vessel"), per_group, 1e-15);
  EXPECT_NEAR(sigma2.at("X3_L") + sigma2.at("X3_N"), per_group, 1e-15);
}

TEST(FromVariances, CaseStudyAlgebra) {
  const auto tags = case_study_tags();
  const DecompTree tree = build_default_tree(tags);
  std::map<std::string, double> s;
  for (const auto& t : tags) s[t.id] = 0.5;
  s["S"] = 3.0;
  s["T"] = 1.0;
  s["X2_N"] = 1.5;
  const HDParams p = from_variances(tree, s);
  const double abiotic = 11 * 0.5 + 1.0;
  EXPECT_NEAR(p.total_variance, abiotic + 4.0, 1e-14);
  EXPECT_NEAR(p.omega(tree, "omega_A"), abiotic / (abiotic + 4.0), 1e-14);
  EXPECT_NEAR(p.omega(tree, "omega_S"), 0.75, 1e-14);
  EXPECT_NEAR(p.omega(tree, "omega_N_X2"), 1.5 / 2.0, 1e-14);
  EXPECT_NEAR(p.proportions.at("omega_X")[1], 2.0 / abiotic, 1e-14);
  EXPECT_NEAR(p.proportions.at("omega_X")[5], 0.5 / abiotic, 1e-14);
}

TEST(FromVariances, DegenerateSplitGoesToBarycenter) {
  const DecompTree tree(DecompTree::split(
      "root", {DecompTree::leaf("a"), DecompTree::split("w", {DecompTree::leaf("b"), DecompTree::leaf("c")})}));
  const HDParams p = from_variances(tree, {{"a", 1.0}, {"b", 0.0}, {"c", 0.0}});
  EXPECT_DOUBLE_EQ(p.omega(tree, "w"), 0.5);
  ASSERT_EQ(p.degenerate_splits.size(), 1u);
  EXPECT_EQ(p.degenerate_splits[0], "w");
}

TEST(HDBijection, RandomRoundTripsAndConservation) {
  Rng rng = make_stream(41, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const DecompTree tree = gen::random_tree(rng, gen::uniform_int(rng, 1, 15));
    const HDParams p = gen::random_params(rng, tree);
    const auto s = to_variances(tree, p);
    double total = 0.0;
    for (const auto& [id, v] : s) total += v;
    EXPECT_NEAR(total, p.total_variance, 1e-12 * p.total_variance);

    const HDParams back = from_variances(tree, s);
    EXPECT_NEAR(back.total_variance, p.total_variance, 1e-12 * p.total_variance);
    for (const auto& [name, w] : p.proportions) {
      EXPECT_LT((back.proportions.at(name) - w).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    }
  }
}

TEST(Unconstrained, OriginIsEqualSplit) {
  const DecompTree tree(DecompTree::split("w", {DecompTree::leaf("a"), DecompTree::leaf("b")}));
  HDParams p;
  p.total_variance = 1.0;
  p.proportions["w"] = Eigen::Vector2d(0.5, 0.5);
  EXPECT_LT(to_unconstrained(tree, p).norm(), 1e-15);
  p.proportions["w"] = Eigen::Vector2d(1.0, 0.0);
  EXPECT_THROW(to_unconstrained(tree, p), Error);
}

TEST(Unconstrained, RoundTripAndJacobian) {
  Rng rng = make_stream(42, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const DecompTree tree = gen::random_tree(rng, gen::uniform_int(rng, 1, 8));
    Eigen::VectorXd y(coordinate_count(tree));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = gen::uniform_real(rng, -2.0, 2.0);
    EXPECT_EQ(static_cast<Eigen::Index>(coordinate_names(tree).size()), y.size());
    const Eigen::VectorXd back = to_unconstrained(tree, from_unconstrained(tree, y));
    EXPECT_LT((back - y).cwiseAbs().maxCoeff(), 1e-12);

    const Eigen::Index n = y.size();
    Eigen::MatrixXd jac(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-6;
      Eigen::VectorXd up = y, down = y;
      up[j] += h;
      down[j] -= h;
      jac.col(j) = (constrained_coords(tree, from_unconstrained(tree, up)) -
                    constrained_coords(tree, from_unconstrained(tree, down))) / (2 * h);
    }
    const double fd = std::log(std::abs(jac.determinant()));
    const double analytic = log_abs_jacobian(tree, y);
    EXPECT_LT(std::abs(std::exp(fd - analytic) - 1.0), 1e-5);
  }
}
