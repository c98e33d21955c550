#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hdsdm {

struct TreeNode {
  /// Split id for internal nodes, variance-parameter (effect) id for leaves.
  std::string name;
  std::vector<int> children;
  int parent = -1;
  /// Index into `children` of the child whose share is the split's omega.
  int designated = 0;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const TreeNode&) const = default;
};

/// Rooted tree over variance parameters. Internal nodes have >= 2 children;
/// leaf names are unique, split names are unique.
class DecompTree {
 public:
  /// Builder value used to describe a (sub)tree before validation.
  struct Spec {
    std::string name;
    std::vector<Spec> children;
    int designated = 0;
    bool operator==(const Spec&) const = default;
  };

  static Spec leaf(std::string id) { return Spec{std::move(id), {}, 0}; }
  static Spec split(std::string id, std::vector<Spec> children, int designated = 0) {
    return Spec{std::move(id), std::move(children), designated};
  }

  DecompTree() = default;
  explicit DecompTree(const Spec& spec);

  Spec to_spec() const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int root() const { return 0; }
  /// Leaf ids in depth-first order.
  const std::vector<std::string>& leaves() const { return leaves_; }
  /// Internal node indices in depth-first (pre-)order.
  const std::vector<int>& splits() const { return splits_; }
  std::vector<std::string> split_ids() const;
  const TreeNode& node(int index) const { return nodes_[static_cast<std::size_t>(index)]; }
  /// Index of the node with that name; throws if absent.
  int find(const std::string& name) const;
  bool contains(const std::string& name) const;
  /// Leaf ids below a node.
  std::vector<std::string> leaves_under(int index) const;
  /// Depth-first rendering, e.g. "omega_A(omega_X(a,b),T)".
  std::string to_string() const;

  bool operator==(const DecompTree& other) const { return nodes_ == other.nodes_; }

 private:
  int add(const Spec& spec, int parent);

  std::vector<TreeNode> nodes_;
  std::vector<std::string> leaves_;
  std::vector<int> splits_;
};

/// (V, proportions) coordinates. Each split stores its full proportion vector
/// over its children in tree order.
struct HDParams {
  double total_variance = 1.0;
  std::map<std::string, Eigen::VectorXd> proportions;
  /// Splits whose parent sum was zero in from_variances (set to barycenter).
  std::vector<std::string> degenerate_splits;

  /// Share of the designated child of a split.
  double omega(const DecompTree& tree, const std::string& split) const;
};

std::map<std::string, double> to_variances(const DecompTree& tree, const HDParams& params);
HDParams from_variances(const DecompTree& tree, const std::map<std::string, double>& sigma2);

/// Number of unconstrained coordinates: 1 + sum over splits of (children - 1).
int coordinate_count(const DecompTree& tree);
/// Names: "log_V", then per split "logit(<split>)" or "alr(<split>)[k]".
std::vector<std::string> coordinate_names(const DecompTree& tree);

/// log V; logit of the designated share for binary splits; additive log-ratio
/// against the last child for multi-branch splits.
Eigen::VectorXd to_unconstrained(const DecompTree& tree, const HDParams& params);
HDParams from_unconstrained(const DecompTree& tree, const Eigen::VectorXd& y);
/// log |det d(V, omega) / dy| of from_unconstrained.
double log_abs_jacobian(const DecompTree& tree, const Eigen::VectorXd& y);

/// Tags used to derive the default decomposition tree.
struct EffectTags {
  std::string id;
  bool abiotic = true;
  bool interaction = false;
  /// Covariate group (e.g. "X1", "spatial"); effects of one group share a
  /// level-3 branch.
  std::string group;
  /// Larger is more flexible; orders the level-4 binary splits.
  int flexibility = 0;
};

/// Level 1 abiotic/biotic, level 2 main/interaction (pruned when a side has no
/// interactions), level 3 per-group splits, level 4 binary flexibility splits.
DecompTree build_default_tree(std::span<const EffectTags> effects);

}  // namespace hdsdm
