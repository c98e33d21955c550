#include "hdsdm/hd_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include "hdsdm/error.hpp"

namespace hdsdm {

DecompTree::DecompTree(const Spec& spec) {
  add(spec, -1);
  std::set<std::string> names;
  for (const auto& n : nodes_) {
    if (n.name.empty()) throw Error(ErrorKind::Specification, "tree node without a name");
    if (!names.insert(n.name).second) {
      throw Error(ErrorKind::Specification, "duplicate tree node name '" + n.name + "'");
    }
  }
}

int DecompTree::add(const Spec& spec, int parent) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(TreeNode{spec.name, {}, parent, spec.designated});
  if (spec.children.empty()) {
    leaves_.push_back(spec.name);
    return index;
  }
  if (spec.children.size() < 2) {
    throw Error(ErrorKind::Specification,
                "split '" + spec.name + "' must have at least two children");
  }
  if (spec.designated < 0 || spec.designated >= static_cast<int>(spec.children.size())) {
    throw Error(ErrorKind::Specification,
                "split '" + spec.name + "' designates a non-existent child");
  }
  splits_.push_back(index);
  for (const auto& child : spec.children) {
    const int c = add(child, index);
    nodes_[static_cast<std::size_t>(index)].children.push_back(c);
  }
  return index;
}

DecompTree::Spec DecompTree::to_spec() const {
  std::function<Spec(int)> build = [&](int i) {
    const TreeNode& n = node(i);
    Spec s{n.name, {}, n.designated};
    for (int c : n.children) s.children.push_back(build(c));
    return s;
  };
  if (nodes_.empty()) return Spec{};
  return build(root());
}

std::vector<std::string> DecompTree::split_ids() const {
  std::vector<std::string> out;
  for (int s : splits_) out.push_back(node(s).name);
  return out;
}

int DecompTree::find(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<int>(i);
  }
  throw Error(ErrorKind::Specification, "tree has no node named '" + name + "'");
}

bool DecompTree::contains(const std::string& name) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const TreeNode& n) { return n.name == name; });
}

std::vector<std::string> DecompTree::leaves_under(int index) const {
  std::vector<std::string> out;
  std::function<void(int)> walk = [&](int i) {
    if (node(i).is_leaf()) {
      out.push_back(node(i).name);
      return;
    }
    for (int c : node(i).children) walk(c);
  };
  walk(index);
  return out;
}

std::string DecompTree::to_string() const {
  std::ostringstream os;
  std::function<void(int)> walk = [&](int i) {
    os << node(i).name;
    if (node(i).is_leaf()) return;
    os << '(';
    for (std::size_t k = 0; k < node(i).children.size(); ++k) {
      if (k > 0) os << ',';
      if (static_cast<int>(k) == node(i).designated) os << '*';
      walk(node(i).children[k]);
    }
    os << ')';
  };
  if (!nodes_.empty()) walk(root());
  return os.str();
}

double HDParams::omega(const DecompTree& tree, const std::string& split) const {
  const auto it = proportions.find(split);
  if (it == proportions.end()) {
    throw Error(ErrorKind::Specification, "no proportions for split '" + split + "'");
  }
  return it->second[tree.node(tree.find(split)).designated];
}

namespace {

const Eigen::VectorXd& proportions_of(const DecompTree& tree, const HDParams& p, int split) {
  const TreeNode& n = tree.node(split);
  const auto it = p.proportions.find(n.name);
  if (it == p.proportions.end()) {
    throw Error(ErrorKind::Dimension, "missing proportions for split '" + n.name + "'");
  }
  if (it->second.size() != static_cast<Eigen::Index>(n.children.size())) {
    throw Error(ErrorKind::Dimension,
                "proportion vector length mismatch for split '" + n.name + "'");
  }
  return it->second;
}

}  // namespace

std::map<std::string, double> to_variances(const DecompTree& tree, const HDParams& params) {
  std::map<std::string, double> out;
  std::function<void(int, double)> walk = [&](int i, double mass) {
    const TreeNode& n = tree.node(i);
    if (n.is_leaf()) {
      out[n.name] = mass;
      return;
    }
    const Eigen::VectorXd& p = proportions_of(tree, params, i);
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      walk(n.children[k], mass * p[static_cast<Eigen::Index>(k)]);
    }
  };
  walk(tree.root(), params.total_variance);
  return out;
}

HDParams from_variances(const DecompTree& tree, const std::map<std::string, double>& sigma2) {
  if (sigma2.size() != tree.leaves().size()) {
    throw Error(ErrorKind::Dimension, "variance map does not match the tree leaves");
  }
  bool any_positive = false;
  for (const auto& leaf : tree.leaves()) {
    const auto it = sigma2.find(leaf);
    if (it == sigma2.end()) {
      throw Error(ErrorKind::Dimension, "no variance for leaf '" + leaf + "'");
    }
    if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
      throw Error(ErrorKind::Domain, "variances must be finite and non-negative");
    }
    any_positive = any_positive || it->second > 0.0;
  }
  if (!any_positive) {
    throw Error(ErrorKind::Domain, "at least one variance must be positive");
  }

  std::vector<double> sums(tree.nodes().size(), 0.0);
  std::function<double(int)> sum = [&](int i) {
    const TreeNode& n = tree.node(i);
    double s = 0.0;
    if (n.is_leaf()) {
      s = sigma2.at(n.name);
    } else {
      for (int c : n.children) s += sum(c);
    }
    sums[static_cast<std::size_t>(i)] = s;
    return s;
  };
  HDParams out;
  out.total_variance = sum(tree.root());
  for (int split : tree.splits()) {
    const TreeNode& n = tree.node(split);
    const auto k = static_cast<Eigen::Index>(n.children.size());
    const double parent = sums[static_cast<std::size_t>(split)];
    Eigen::VectorXd p(k);
    if (parent > 0.0) {
      for (Eigen::Index c = 0; c < k; ++c) {
        p[c] = sums[static_cast<std::size_t>(n.children[static_cast<std::size_t>(c)])] / parent;
      }
    } else {
      p.setConstant(1.0 / static_cast<double>(k));
      out.degenerate_splits.push_back(n.name);
    }
    out.proportions[n.name] = p;
  }
  return out;
}

int coordinate_count(const DecompTree& tree) {
  int count = 1;
  for (int s : tree.splits()) count += static_cast<int>(tree.node(s).children.size()) - 1;
  return count;
}

std::vector<std::string> coordinate_names(const DecompTree& tree) {
  std::vector<std::string> out{"log_V"};
  for (int s : tree.splits()) {
    const TreeNode& n = tree.node(s);
    if (n.children.size() == 2) {
      out.push_back("logit(" + n.name + ")");
    } else {
      for (std::size_t k = 0; k + 1 < n.children.size(); ++k) {
        out.push_back("alr(" + n.name + ")[" + std::to_string(k) + "]");
      }
    }
  }
  return out;
}

Eigen::VectorXd to_unconstrained(const DecompTree& tree, const HDParams& params) {
  if (!(params.total_variance > 0.0) || !std::isfinite(params.total_variance)) {
    throw Error(ErrorKind::Domain, "total variance must be positive and finite");
  }
  Eigen::VectorXd y(coordinate_count(tree));
  Eigen::Index at = 0;
  y[at++] = std::log(params.total_variance);
  for (int s : tree.splits()) {
    const TreeNode& n = tree.node(s);
    const Eigen::VectorXd& p = proportions_of(tree, params, s);
    if ((p.array() <= 0.0).any() || (p.array() >= 1.0).any()) {
      throw Error(ErrorKind::Domain, "proportions of split '" + n.name +
                                         "' must lie strictly inside (0, 1)");
    }
    if (n.children.size() == 2) {
      const double w = p[n.designated];
      y[at++] = std::log(w) - std::log1p(-w);
    } else {
      const double last = std::log(p[p.size() - 1]);
      for (Eigen::Index k = 0; k + 1 < p.size(); ++k) y[at++] = std::log(p[k]) - last;
    }
  }
  return y;
}

namespace {

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

HDParams from_unconstrained(const DecompTree& tree, const Eigen::VectorXd& y) {
  if (y.size() != coordinate_count(tree)) {
    throw Error(ErrorKind::Dimension, "unconstrained vector has the wrong length");
  }
  HDParams out;
  Eigen::Index at = 0;
  out.total_variance = std::exp(y[at++]);
  for (int s : tree.splits()) {
    const TreeNode& n = tree.node(s);
    const auto k = static_cast<Eigen::Index>(n.children.size());
    Eigen::VectorXd p(k);
    if (k == 2) {
      const double w = logistic(y[at++]);
      p[n.designated] = w;
      p[1 - n.designated] = logistic(-y[at - 1]);
    } else {
      const Eigen::VectorXd z = y.segment(at, k - 1);
      at += k - 1;
      const double shift = std::max(0.0, z.maxCoeff());
      double denom = std::exp(-shift);
      for (Eigen::Index c = 0; c + 1 < k; ++c) denom += std::exp(z[c] - shift);
      for (Eigen::Index c = 0; c + 1 < k; ++c) p[c] = std::exp(z[c] - shift) / denom;
      p[k - 1] = std::exp(-shift) / denom;
    }
    out.proportions[n.name] = p;
  }
  return out;
}

double log_abs_jacobian(const DecompTree& tree, const Eigen::VectorXd& y) {
  const HDParams p = from_unconstrained(tree, y);
  double acc = y[0];
  for (int s : tree.splits()) {
    const Eigen::VectorXd& v = p.proportions.at(tree.node(s).name);
    acc += v.array().log().sum();
  }
  return acc;
}

DecompTree build_default_tree(std::span<const EffectTags> effects) {
  if (effects.empty()) {
    throw Error(ErrorKind::Specification, "cannot build a tree without effects");
  }
  std::set<std::string> ids;
  for (const auto& e : effects) {
    if (e.id.empty() || e.group.empty()) {
      throw Error(ErrorKind::Specification, "effect '" + e.id + "' lacks id or group tag");
    }
    if (!ids.insert(e.id).second) {
      throw Error(ErrorKind::Specification, "duplicate effect id '" + e.id + "'");
    }
  }

  using Spec = DecompTree::Spec;

  // Level 4: successive binary splits by increasing flexibility
  auto group_node = [](std::vector<EffectTags> members, const std::string& group) {
    std::stable_sort(members.begin(), members.end(),
                     [](const EffectTags& a, const EffectTags& b) {
                       return a.flexibility < b.flexibility;
                     });
    Spec node = DecompTree::leaf(members.back().id);
    for (std::size_t i = members.size() - 1; i-- > 0;) {
      std::string name = "omega_N_" + group;
      if (i > 0) name += "_" + std::to_string(i + 1);
      node = DecompTree::split(name, {DecompTree::leaf(members[i].id), std::move(node)}, 1);
    }
    return node;
  };

  // Level 3: one branch per covariate group, in declaration order
  auto level3 = [&](const std::vector<EffectTags>& members, const std::string& name) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<EffectTags>> by_group;
    for (const auto& e : members) {
      if (!by_group.contains(e.group)) order.push_back(e.group);
      by_group[e.group].push_back(e);
    }
    std::vector<Spec> children;
    for (const auto& g : order) children.push_back(group_node(by_group[g], g));
    if (children.size() == 1) return children.front();
    return DecompTree::split(name, std::move(children), 0);
  };

  // Level 2: main versus interaction, pruned without interactions
  auto side_node = [&](bool abiotic) -> std::optional<Spec> {
    std::vector<EffectTags> mains, inters;
    for (const auto& e : effects) {
      if (e.abiotic != abiotic) continue;
      (e.interaction ? inters : mains).push_back(e);
    }
    const std::string main_name = abiotic ? "omega_X" : "omega_S";
    const std::string inter_name = abiotic ? "omega_XX" : "omega_ST";
    if (mains.empty() && inters.empty()) return std::nullopt;
    if (inters.empty()) return level3(mains, main_name);
    if (mains.empty()) return level3(inters, inter_name);
    return DecompTree::split(abiotic ? "omega_A_int" : "omega_B_int",
                             {level3(mains, main_name), level3(inters, inter_name)}, 1);
  };

  std::optional<Spec> a = side_node(true);
  std::optional<Spec> b = side_node(false);
  if (a && b) return DecompTree(DecompTree::split("omega_A", {*a, *b}, 0));
  return DecompTree(a ? *a : *b);
}

}  // namespace hdsdm
