#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "hdsdm/hd_tree.hpp"
#include "hdsdm/random.hpp"

namespace hdsdm::gen {

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random symmetric 0/1 adjacency on k nodes.
inline Eigen::MatrixXd random_graph(Rng& rng, int k, double density) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (uniform01(rng) < density) w(i, j) = w(j, i) = 1.0;
    }
  }
  return w;
}

/// Random tree with `leaves` leaves; splits have 2-4 children.
inline DecompTree random_tree(Rng& rng, int leaves) {
  int leaf_id = 0;
  int split_id = 0;
  std::function<DecompTree::Spec(int)> build = [&](int n) {
    if (n == 1) return DecompTree::leaf("e" + std::to_string(leaf_id++));
    const int k = std::min(n, uniform_int(rng, 2, 4));
    std::vector<int> sizes(static_cast<std::size_t>(k), 1);
    for (int extra = n - k; extra > 0; --extra) ++sizes[static_cast<std::size_t>(uniform_int(rng, 0, k - 1))];
    const std::string name = "s" + std::to_string(split_id++);
    std::vector<DecompTree::Spec> children;
    for (int s : sizes) children.push_back(build(s));
    return DecompTree::split(name, std::move(children), uniform_int(rng, 0, k - 1));
  };
  return DecompTree(build(leaves));
}

/// Random interior HD parameters for a tree.
inline HDParams random_params(Rng& rng, const DecompTree& tree) {
  Eigen::VectorXd y(coordinate_count(tree));
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = uniform_real(rng, -3.0, 3.0);
  return from_unconstrained(tree, y);
}

}  // namespace hdsdm::gen
