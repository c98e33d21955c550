#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdsdm/gmrf.hpp"
#include "hdsdm/hd_tree.hpp"
#include "hdsdm/model.hpp"

namespace hdsdm {

struct McmcSettings {
  int chains = 4;
  int iterations = 4000;  // per chain, including burn-in
  int burn_in = 2000;
  int thin = 1;
  /// Iterations between proposal-covariance refreshes during burn-in.
  int adaptation_window = 100;
  double target_hyper = 0.234;
  double target_block = 0.44;
  std::uint64_t seed = 1;
  /// 0 samples the prior.
  double likelihood_weight = 1.0;
  bool parallel_chains = true;

  bool operator==(const McmcSettings&) const = default;
  void validate() const;
};

struct PosteriorSample {
  HDParams hd;
  std::vector<CoefficientBlock> coefficients;
  double mu = 0.0;
  int chain = 0;
};

struct FitResult {
  std::vector<PosteriorSample> samples;
  /// Summary columns: "V", split shares ("omega_A" or "omega_X[k]"), "mu".
  std::vector<std::string> summary_names;
  /// One row per sample, in the order of `samples`.
  Eigen::MatrixXd summary;
  /// Split-R-hat per summary column (NaN with a single retained draw per chain).
  Eigen::VectorXd rhat;
  /// Post-burn-in acceptance rates per move ("hyper", "hyper_centered", "mu",
  /// then effect ids), averaged over chains.
  std::vector<std::pair<std::string, double>> acceptance;
  int chains = 0;
};

/// Summary column names for a tree.
std::vector<std::string> summary_names(const DecompTree& tree, bool intercept);
Eigen::VectorXd summary_row(const DecompTree& tree, const PosteriorSample& s, bool intercept);

/// Adaptive Metropolis-within-Gibbs over (HD coordinates, intercept,
/// coefficient blocks). Chains use independent streams of settings.seed.
FitResult fit(const AssembledModel& model, const McmcSettings& settings);

/// logistic(mean over samples of eta) per row of `data`.
Eigen::VectorXd predict(const AssembledModel& model, std::span<const PosteriorSample> samples,
                        const Dataset& data);

/// eta for one sample at every row of `data`.
Eigen::VectorXd linear_predictor(const AssembledModel& model, const PosteriorSample& sample,
                                 const Dataset& data);

struct Metrics {
  double loglik = 0.0;
  double brier = 0.0;
  double tjur_r2 = 0.0;
  double accuracy = 0.0;
};

Metrics metrics(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& y);

}  // namespace hdsdm
