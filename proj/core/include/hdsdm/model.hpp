#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdsdm/hd_tree.hpp"
#include "hdsdm/priors.hpp"
#include "hdsdm/standardization.hpp"

namespace hdsdm {

enum class EffectKind {
  Linear,       // standardized covariate, one coefficient
  Iid,          // indicator basis, independent levels
  Rw1,          // indicator basis, first-order random walk over levels
  Rw2,          // indicator basis, second-order random walk over levels
  PSpline,      // split into <id>_L (linear) and <id>_N (RW2 B-spline)
  Spatial,      // pruned tensor B-splines with ICAR precision
  Interaction,  // product of two standardized covariates
};

std::string_view to_string(EffectKind kind);
EffectKind effect_kind_from_string(std::string_view name);

/// Declarative description of one model term and its covariate support.
struct EffectDecl {
  std::string id;
  EffectKind kind = EffectKind::Linear;
  /// Dataset columns feeding the basis (two for Spatial and Interaction).
  std::vector<std::string> columns;
  /// Interval supports, one per column (Linear, PSpline, Spatial, Interaction).
  std::vector<std::pair<double, double>> ranges;
  /// Level set {first_level, ..., last_level} (Iid, Rw1, Rw2).
  int first_level = 1;
  int last_level = 2;
  /// B-spline functions per axis (PSpline, Spatial).
  int basis_size = 20;
  /// Support points of a spatial effect (rows are locations).
  Eigen::MatrixXd point_cloud;
  /// Tree tags.
  bool abiotic = true;
  std::string group;  // defaults to the effect id

  bool operator==(const EffectDecl& other) const;
};

/// Tree leaf ids produced by a declaration.
std::vector<std::string> term_ids(const EffectDecl& decl);

struct ModelSpec {
  bool intercept = true;
  std::vector<EffectDecl> effects;
  DecompTree tree;
  std::vector<PriorSpec> priors;
};

/// Tags of the expanded terms, for build_default_tree.
std::vector<EffectTags> default_tags(std::span<const EffectDecl> effects);

/// Presence/absence response with named numeric covariate columns.
struct Dataset {
  Eigen::VectorXd y;
  std::map<std::string, Eigen::VectorXd> columns;
  /// Per-row training flag; empty means every row trains.
  std::vector<bool> train;

  Eigen::Index size() const { return y.size(); }
  bool has_column(const std::string& name) const { return columns.contains(name); }
  /// N x columns matrix of the named columns.
  Eigen::MatrixXd matrix(const std::vector<std::string>& names) const;
  /// Rows whose training flag equals `training`.
  Dataset subset(bool training) const;
  /// Checks y is binary and columns match y in length.
  void validate() const;
};

/// Standardized effect bound to the dataset columns it reads.
struct ModelTerm {
  StandardizedEffect effect;
  std::vector<std::string> columns;
  /// Declaration (partition group) the term belongs to.
  std::string group;
  /// Declared interval per column; values outside are a domain error.
  std::vector<std::pair<double, double>> support;

  Eigen::MatrixXd design(const Dataset& data) const;
};

/// Standardized terms of a declaration list (P-splines split in two).
std::vector<ModelTerm> build_terms(std::span<const EffectDecl> effects);

struct AssembledModel {
  bool intercept = true;
  std::vector<ModelTerm> terms;
  DecompTree tree;
  std::vector<PriorSpec> priors;
  /// Training response and per-term designs (N_train x K_e).
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> designs;

  const ModelTerm& term(const std::string& id) const;
  /// Distinct groups in declaration order.
  std::vector<std::string> groups() const;
  /// Design of one term evaluated on arbitrary rows.
  Eigen::MatrixXd design(std::size_t term, const Dataset& data) const;
};

/// Standardizes all effects and evaluates their bases on the training rows.
AssembledModel assemble(const ModelSpec& model, const Dataset& data);

/// Model without data, for prior-only sampling.
AssembledModel assemble_prior_only(const ModelSpec& model);

/// Centered state: unconstrained HD coordinates, intercept and coefficients.
struct ModelState {
  Eigen::VectorXd theta;
  double mu = 0.0;
  std::vector<Eigen::VectorXd> coefficients;
};

inline constexpr double kInterceptPriorSd = 10.0;

/// Bernoulli-logit log-likelihood for linear predictor eta.
double bernoulli_logit_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta);

/// Leaf variances in term order.
Eigen::VectorXd term_variances(const AssembledModel& model, const Eigen::VectorXd& theta);

/// likelihood_weight * log-lik + Gaussian coefficient terms + intercept prior
/// + HD prior in unconstrained coordinates (with Jacobian).
double log_posterior(const AssembledModel& model, const ModelState& state,
                     double likelihood_weight = 1.0);

}  // namespace hdsdm
