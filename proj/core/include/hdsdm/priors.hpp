#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdsdm/hd_tree.hpp"
#include "hdsdm/random.hpp"

namespace hdsdm {

enum class PriorFamily {
  Jeffreys,    // on V, truncated to log V in [-30, 30]
  PcVariance,  // Exponential(lambda) on sqrt(V)
  Uniform,
  Beta,
  Dirichlet,
  Pc0,       // simplified PC0 on a binary split's designated share
  Pc0Exact,  // numeric PC0 from the KLD distance; validation only
};

std::string_view to_string(PriorFamily family);
PriorFamily prior_family_from_string(std::string_view name);

/// Covariances of the two branches of a binary split evaluated on all
/// covariate realizations, used by the exact PC0 construction.
struct Pc0ExactSetup {
  Eigen::MatrixXd sigma0;
  Eigen::MatrixXd sigma1;
  double omega0 = 1e-6;
};

/// Name of the node that carries the total variance prior.
inline constexpr const char* kTotalVarianceNode = "V";

struct PriorSpec {
  std::string node;
  PriorFamily family = PriorFamily::Uniform;
  double lambda = 0.0;  // PC rate on the sqrt scale
  double a = 1.0;       // Beta shape
  double b = 1.0;
  double q = 1.0;       // Dirichlet concentration
  std::shared_ptr<const Pc0ExactSetup> exact;

  static PriorSpec make(std::string node, PriorFamily family) {
    PriorSpec p;
    p.node = std::move(node);
    p.family = family;
    return p;
  }
  static PriorSpec jeffreys() { return make(kTotalVarianceNode, PriorFamily::Jeffreys); }
  static PriorSpec pc_variance(double lambda) {
    PriorSpec p = make(kTotalVarianceNode, PriorFamily::PcVariance);
    p.lambda = lambda;
    return p;
  }
  static PriorSpec uniform(std::string node) { return make(std::move(node), PriorFamily::Uniform); }
  static PriorSpec beta(std::string node, double a, double b) {
    PriorSpec p = make(std::move(node), PriorFamily::Beta);
    p.a = a;
    p.b = b;
    return p;
  }
  static PriorSpec dirichlet(std::string node, double q) {
    PriorSpec p = make(std::move(node), PriorFamily::Dirichlet);
    p.q = q;
    return p;
  }
  static PriorSpec pc0(std::string node, double lambda) {
    PriorSpec p = make(std::move(node), PriorFamily::Pc0);
    p.lambda = lambda;
    return p;
  }
  static PriorSpec pc0_exact(std::string node, double lambda,
                             std::shared_ptr<const Pc0ExactSetup> setup) {
    PriorSpec p = make(std::move(node), PriorFamily::Pc0Exact);
    p.lambda = lambda;
    p.exact = std::move(setup);
    return p;
  }

  bool operator==(const PriorSpec&) const = default;
};

/// Rate making P(sqrt(V) > U) = alpha under Exponential(lambda) on sqrt(V).
double pc_variance_lambda(double u, double alpha);
double pc_variance_logpdf(double v, double lambda);

/// Truncated exponential on sqrt(omega).
double pc0_simplified_logpdf(double omega, double lambda);
double pc0_cdf(double omega, double lambda);
double pc0_quantile(double p, double lambda);

/// lambda with P(omega < U) = alpha; requires alpha > sqrt(U).
double pc0_calibrate(double u, double alpha);

/// P(logit(1/4) < logit(w) - logit(1/P) < logit(3/4)) with w ~ Beta(q, (P-1)q).
double dirichlet_central_probability(double q, int p);
/// q making dirichlet_central_probability equal 1/2.
double dirichlet_q_calibrate(int p);

struct RankInfo {
  int r0 = -1;  // eigen-count ranks, -1 when not computed
  int r1 = -1;
  int n = 0;
  int upper0 = 0;  // min(N0, K0)
  int upper1 = 0;  // min(N1, K1)
  bool holds_by_bounds = false;
  bool ranks_computed = false;
  bool condition_holds = false;
};

/// Sum-of-ranks check: bounds first; eigen-count ranks whenever the
/// covariances are supplied.
RankInfo sum_of_ranks_check(int k0, int n0, int k1, int n1, int n,
                            const Eigen::MatrixXd* sigma0 = nullptr,
                            const Eigen::MatrixXd* sigma1 = nullptr);

/// sqrt(2 KLD) between N(0, Sigma(omega)) and N(0, Sigma(omega0)) with
/// Sigma(w) = (1 - w) Sigma0 + w Sigma1, using generalized inverses and
/// determinants.
double kld_distance(double omega, double omega0, const Eigen::MatrixXd& sigma0,
                    const Eigen::MatrixXd& sigma1);

/// Distance to the omega0 -> 0 base rescaled as sqrt(omega0) d / sqrt(R(1)),
/// which tends to sqrt(omega) under the sum-of-ranks condition.
double normalized_pc0_distance(double omega, const Pc0ExactSetup& setup);

/// Exact PC0 log density via the numeric distance and a finite-difference
/// change of variables.
double pc0_exact_logpdf(double omega, double lambda, const Pc0ExactSetup& setup);

const PriorSpec& prior_for(std::span<const PriorSpec> priors, const std::string& node);

/// Checks every split and V has exactly one compatible, well-formed prior.
void validate_priors(const DecompTree& tree, std::span<const PriorSpec> priors);

/// Sum of node-wise log densities in (V, omega) coordinates. Multi-branch
/// densities are with respect to the first K-1 proportions.
double log_prior(const DecompTree& tree, std::span<const PriorSpec> priors,
                 const HDParams& params);

/// Log density of the unconstrained coordinates (log_prior + log Jacobian).
double log_prior_unconstrained(const DecompTree& tree, std::span<const PriorSpec> priors,
                               const Eigen::VectorXd& y);

/// V and every split at its prior median (barycenter for multi-branch).
HDParams prior_medians(const DecompTree& tree, std::span<const PriorSpec> priors);

/// Marginal prior CDF of V (node "V") or of the k-th proportion of a split.
double prior_marginal_cdf(const DecompTree& tree, std::span<const PriorSpec> priors,
                          const std::string& node, int component, double value);

/// Exact draw from the (independent) HD prior.
HDParams sample_prior(const DecompTree& tree, std::span<const PriorSpec> priors, Rng& rng);

}  // namespace hdsdm
