#include "hdsdm/priors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "hdsdm/error.hpp"
#include "hdsdm/linalg.hpp"

namespace hdsdm {

namespace {

constexpr double kLogVBound = 30.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Root of an increasing function on [lo, hi], expanding hi when needed.
double solve_increasing(const std::function<double(double)>& f, double target, double lo,
                        double hi, double tol, const char* what) {
  double f_hi = f(hi);
  for (int i = 0; f_hi < target; ++i) {
    if (i > 200) throw Error(ErrorKind::Numerical, std::string(what) + ": root not bracketed");
    lo = hi;
    hi *= 2.0;
    f_hi = f(hi);
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 400; ++i) {
    mid = 0.5 * (lo + hi);
    const double r = f(mid) - target;
    if (std::abs(r) < tol && hi - lo < 1e-12 * std::max(1.0, std::abs(mid))) break;
    if (r < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::abs(mid)) break;
  }
  if (std::abs(f(mid) - target) > tol) {
    throw Error(ErrorKind::Numerical, std::string(what) + ": bisection did not converge");
  }
  return mid;
}

void require_unit_open(double x, const char* what) {
  if (!(x > 0.0 && x < 1.0)) {
    std::ostringstream msg;
    msg << what << " must lie in (0, 1), got " << x;
    throw Error(ErrorKind::Domain, msg.str());
  }
}

double beta_logpdf(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - std::lgamma(a) - std::lgamma(b) +
         std::lgamma(a + b);
}

double dirichlet_logpdf(const Eigen::VectorXd& p, double q) {
  const auto k = static_cast<double>(p.size());
  double out = std::lgamma(k * q) - k * std::lgamma(q);
  for (Eigen::Index i = 0; i < p.size(); ++i) out += (q - 1.0) * std::log(p[i]);
  return out;
}

bool is_total(const PriorSpec& p) {
  return p.family == PriorFamily::Jeffreys || p.family == PriorFamily::PcVariance;
}

double gamma_draw(double shape, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0)(rng);
}

}  // namespace

std::string_view to_string(PriorFamily family) {
  switch (family) {
    case PriorFamily::Jeffreys: return "jeffreys";
    case PriorFamily::PcVariance: return "pc_variance";
    case PriorFamily::Uniform: return "uniform";
    case PriorFamily::Beta: return "beta";
    case PriorFamily::Dirichlet: return "dirichlet";
    case PriorFamily::Pc0: return "pc0";
    case PriorFamily::Pc0Exact: return "pc0_exact";
  }
  return "unknown";
}

PriorFamily prior_family_from_string(std::string_view name) {
  for (auto f : {PriorFamily::Jeffreys, PriorFamily::PcVariance, PriorFamily::Uniform,
                 PriorFamily::Beta, PriorFamily::Dirichlet, PriorFamily::Pc0,
                 PriorFamily::Pc0Exact}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorKind::Specification, "unknown prior family '" + std::string(name) + "'");
}

double pc_variance_lambda(double u, double alpha) {
  if (!(u > 0.0)) throw Error(ErrorKind::Domain, "PC variance bound U must be positive");
  require_unit_open(alpha, "PC variance tail probability");
  return -std::log(alpha) / u;
}

double pc_variance_logpdf(double v, double lambda) {
  if (!(v > 0.0)) throw Error(ErrorKind::Domain, "variance must be positive");
  const double s = std::sqrt(v);
  return std::log(lambda) - std::log(2.0 * s) - lambda * s;
}

double pc0_simplified_logpdf(double omega, double lambda) {
  require_unit_open(omega, "omega");
  if (!(lambda > 0.0)) throw Error(ErrorKind::Domain, "PC0 rate must be positive");
  const double s = std::sqrt(omega);
  return std::log(lambda) - lambda * s - std::log(2.0 * s) - std::log(-std::expm1(-lambda));
}

double pc0_cdf(double omega, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::Domain, "PC0 rate must be positive");
  if (omega <= 0.0) return 0.0;
  if (omega >= 1.0) return 1.0;
  return std::expm1(-lambda * std::sqrt(omega)) / std::expm1(-lambda);
}

double pc0_quantile(double p, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::Domain, "PC0 rate must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Domain, "probability outside [0, 1]");
  const double s = -std::log1p(p * std::expm1(-lambda)) / lambda;
  return std::clamp(s * s, 0.0, 1.0);
}

double pc0_calibrate(double u, double alpha) {
  require_unit_open(u, "PC0 bound U");
  require_unit_open(alpha, "PC0 probability alpha");
  const double floor = std::sqrt(u);
  if (alpha < floor - 1e-12) {
    std::ostringstream msg;
    msg << "P(omega < " << u << ") = " << alpha << " is unattainable; PC0 requires alpha > sqrt(U) = "
        << floor;
    throw Error(ErrorKind::Infeasible, msg.str());
  }
  if (alpha <= floor + 1e-12) {
    std::ostringstream msg;
    msg << "alpha = sqrt(U) = " << floor << " is the lambda -> 0 boundary; no finite rate";
    throw Error(ErrorKind::Infeasible, msg.str());
  }
  return solve_increasing([&](double l) { return pc0_cdf(u, l); }, alpha, 0.0, 1.0, 1e-12,
                          "pc0_calibrate");
}

double dirichlet_central_probability(double q, int p) {
  if (p < 2) throw Error(ErrorKind::Specification, "Dirichlet needs at least two components");
  if (!(q > 0.0)) throw Error(ErrorKind::Domain, "Dirichlet concentration must be positive");
  const double centre = -std::log(static_cast<double>(p - 1));
  const double lo = 1.0 / (1.0 + std::exp(-(centre - std::log(3.0))));
  const double hi = 1.0 / (1.0 + std::exp(-(centre + std::log(3.0))));
  const double b = (p - 1) * q;
  return boost::math::ibeta(q, b, hi) - boost::math::ibeta(q, b, lo);
}

double dirichlet_q_calibrate(int p) {
  if (p < 2) throw Error(ErrorKind::Specification, "Dirichlet needs at least two components");
  // Bisection on log q; the central mass grows with q.
  auto f = [&](double t) { return dirichlet_central_probability(std::exp(t - 20.0), p); };
  const double t = solve_increasing(f, 0.5, 0.0, 20.0, 1e-12, "dirichlet_q_calibrate");
  return std::exp(t - 20.0);
}

RankInfo sum_of_ranks_check(int k0, int n0, int k1, int n1, int n,
                            const Eigen::MatrixXd* sigma0, const Eigen::MatrixXd* sigma1) {
  if (k0 < 0 || k1 < 0 || n0 < 0 || n1 < 0 || n <= 0) {
    throw Error(ErrorKind::Dimension, "sum_of_ranks_check: negative or empty dimensions");
  }
  RankInfo info;
  info.n = n;
  info.upper0 = std::min(n0, k0);
  info.upper1 = std::min(n1, k1);
  info.holds_by_bounds = info.upper0 + info.upper1 <= n;
  info.condition_holds = info.holds_by_bounds;
  if (sigma0 != nullptr && sigma1 != nullptr) {
    for (const auto* s : {sigma0, sigma1}) {
      if (s->rows() != n || s->cols() != n) {
        throw Error(ErrorKind::Dimension, "sum_of_ranks_check: covariance is not N x N");
      }
    }
    info.r0 = spectrum(symmetrize(*sigma0)).rank;
    info.r1 = spectrum(symmetrize(*sigma1)).rank;
    info.ranks_computed = true;
    info.condition_holds = info.r0 + info.r1 <= n;
  }
  return info;
}

double kld_distance(double omega, double omega0, const Eigen::MatrixXd& sigma0,
                    const Eigen::MatrixXd& sigma1) {
  if (!(omega > 0.0 && omega <= 1.0) || !(omega0 > 0.0 && omega0 <= 1.0)) {
    throw Error(ErrorKind::Domain, "kld_distance: omega and omega0 must lie in (0, 1]");
  }
  if (sigma0.rows() != sigma0.cols() || sigma1.rows() != sigma1.cols() ||
      sigma0.rows() != sigma1.rows()) {
    throw Error(ErrorKind::Dimension, "kld_distance: covariances must be square and equal-sized");
  }
  const Spectrum s0 = spectrum(symmetrize(sigma0));
  const Spectrum s1 = spectrum(symmetrize(sigma1));
  for (const Spectrum* s : {&s0, &s1}) {
    if (s->values.size() > 0 && s->values.minCoeff() < -kZeroEigenTolerance * std::max(1.0, s->max_value)) {
      throw Error(ErrorKind::Validation, "kld_distance: covariance is not positive semi-definite");
    }
  }
  // The rank of a mixture is the dimension of the union of ranges; each
  // component is normalized so that neither swamps the other's spectrum.
  Eigen::MatrixXd mix = symmetrize(sigma0);
  if (s0.max_value > 0.0) mix /= s0.max_value;
  if (s1.max_value > 0.0) mix += symmetrize(sigma1) / s1.max_value;
  const int mixed_rank = spectrum(mix).rank;
  auto rank_at = [&](double w) { return w >= 1.0 ? s1.rank : mixed_rank; };

  auto cov = [&](double w) { return Eigen::MatrixXd(symmetrize((1.0 - w) * sigma0 + w * sigma1)); };
  const int r = rank_at(omega);
  const int r0 = rank_at(omega0);
  if (r == 0 || r0 == 0) throw Error(ErrorKind::Degenerate, "kld_distance: zero covariance");
  const Spectrum sw = spectrum_with_rank(cov(omega), r);
  const Spectrum sw0 = spectrum_with_rank(cov(omega0), r0);
  const Eigen::MatrixXd inv0 = pseudo_inverse(sw0);
  const double trace = inv0.cwiseProduct(cov(omega)).sum();
  const double d2 = trace - r - (log_pseudo_determinant(sw) - log_pseudo_determinant(sw0)) +
                    (r0 - r) * std::log(2.0 * std::numbers::pi);
  if (d2 < -1e-8 * std::max(1.0, std::abs(trace))) {
    std::ostringstream msg;
    msg << "kld_distance: negative squared distance " << d2;
    throw Error(ErrorKind::Numerical, msg.str());
  }
  return std::sqrt(std::max(d2, 0.0));
}

double normalized_pc0_distance(double omega, const Pc0ExactSetup& setup) {
  const int r1 = spectrum(symmetrize(setup.sigma1)).rank;
  if (r1 == 0) throw Error(ErrorKind::Degenerate, "PC0: second branch has zero covariance");
  return std::sqrt(setup.omega0) * kld_distance(omega, setup.omega0, setup.sigma0, setup.sigma1) /
         std::sqrt(static_cast<double>(r1));
}

double pc0_exact_logpdf(double omega, double lambda, const Pc0ExactSetup& setup) {
  require_unit_open(omega, "omega");
  if (!(lambda > 0.0)) throw Error(ErrorKind::Domain, "PC0 rate must be positive");
  const double h = 1e-6 * std::min(omega, 1.0 - omega);
  const double slope = (normalized_pc0_distance(omega + h, setup) -
                        normalized_pc0_distance(omega - h, setup)) /
                       (2.0 * h);
  const double d = normalized_pc0_distance(omega, setup);
  const double d_max = normalized_pc0_distance(1.0, setup);
  return std::log(lambda) - lambda * d + std::log(std::abs(slope)) -
         std::log(-std::expm1(-lambda * d_max));
}

const PriorSpec& prior_for(std::span<const PriorSpec> priors, const std::string& node) {
  for (const auto& p : priors) {
    if (p.node == node) return p;
  }
  throw Error(ErrorKind::Specification, "no prior given for '" + node + "'");
}

void validate_priors(const DecompTree& tree, std::span<const PriorSpec> priors) {
  std::set<std::string> seen;
  const auto split_ids = tree.split_ids();
  for (const auto& p : priors) {
    if (!seen.insert(p.node).second) {
      throw Error(ErrorKind::Specification, "more than one prior for '" + p.node + "'");
    }
    const bool total = p.node == kTotalVarianceNode;
    if (!total && std::find(split_ids.begin(), split_ids.end(), p.node) == split_ids.end()) {
      throw Error(ErrorKind::Specification, "prior for unknown split '" + p.node + "'");
    }
    if (total != is_total(p)) {
      throw Error(ErrorKind::Specification, "prior family '" + std::string(to_string(p.family)) +
                                                "' cannot be used for '" + p.node + "'");
    }
    const bool binary = !total && tree.node(tree.find(p.node)).children.size() == 2;
    switch (p.family) {
      case PriorFamily::PcVariance:
      case PriorFamily::Pc0:
        if (!(p.lambda > 0.0)) throw Error(ErrorKind::Domain, "PC rate for '" + p.node + "' must be positive");
        break;
      case PriorFamily::Pc0Exact:
        if (!(p.lambda > 0.0)) throw Error(ErrorKind::Domain, "PC rate for '" + p.node + "' must be positive");
        if (!p.exact) throw Error(ErrorKind::Specification, "exact PC0 for '" + p.node + "' lacks covariances");
        break;
      case PriorFamily::Beta:
        if (!(p.a > 0.0 && p.b > 0.0)) throw Error(ErrorKind::Domain, "Beta shapes for '" + p.node + "' must be positive");
        break;
      case PriorFamily::Dirichlet:
        if (!(p.q > 0.0)) throw Error(ErrorKind::Domain, "Dirichlet concentration for '" + p.node + "' must be positive");
        break;
      default:
        break;
    }
    if (!binary && !total &&
        (p.family == PriorFamily::Beta || p.family == PriorFamily::Pc0 ||
         p.family == PriorFamily::Pc0Exact)) {
      throw Error(ErrorKind::Specification, "prior family '" + std::string(to_string(p.family)) +
                                                "' needs a binary split; '" + p.node +
                                                "' has more branches");
    }
  }
  if (!seen.contains(kTotalVarianceNode)) {
    throw Error(ErrorKind::Specification, "no prior given for the total variance");
  }
  for (const auto& s : split_ids) {
    if (!seen.contains(s)) throw Error(ErrorKind::Specification, "no prior given for '" + s + "'");
  }
}

double log_prior(const DecompTree& tree, std::span<const PriorSpec> priors, const HDParams& params) {
  const double v = params.total_variance;
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::Domain, "total variance must be positive");
  const PriorSpec& pv = prior_for(priors, kTotalVarianceNode);
  double out = 0.0;
  if (pv.family == PriorFamily::Jeffreys) {
    if (std::abs(std::log(v)) > kLogVBound) return kNegInf;
    out += -std::log(v) - std::log(2.0 * kLogVBound);
  } else if (pv.family == PriorFamily::PcVariance) {
    out += pc_variance_logpdf(v, pv.lambda);
  } else {
    throw Error(ErrorKind::Specification, "invalid prior family for the total variance");
  }
  for (int s : tree.splits()) {
    const TreeNode& node = tree.node(s);
    const PriorSpec& p = prior_for(priors, node.name);
    const auto it = params.proportions.find(node.name);
    if (it == params.proportions.end()) {
      throw Error(ErrorKind::Specification, "missing proportions for '" + node.name + "'");
    }
    const Eigen::VectorXd& w = it->second;
    for (Eigen::Index i = 0; i < w.size(); ++i) require_unit_open(w[i], "proportion");
    const bool binary = node.children.size() == 2;
    const double omega = w[node.designated];
    switch (p.family) {
      case PriorFamily::Uniform:
        out += binary ? 0.0 : std::lgamma(static_cast<double>(w.size()));
        break;
      case PriorFamily::Beta:
        out += beta_logpdf(omega, p.a, p.b);
        break;
      case PriorFamily::Dirichlet:
        out += dirichlet_logpdf(w, p.q);
        break;
      case PriorFamily::Pc0:
        out += pc0_simplified_logpdf(omega, p.lambda);
        break;
      case PriorFamily::Pc0Exact:
        out += pc0_exact_logpdf(omega, p.lambda, *p.exact);
        break;
      default:
        throw Error(ErrorKind::Specification, "invalid prior family for '" + node.name + "'");
    }
  }
  return out;
}

double log_prior_unconstrained(const DecompTree& tree, std::span<const PriorSpec> priors,
                               const Eigen::VectorXd& y) {
  const HDParams params = from_unconstrained(tree, y);
  if (!(params.total_variance > 0.0) || !std::isfinite(params.total_variance)) {
    return -std::numeric_limits<double>::infinity();
  }
  for (const auto& [name, w] : params.proportions) {
    if (!(w.minCoeff() > 0.0 && w.maxCoeff() < 1.0)) return -std::numeric_limits<double>::infinity();
  }
  const double lp = log_prior(tree, priors, params);
  if (!std::isfinite(lp)) return lp;
  return lp + log_abs_jacobian(tree, y);
}

HDParams prior_medians(const DecompTree& tree, std::span<const PriorSpec> priors) {
  HDParams out;
  const PriorSpec& pv = prior_for(priors, kTotalVarianceNode);
  out.total_variance =
      pv.family == PriorFamily::PcVariance ? std::pow(std::log(2.0) / pv.lambda, 2) : 1.0;
  for (int s : tree.splits()) {
    const TreeNode& node = tree.node(s);
    const PriorSpec& p = prior_for(priors, node.name);
    const auto k = static_cast<Eigen::Index>(node.children.size());
    Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    if (k == 2) {
      double omega = 0.5;
      if (p.family == PriorFamily::Beta) omega = boost::math::ibeta_inv(p.a, p.b, 0.5);
      if (p.family == PriorFamily::Pc0 || p.family == PriorFamily::Pc0Exact) {
        omega = pc0_quantile(0.5, p.lambda);
      }
      w[node.designated] = omega;
      w[1 - node.designated] = 1.0 - omega;
    }
    out.proportions[node.name] = w;
  }
  return out;
}

double prior_marginal_cdf(const DecompTree& tree, std::span<const PriorSpec> priors,
                          const std::string& node, int component, double value) {
  const PriorSpec& p = prior_for(priors, node);
  if (node == kTotalVarianceNode) {
    if (value <= 0.0) return 0.0;
    if (p.family == PriorFamily::Jeffreys) {
      return std::clamp((std::log(value) + kLogVBound) / (2.0 * kLogVBound), 0.0, 1.0);
    }
    return -std::expm1(-p.lambda * std::sqrt(value));
  }
  const TreeNode& n = tree.node(tree.find(node));
  const int k = static_cast<int>(n.children.size());
  if (component < 0 || component >= k) throw Error(ErrorKind::Dimension, "component out of range");
  if (value <= 0.0) return 0.0;
  if (value >= 1.0) return 1.0;
  const bool designated = component == n.designated;
  auto flip = [&](double c) { return designated ? c : 1.0 - c; };
  const double x = designated || k > 2 ? value : 1.0 - value;
  switch (p.family) {
    case PriorFamily::Uniform:
      return boost::math::ibeta(1.0, k - 1.0, value);
    case PriorFamily::Dirichlet:
      return boost::math::ibeta(p.q, (k - 1) * p.q, value);
    case PriorFamily::Beta:
      return flip(boost::math::ibeta(p.a, p.b, x));
    case PriorFamily::Pc0:
      return flip(pc0_cdf(x, p.lambda));
    default:
      throw Error(ErrorKind::Specification,
                  "no closed-form marginal for prior family '" + std::string(to_string(p.family)) + "'");
  }
}

HDParams sample_prior(const DecompTree& tree, std::span<const PriorSpec> priors, Rng& rng) {
  HDParams out;
  const PriorSpec& pv = prior_for(priors, kTotalVarianceNode);
  if (pv.family == PriorFamily::Jeffreys) {
    out.total_variance = std::exp(-kLogVBound + 2.0 * kLogVBound * uniform01(rng));
  } else {
    const double s = std::exponential_distribution<double>(pv.lambda)(rng);
    out.total_variance = s * s;
  }
  for (int s : tree.splits()) {
    const TreeNode& node = tree.node(s);
    const PriorSpec& p = prior_for(priors, node.name);
    const auto k = static_cast<Eigen::Index>(node.children.size());
    Eigen::VectorXd w(k);
    switch (p.family) {
      case PriorFamily::Uniform:
      case PriorFamily::Dirichlet: {
        const double q = p.family == PriorFamily::Uniform ? 1.0 : p.q;
        for (Eigen::Index i = 0; i < k; ++i) w[i] = gamma_draw(q, rng);
        w /= w.sum();
        break;
      }
      case PriorFamily::Beta: {
        const double g1 = gamma_draw(p.a, rng);
        const double g2 = gamma_draw(p.b, rng);
        w[node.designated] = g1 / (g1 + g2);
        w[1 - node.designated] = g2 / (g1 + g2);
        break;
      }
      case PriorFamily::Pc0: {
        const double omega = pc0_quantile(uniform01(rng), p.lambda);
        w[node.designated] = omega;
        w[1 - node.designated] = 1.0 - omega;
        break;
      }
      default:
        throw Error(ErrorKind::Specification,
                    "cannot sample prior family '" + std::string(to_string(p.family)) + "'");
    }
    out.proportions[node.name] = w;
  }
  return out;
}

}  // namespace hdsdm
