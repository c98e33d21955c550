#include "hdsdm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

#include "hdsdm/error.hpp"
#include "hdsdm/linalg.hpp"
#include "hdsdm/priors.hpp"
#include "hdsdm/stats.hpp"

namespace hdsdm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMinDiagnosticTrials = 100;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double intercept_log_prior(double mu) {
  const double z = mu / kInterceptPriorSd;
  return -0.5 * z * z;
}

// Running mean and covariance of visited states.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
  long count = 0;

  explicit Moments(Eigen::Index dim = 0)
      : mean(Eigen::VectorXd::Zero(dim)), scatter(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(const Eigen::VectorXd& x) {
    ++count;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(count);
    scatter += delta * (x - mean).transpose();
  }
  Eigen::MatrixXd covariance() const { return scatter / static_cast<double>(count - 1); }
};

// Random-walk move with Robbins-Monro scale and Haario covariance adaptation.
struct AdaptiveProposal {
  Eigen::MatrixXd factor;  // dim x r
  double log_scale = 0.0;
  double target = 0.234;
  Moments moments;
  long trials = 0;
  long accepted = 0;
  long post_trials = 0;
  long post_accepted = 0;

  void init(Eigen::MatrixXd f, double tgt) {
    const auto r = static_cast<double>(std::max<Eigen::Index>(f.cols(), 1));
    factor = std::move(f);
    target = tgt;
    log_scale = std::log(2.38 / std::sqrt(r));
    moments = Moments(factor.rows());
  }

  Eigen::VectorXd step(Rng& rng) const {
    return std::exp(log_scale) * (factor * standard_normal(factor.cols(), rng));
  }

  void record(bool accept, bool adapting) {
    ++trials;
    if (accept) ++accepted;
    if (adapting) {
      const double gamma = std::min(0.5, 10.0 / std::pow(static_cast<double>(trials) + 20.0, 0.6));
      log_scale += gamma * ((accept ? 1.0 : 0.0) - target);
    } else {
      ++post_trials;
      if (accept) ++post_accepted;
    }
  }

  double rate() const {
    return post_trials == 0 ? std::numeric_limits<double>::quiet_NaN()
                            : static_cast<double>(post_accepted) / static_cast<double>(post_trials);
  }
};

struct ChainOutput {
  std::vector<PosteriorSample> samples;
  std::vector<std::pair<std::string, double>> acceptance;
};

class Chain {
 public:
  Chain(const AssembledModel& model, const McmcSettings& settings, int index)
      : m_(model), s_(settings), index_(index), rng_(make_stream(settings.seed, static_cast<std::uint64_t>(index))) {
    const auto n = m_.y.size();
    const std::size_t e_count = m_.terms.size();
    if (m_.intercept && n > 0) {
      const double p = std::clamp(m_.y.mean(), 0.01, 0.99);
      mu_ = std::log(p / (1.0 - p));
    }
    z_.resize(e_count);
    g_.resize(e_count);
    zquad_.assign(e_count, 0.0);
    blocks_.resize(e_count);
    for (std::size_t e = 0; e < e_count; ++e) {
      const auto& law = m_.terms[e].effect.law();
      z_[e] = Eigen::VectorXd::Zero(law.size());
      g_[e] = Eigen::VectorXd::Zero(n);
      blocks_[e].init(law.factor(), law.rank() == 1 ? s_.target_block : s_.target_hyper);
    }
    if (e_count > 0) {
      theta_ = to_unconstrained(m_.tree, prior_medians(m_.tree, m_.priors));
      const Eigen::Index d = theta_.size();
      hyper_.init(0.5 * Eigen::MatrixXd::Identity(d, d), s_.target_hyper);
      centered_.init(0.5 * Eigen::MatrixXd::Identity(d, d), s_.target_hyper);
      lp_theta_ = log_prior_unconstrained(m_.tree, m_.priors, theta_);
      sigma_ = term_variances(m_, theta_).array().sqrt();
    }
    mu_move_.init(Eigen::MatrixXd::Constant(1, 1, m_.y.size() > 0 ? 0.1 : kInterceptPriorSd),
                  s_.target_block);
    refresh_eta();
    if (!std::isfinite(lp_theta_) || !std::isfinite(loglik_)) {
      throw Error(ErrorKind::Numerical, "initial state has a non-finite log posterior");
    }
  }

  ChainOutput run() {
    ChainOutput out;
    for (int it = 0; it < s_.iterations; ++it) {
      const bool adapting = it < s_.burn_in;
      if (!m_.terms.empty()) {
        hyper_move(adapting);
        centered_move(adapting);
      }
      if (m_.intercept) mu_move(adapting);
      for (std::size_t e = 0; e < m_.terms.size(); ++e) block_move(e, adapting);

      if (adapting) adapt(it);
      if (!adapting && (it - s_.burn_in) % s_.thin == 0) out.samples.push_back(snapshot());
    }
    const auto rate = [&](const char* name, const AdaptiveProposal& p) {
      out.acceptance.emplace_back(name, p.rate());
    };
    if (!m_.terms.empty()) {
      rate("hyper", hyper_);
      rate("hyper_centered", centered_);
    }
    if (m_.intercept) rate("mu", mu_move_);
    for (std::size_t e = 0; e < m_.terms.size(); ++e) {
      out.acceptance.emplace_back(m_.terms[e].effect.id(), blocks_[e].rate());
    }
    return out;
  }

 private:
  double weighted_loglik(const Eigen::VectorXd& eta) const {
    if (s_.likelihood_weight == 0.0 || m_.y.size() == 0) return 0.0;
    return s_.likelihood_weight * bernoulli_logit_loglik(m_.y, eta);
  }

  void refresh_eta() {
    eta_ = Eigen::VectorXd::Constant(m_.y.size(), mu_);
    for (std::size_t e = 0; e < m_.terms.size(); ++e) {
      z_[e] = m_.terms[e].effect.law().project(z_[e]);
      zquad_[e] = z_[e].dot(m_.terms[e].effect.law().precision() * z_[e]);
      if (m_.y.size() > 0) {
        g_[e] = m_.designs[e] * z_[e];
        eta_ += sigma_[static_cast<Eigen::Index>(e)] * g_[e];
      }
    }
    loglik_ = weighted_loglik(eta_);
  }

  bool accept(double log_ratio) {
    if (!std::isfinite(log_ratio)) return false;
    return log_ratio >= 0.0 || std::log(uniform01(rng_)) < log_ratio;
  }

  void hyper_move(bool adapting) {
    const Eigen::VectorXd prop = theta_ + hyper_.step(rng_);
    const double lp = log_prior_unconstrained(m_.tree, m_.priors, prop);
    bool ok = false;
    if (std::isfinite(lp)) {
      const Eigen::VectorXd sigma = term_variances(m_, prop).array().sqrt();
      Eigen::VectorXd eta = Eigen::VectorXd::Constant(m_.y.size(), mu_);
      if (m_.y.size() > 0) {
        for (std::size_t e = 0; e < m_.terms.size(); ++e) eta += sigma[static_cast<Eigen::Index>(e)] * g_[e];
      }
      const double ll = weighted_loglik(eta);
      ok = accept(ll - loglik_ + lp - lp_theta_);
      if (ok) {
        theta_ = prop;
        sigma_ = sigma;
        eta_ = std::move(eta);
        loglik_ = ll;
        lp_theta_ = lp;
      }
    }
    hyper_.record(ok, adapting);
  }

  // Interweaving step in the centered parametrization: u = sigma z is held
  // fixed, so the likelihood cancels.
  void centered_move(bool adapting) {
    const Eigen::VectorXd prop = theta_ + centered_.step(rng_);
    const double lp = log_prior_unconstrained(m_.tree, m_.priors, prop);
    bool ok = false;
    if (std::isfinite(lp)) {
      const Eigen::VectorXd sigma = term_variances(m_, prop).array().sqrt();
      double log_ratio = lp - lp_theta_;
      for (std::size_t e = 0; e < m_.terms.size(); ++e) {
        const auto i = static_cast<Eigen::Index>(e);
        const double ratio = sigma_[i] / sigma[i];
        const int r = m_.terms[e].effect.law().rank();
        log_ratio += r * std::log(ratio) - 0.5 * zquad_[e] * (ratio * ratio - 1.0);
      }
      ok = accept(log_ratio);
      if (ok) {
        for (std::size_t e = 0; e < m_.terms.size(); ++e) {
          const auto i = static_cast<Eigen::Index>(e);
          const double ratio = sigma_[i] / sigma[i];
          z_[e] *= ratio;
          g_[e] *= ratio;
          zquad_[e] *= ratio * ratio;
        }
        theta_ = prop;
        sigma_ = sigma;
        lp_theta_ = lp;
      }
    }
    centered_.record(ok, adapting);
  }

  void mu_move(bool adapting) {
    const double prop = mu_ + mu_move_.step(rng_)[0];
    const Eigen::VectorXd eta = eta_.array() + (prop - mu_);
    const double ll = weighted_loglik(eta);
    const bool ok = accept(ll - loglik_ + intercept_log_prior(prop) - intercept_log_prior(mu_));
    if (ok) {
      mu_ = prop;
      eta_ = eta;
      loglik_ = ll;
    }
    mu_move_.record(ok, adapting);
  }

  void block_move(std::size_t e, bool adapting) {
    AdaptiveProposal& b = blocks_[e];
    const auto& law = m_.terms[e].effect.law();
    const Eigen::VectorXd prop = z_[e] + b.step(rng_);
    const double quad = prop.dot(law.precision() * prop);
    double ll = loglik_;
    Eigen::VectorXd g, eta;
    if (m_.y.size() > 0) {
      g = m_.designs[e] * prop;
      eta = eta_ + sigma_[static_cast<Eigen::Index>(e)] * (g - g_[e]);
      ll = weighted_loglik(eta);
    }
    const bool ok = accept(ll - loglik_ - 0.5 * (quad - zquad_[e]));
    if (ok) {
      z_[e] = prop;
      zquad_[e] = quad;
      if (m_.y.size() > 0) {
        g_[e] = std::move(g);
        eta_ = std::move(eta);
      }
      loglik_ = ll;
    }
    b.record(ok, adapting);
  }

  void adapt(int it) {
    if (!m_.terms.empty()) {
      hyper_.moments.add(theta_);
      centered_.moments.add(theta_);
    }
    for (std::size_t e = 0; e < m_.terms.size(); ++e) blocks_[e].moments.add(z_[e]);
    if ((it + 1) % s_.adaptation_window != 0) return;

    if (!m_.terms.empty() && hyper_.moments.count > 2 * theta_.size() + 10) {
      const Eigen::Index d = theta_.size();
      const Eigen::MatrixXd cov =
          symmetrize(hyper_.moments.covariance()) + 1e-8 * Eigen::MatrixXd::Identity(d, d);
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() == Eigen::Success) {
        hyper_.factor = llt.matrixL();
        centered_.factor = hyper_.factor;
      }
    }
    for (std::size_t e = 0; e < m_.terms.size(); ++e) {
      AdaptiveProposal& b = blocks_[e];
      const auto& law = m_.terms[e].effect.law();
      if (b.moments.count <= 2 * law.rank() + 10) continue;
      const Eigen::MatrixXd emp = symmetrize(b.moments.covariance());
      const double level = std::max(emp.trace(), 1e-300) / law.covariance().trace();
      const Spectrum sp =
          spectrum_with_rank(emp + 1e-6 * level * law.covariance(), law.rank());
      Eigen::MatrixXd f(law.size(), law.rank());
      Eigen::Index k = 0;
      for (Eigen::Index i = 0; i < sp.values.size(); ++i) {
        if (sp.is_zero(i)) continue;
        f.col(k++) = sp.vectors.col(i) * std::sqrt(std::max(sp.values[i], 0.0));
      }
      b.factor = f;
    }
    refresh_eta();
  }

  PosteriorSample snapshot() const {
    PosteriorSample out;
    out.chain = index_;
    out.mu = mu_;
    if (!m_.terms.empty()) out.hd = from_unconstrained(m_.tree, theta_);
    for (std::size_t e = 0; e < m_.terms.size(); ++e) {
      const auto& effect = m_.terms[e].effect;
      out.coefficients.push_back(
          {effect.id(), effect.law().project(sigma_[static_cast<Eigen::Index>(e)] * z_[e])});
    }
    return out;
  }

  const AssembledModel& m_;
  const McmcSettings& s_;
  int index_;
  Rng rng_;

  Eigen::VectorXd theta_;
  Eigen::VectorXd sigma_;
  double mu_ = 0.0;
  std::vector<Eigen::VectorXd> z_;
  std::vector<Eigen::VectorXd> g_;
  std::vector<double> zquad_;
  Eigen::VectorXd eta_;
  double loglik_ = 0.0;
  double lp_theta_ = 0.0;

  AdaptiveProposal hyper_;
  AdaptiveProposal centered_;
  AdaptiveProposal mu_move_;
  std::vector<AdaptiveProposal> blocks_;
};

}  // namespace

void McmcSettings::validate() const {
  if (chains < 1) throw Error(ErrorKind::Validation, "at least one chain is required");
  if (burn_in < 0 || iterations <= burn_in) {
    throw Error(ErrorKind::Validation, "iterations must exceed burn-in >= 0");
  }
  if (thin < 1) throw Error(ErrorKind::Validation, "thinning must be at least 1");
  if (adaptation_window < 1) throw Error(ErrorKind::Validation, "adaptation window must be positive");
  for (double t : {target_hyper, target_block}) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::Validation, "target acceptance must lie in (0, 1)");
  }
  if (!(likelihood_weight >= 0.0)) throw Error(ErrorKind::Validation, "likelihood weight must be >= 0");
}

std::vector<std::string> summary_names(const DecompTree& tree, bool intercept) {
  std::vector<std::string> out;
  if (!tree.nodes().empty()) {
    out.emplace_back("V");
    for (int s : tree.splits()) {
      const TreeNode& n = tree.node(s);
      if (n.children.size() == 2) {
        out.push_back(n.name);
      } else {
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          out.push_back(n.name + "[" + std::to_string(k) + "]");
        }
      }
    }
  }
  if (intercept) out.emplace_back("mu");
  return out;
}

Eigen::VectorXd summary_row(const DecompTree& tree, const PosteriorSample& s, bool intercept) {
  std::vector<double> row;
  if (!tree.nodes().empty()) {
    row.push_back(s.hd.total_variance);
    for (int i : tree.splits()) {
      const TreeNode& n = tree.node(i);
      const Eigen::VectorXd& w = s.hd.proportions.at(n.name);
      if (n.children.size() == 2) {
        row.push_back(w[n.designated]);
      } else {
        row.insert(row.end(), w.data(), w.data() + w.size());
      }
    }
  }
  if (intercept) row.push_back(s.mu);
  return Eigen::Map<Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
}

FitResult fit(const AssembledModel& model, const McmcSettings& settings) {
  settings.validate();
  std::vector<ChainOutput> outputs(static_cast<std::size_t>(settings.chains));
  auto run_chain = [&](int c) { return Chain(model, settings, c).run(); };
  if (settings.parallel_chains && settings.chains > 1) {
    std::vector<std::future<ChainOutput>> futures;
    for (int c = 0; c < settings.chains; ++c) {
      futures.push_back(std::async(std::launch::async, run_chain, c));
    }
    for (int c = 0; c < settings.chains; ++c) outputs[static_cast<std::size_t>(c)] = futures[static_cast<std::size_t>(c)].get();
  } else {
    for (int c = 0; c < settings.chains; ++c) outputs[static_cast<std::size_t>(c)] = run_chain(c);
  }

  FitResult out;
  out.chains = settings.chains;
  out.summary_names = summary_names(model.tree, model.intercept);
  for (auto& o : outputs) {
    for (auto& s : o.samples) out.samples.push_back(std::move(s));
  }
  const auto per_chain = static_cast<Eigen::Index>(outputs.front().samples.size());
  const auto cols = static_cast<Eigen::Index>(out.summary_names.size());
  out.summary.resize(static_cast<Eigen::Index>(out.samples.size()), cols);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.summary.row(static_cast<Eigen::Index>(i)) =
        summary_row(model.tree, out.samples[i], model.intercept).transpose();
  }
  out.rhat = Eigen::VectorXd::Constant(cols, std::numeric_limits<double>::quiet_NaN());
  if (per_chain >= 4) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      Eigen::MatrixXd draws(settings.chains, per_chain);
      for (int c = 0; c < settings.chains; ++c) {
        draws.row(c) = out.summary.col(j).segment(c * per_chain, per_chain).transpose();
      }
      out.rhat[j] = split_rhat(draws);
    }
  }

  // Average acceptance over chains; a move stuck at 0 or 1 signals failed adaptation.
  const auto& names = outputs.front().acceptance;
  const long post = static_cast<long>(settings.iterations - settings.burn_in);
  for (std::size_t k = 0; k < names.size(); ++k) {
    double sum = 0.0;
    for (const auto& o : outputs) {
      const double r = o.acceptance[k].second;
      if (post >= kMinDiagnosticTrials && (r == 0.0 || r == 1.0)) {
        std::ostringstream msg;
        msg << "move '" << names[k].first << "' has acceptance " << r
            << " after adaptation; the sampler is not mixing";
        throw Error(ErrorKind::Diagnostic, msg.str());
      }
      sum += r;
    }
    out.acceptance.emplace_back(names[k].first, sum / settings.chains);
  }
  return out;
}

Eigen::VectorXd linear_predictor(const AssembledModel& model, const PosteriorSample& sample,
                                 const Dataset& data) {
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(data.size(), sample.mu);
  for (std::size_t e = 0; e < model.terms.size(); ++e) {
    eta += model.design(e, data) * sample.coefficients.at(e).values;
  }
  return eta;
}

Eigen::VectorXd predict(const AssembledModel& model, std::span<const PosteriorSample> samples,
                        const Dataset& data) {
  if (samples.empty()) throw Error(ErrorKind::Validation, "predict needs at least one sample");
  // eta is linear in (mu, u), so its posterior mean uses the mean coefficients.
  const auto n = static_cast<double>(samples.size());
  PosteriorSample mean;
  for (const auto& s : samples) {
    if (s.coefficients.size() != model.terms.size()) {
      throw Error(ErrorKind::Dimension, "sample does not match the model's effects");
    }
    mean.mu += s.mu / n;
  }
  for (std::size_t e = 0; e < model.terms.size(); ++e) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(model.terms[e].effect.size());
    for (const auto& s : samples) u += s.coefficients[e].values / n;
    mean.coefficients.push_back({model.terms[e].effect.id(), u});
  }
  return linear_predictor(model, mean, data).unaryExpr([](double x) { return logistic(x); });
}

Metrics metrics(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& y) {
  if (p_hat.size() != y.size() || y.size() == 0) {
    throw Error(ErrorKind::Dimension, "predictions and responses must be non-empty and equal-length");
  }
  Metrics m;
  double pos_sum = 0.0, neg_sum = 0.0;
  int pos = 0, neg = 0, correct = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = p_hat[i];
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Domain, "prediction outside [0, 1]");
    if (y[i] == 1.0) {
      m.loglik += std::log(p);
      pos_sum += p;
      ++pos;
    } else if (y[i] == 0.0) {
      m.loglik += std::log1p(-p);
      neg_sum += p;
      ++neg;
    } else {
      throw Error(ErrorKind::Validation, "response at row " + std::to_string(i) + " is not 0 or 1");
    }
    m.brier += (p - y[i]) * (p - y[i]);
    if ((p > 0.5 ? 1.0 : 0.0) == y[i]) ++correct;
  }
  if (pos == 0 || neg == 0) {
    throw Error(ErrorKind::Validation, "Tjur R2 is undefined when the test set has one class");
  }
  const auto n = static_cast<double>(y.size());
  m.brier /= n;
  m.tjur_r2 = pos_sum / pos - neg_sum / neg;
  m.accuracy = correct / n;
  return m;
}

}  // namespace hdsdm
