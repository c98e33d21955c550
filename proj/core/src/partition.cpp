#include "hdsdm/partition.hpp"

#include <sstream>

#include "hdsdm/error.hpp"
#include "hdsdm/stats.hpp"

namespace hdsdm {

namespace {

std::vector<std::vector<std::size_t>> group_members(const AssembledModel& model,
                                                    const std::vector<std::string>& groups) {
  std::vector<std::vector<std::size_t>> out(groups.size());
  for (std::size_t e = 0; e < model.terms.size(); ++e) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (model.terms[e].group == groups[g]) out[g].push_back(e);
    }
  }
  return out;
}

Eigen::VectorXd group_trend(const AssembledModel& model, const std::vector<std::size_t>& terms,
                            const std::vector<Eigen::VectorXd>& coefficients) {
  Eigen::VectorXd trend;
  for (std::size_t e : terms) {
    const Eigen::VectorXd t = model.terms[e].effect.trend(coefficients[e]);
    if (trend.size() == 0) {
      trend = t;
    } else if (trend.size() == t.size()) {
      trend += t;
    } else {
      throw Error(ErrorKind::Specification,
                  "terms of group '" + model.terms[e].group + "' use different covariate grids");
    }
  }
  return trend;
}

}  // namespace

double finite_pop_variance(const StandardizedEffect& effect, const CoefficientBlock& coeffs) {
  if (coeffs.values.size() != effect.size()) {
    throw Error(ErrorKind::Dimension, "coefficient block does not match effect '" + effect.id() + "'");
  }
  return population_variance(effect.trend(coeffs.values));
}

double group_variance(const AssembledModel& model, const std::vector<std::size_t>& terms,
                      const PosteriorSample& sample) {
  std::vector<Eigen::VectorXd> coefficients;
  for (const auto& c : sample.coefficients) coefficients.push_back(c.values);
  return population_variance(group_trend(model, terms, coefficients));
}

PartitionResult phi(std::span<const PosteriorSample> samples, const AssembledModel& model) {
  PartitionResult out;
  out.groups = model.groups();
  const auto members = group_members(model, out.groups);
  const auto g = static_cast<Eigen::Index>(out.groups.size());
  std::vector<Eigen::VectorXd> s2_rows, phi_rows;
  for (const auto& s : samples) {
    if (s.coefficients.size() != model.terms.size()) {
      throw Error(ErrorKind::Dimension, "sample does not match the model's effects");
    }
    Eigen::VectorXd s2(g);
    for (Eigen::Index j = 0; j < g; ++j) {
      s2[j] = group_variance(model, members[static_cast<std::size_t>(j)], s);
    }
    const double total = s2.sum();
    if (!(total > 0.0)) {
      ++out.skipped;
      continue;
    }
    s2_rows.push_back(s2);
    phi_rows.push_back(s2 / total);
  }
  const auto n = static_cast<Eigen::Index>(s2_rows.size());
  out.s2.resize(n, g);
  out.phi.resize(n, g);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.s2.row(i) = s2_rows[static_cast<std::size_t>(i)].transpose();
    out.phi.row(i) = phi_rows[static_cast<std::size_t>(i)].transpose();
  }
  out.mean_phi = n > 0 ? Eigen::VectorXd(out.phi.colwise().mean().transpose())
                       : Eigen::VectorXd::Zero(g);
  out.mean_s2 = n > 0 ? Eigen::VectorXd(out.s2.colwise().mean().transpose())
                      : Eigen::VectorXd::Zero(g);
  return out;
}

std::vector<Eigen::VectorXd> mean_trends(std::span<const PosteriorSample> samples,
                                         const AssembledModel& model) {
  if (samples.empty()) throw Error(ErrorKind::Validation, "no samples to summarize");
  std::vector<Eigen::VectorXd> mean(model.terms.size());
  for (std::size_t e = 0; e < model.terms.size(); ++e) {
    mean[e] = Eigen::VectorXd::Zero(model.terms[e].effect.size());
    for (const auto& s : samples) mean[e] += s.coefficients.at(e).values;
    mean[e] /= static_cast<double>(samples.size());
  }
  const auto groups = model.groups();
  const auto members = group_members(model, groups);
  std::vector<Eigen::VectorXd> out;
  for (const auto& m : members) {
    Eigen::VectorXd t = group_trend(model, m, mean);
    t.array() -= t.mean();
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<SensitivityPoint> sensitivity_sweep(const ModelSpec& model, const Dataset& data,
                                                const std::string& split,
                                                std::span<const double> q_values,
                                                const McmcSettings& settings) {
  std::vector<SensitivityPoint> out;
  for (double q : q_values) {
    ModelSpec spec = model;
    bool found = false;
    for (auto& p : spec.priors) {
      if (p.node == split) {
        p = PriorSpec::dirichlet(split, q);
        found = true;
      }
    }
    if (!found) spec.priors.push_back(PriorSpec::dirichlet(split, q));
    try {
      const AssembledModel assembled = assemble(spec, data);
      const FitResult result = fit(assembled, settings);
      out.push_back({q, phi(result.samples, assembled), mean_trends(result.samples, assembled)});
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "sensitivity fit with q = " << q << ": " << e.what();
      throw Error(e.kind(), msg.str());
    }
  }
  return out;
}

}  // namespace hdsdm
