#include "hdsdm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "hdsdm/error.hpp"

namespace hdsdm {

namespace {

constexpr int kInteractionGrid = 100;

std::pair<double, double> range_of(const EffectDecl& e, std::size_t i) {
  if (e.ranges.size() <= i) {
    throw Error(ErrorKind::Specification, "effect '" + e.id + "' lacks a support range");
  }
  const auto r = e.ranges[i];
  if (!(r.first < r.second)) {
    throw Error(ErrorKind::Specification, "effect '" + e.id + "' has an empty support range");
  }
  return r;
}

void require_columns(const EffectDecl& e, std::size_t n) {
  if (e.columns.size() != n) {
    throw Error(ErrorKind::Specification, "effect '" + e.id + "' needs " + std::to_string(n) +
                                              " covariate column(s)");
  }
}

std::string group_of(const EffectDecl& e) { return e.group.empty() ? e.id : e.group; }

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

std::string_view to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::Linear: return "linear";
    case EffectKind::Iid: return "iid";
    case EffectKind::Rw1: return "rw1";
    case EffectKind::Rw2: return "rw2";
    case EffectKind::PSpline: return "pspline";
    case EffectKind::Spatial: return "spatial";
    case EffectKind::Interaction: return "interaction";
  }
  return "unknown";
}

EffectKind effect_kind_from_string(std::string_view name) {
  for (auto k : {EffectKind::Linear, EffectKind::Iid, EffectKind::Rw1, EffectKind::Rw2,
                 EffectKind::PSpline, EffectKind::Spatial, EffectKind::Interaction}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::Specification, "unknown effect kind '" + std::string(name) + "'");
}

bool EffectDecl::operator==(const EffectDecl& o) const {
  const bool clouds = point_cloud.rows() == o.point_cloud.rows() &&
                      point_cloud.cols() == o.point_cloud.cols() &&
                      (point_cloud.size() == 0 || point_cloud == o.point_cloud);
  return id == o.id && kind == o.kind && columns == o.columns && ranges == o.ranges &&
         first_level == o.first_level && last_level == o.last_level &&
         basis_size == o.basis_size && clouds && abiotic == o.abiotic && group == o.group;
}

std::vector<std::string> term_ids(const EffectDecl& decl) {
  if (decl.kind == EffectKind::PSpline) return {decl.id + "_L", decl.id + "_N"};
  return {decl.id};
}

std::vector<EffectTags> default_tags(std::span<const EffectDecl> effects) {
  std::vector<EffectTags> out;
  for (const auto& e : effects) {
    const auto ids = term_ids(e);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out.push_back(EffectTags{ids[i], e.abiotic, e.kind == EffectKind::Interaction, group_of(e),
                               static_cast<int>(i)});
    }
  }
  return out;
}

Eigen::MatrixXd Dataset::matrix(const std::vector<std::string>& names) const {
  Eigen::MatrixXd out(size(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto it = columns.find(names[j]);
    if (it == columns.end()) {
      throw Error(ErrorKind::Specification, "dataset has no column '" + names[j] + "'");
    }
    out.col(static_cast<Eigen::Index>(j)) = it->second;
  }
  return out;
}

Dataset Dataset::subset(bool training) const {
  if (train.empty()) return training ? *this : Dataset{Eigen::VectorXd(0), {}, {}};
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i] == training) rows.push_back(static_cast<Eigen::Index>(i));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Dataset out;
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.y[i] = y[rows[static_cast<std::size_t>(i)]];
  for (const auto& [name, col] : columns) {
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c[i] = col[rows[static_cast<std::size_t>(i)]];
    out.columns[name] = std::move(c);
  }
  out.train.assign(static_cast<std::size_t>(n), training);
  return out;
}

void Dataset::validate() const {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error(ErrorKind::Validation,
                  "response at row " + std::to_string(i) + " is not 0 or 1");
    }
  }
  for (const auto& [name, col] : columns) {
    if (col.size() != y.size()) {
      throw Error(ErrorKind::Dimension, "column '" + name + "' length differs from the response");
    }
    if (!col.allFinite()) throw Error(ErrorKind::Validation, "column '" + name + "' has missing values");
  }
  if (!train.empty() && train.size() != static_cast<std::size_t>(y.size())) {
    throw Error(ErrorKind::Dimension, "training flags length differs from the response");
  }
}

std::vector<ModelTerm> build_terms(std::span<const EffectDecl> effects) {
  std::vector<ModelTerm> out;
  std::set<std::string> ids;
  for (const auto& e : effects) {
    for (const auto& id : term_ids(e)) {
      if (!ids.insert(id).second) throw Error(ErrorKind::Specification, "duplicate effect id '" + id + "'");
    }
    const std::string group = group_of(e);
    switch (e.kind) {
      case EffectKind::Linear: {
        require_columns(e, 1);
        const auto [a, b] = range_of(e, 0);
        auto dist = CovariateDistribution::uniform_interval(a, b);
        const LinearBasis basis{dist.mean(), dist.stddev()};
        out.push_back({standardize(e.id, basis, build_iid(1), dist), e.columns, group, e.ranges});
        break;
      }
      case EffectKind::Iid:
      case EffectKind::Rw1:
      case EffectKind::Rw2: {
        require_columns(e, 1);
        const int k = e.last_level - e.first_level + 1;
        if (k < 1) throw Error(ErrorKind::Specification, "effect '" + e.id + "' has no levels");
        auto dist = CovariateDistribution::uniform_discrete(e.first_level, e.last_level);
        PrecisionStructure p = e.kind == EffectKind::Iid   ? build_iid(k)
                               : e.kind == EffectKind::Rw1 ? build_rw1(k)
                                                           : build_rw2(k);
        out.push_back({standardize(e.id, IndicatorBasis{e.first_level, k}, std::move(p), dist),
                       e.columns, group});
        break;
      }
      case EffectKind::PSpline: {
        require_columns(e, 1);
        const auto [a, b] = range_of(e, 0);
        auto dist = CovariateDistribution::uniform_interval(a, b);
        PSplineSplit split = split_pspline(e.id, BSpline1D{3, e.basis_size, a, b}, dist);
        out.push_back({std::move(split.linear), e.columns, group, e.ranges});
        out.push_back({std::move(split.nonlinear), e.columns, group, e.ranges});
        break;
      }
      case EffectKind::Spatial: {
        require_columns(e, 2);
        const auto [a1, b1] = range_of(e, 0);
        const auto [a2, b2] = range_of(e, 1);
        if (e.point_cloud.rows() == 0 || e.point_cloud.cols() != 2) {
          throw Error(ErrorKind::Specification,
                      "spatial effect '" + e.id + "' needs a two-column point cloud");
        }
        const BSpline2D full = tensor_basis(BSpline1D{3, e.basis_size, a1, b1},
                                            BSpline1D{3, e.basis_size, a2, b2});
        const PrunedBasis pruned = prune_basis(full, e.point_cloud);
        const Eigen::MatrixXd w = lattice_adjacency(pruned.retained, e.basis_size, e.basis_size);
        out.push_back({standardize(e.id, pruned.spec, build_icar(w),
                                   CovariateDistribution::point_cloud(e.point_cloud)),
                       e.columns, group, e.ranges});
        break;
      }
      case EffectKind::Interaction: {
        require_columns(e, 2);
        const auto [a1, b1] = range_of(e, 0);
        const auto [a2, b2] = range_of(e, 1);
        const auto d1 = CovariateDistribution::uniform_interval(a1, b1, kInteractionGrid);
        const auto d2 = CovariateDistribution::uniform_interval(a2, b2, kInteractionGrid);
        Eigen::MatrixXd grid(kInteractionGrid * kInteractionGrid, 2);
        for (int i = 0; i < kInteractionGrid; ++i) {
          for (int j = 0; j < kInteractionGrid; ++j) {
            grid(i * kInteractionGrid + j, 0) = d1.points()(i, 0);
            grid(i * kInteractionGrid + j, 1) = d2.points()(j, 0);
          }
        }
        const ProductLinearBasis basis{{d1.mean(), d1.stddev()}, {d2.mean(), d2.stddev()}};
        out.push_back({standardize(e.id, basis, build_iid(1), CovariateDistribution::point_cloud(grid)),
                       e.columns, group, e.ranges});
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd ModelTerm::design(const Dataset& data) const {
  for (const auto& c : columns) {
    if (!data.has_column(c)) {
      throw Error(ErrorKind::Specification, "effect '" + effect.id() + "' refers to unknown column '" + c + "'");
    }
  }
  const Eigen::MatrixXd x = data.matrix(columns);
  for (std::size_t j = 0; j < support.size() && j < columns.size(); ++j) {
    const auto [lo, hi] = support[j];
    const double slack = 1e-12 * (hi - lo);
    std::vector<Eigen::Index> bad;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, static_cast<Eigen::Index>(j));
      if (!(v >= lo - slack && v <= hi + slack)) bad.push_back(i);
    }
    if (!bad.empty()) {
      std::ostringstream msg;
      msg << "effect '" << effect.id() << "': column '" << columns[j] << "' outside [" << lo << ", " << hi
          << "] at " << bad.size() << " row(s), first row " << bad.front();
      throw Error(ErrorKind::Domain, msg.str());
    }
  }
  return effect.design(x);
}

const ModelTerm& AssembledModel::term(const std::string& id) const {
  for (const auto& t : terms) {
    if (t.effect.id() == id) return t;
  }
  throw Error(ErrorKind::Specification, "model has no effect '" + id + "'");
}

std::vector<std::string> AssembledModel::groups() const {
  std::vector<std::string> out;
  for (const auto& t : terms) {
    if (std::find(out.begin(), out.end(), t.group) == out.end()) out.push_back(t.group);
  }
  return out;
}

Eigen::MatrixXd AssembledModel::design(std::size_t term, const Dataset& data) const {
  return terms.at(term).design(data);
}

namespace {

AssembledModel assemble_terms(const ModelSpec& model) {
  AssembledModel out;
  out.intercept = model.intercept;
  out.terms = build_terms(model.effects);
  const auto tags = default_tags(model.effects);
  if (out.terms.empty()) {
    if (!model.tree.nodes().empty()) {
      throw Error(ErrorKind::Specification, "a tree was given for a model without effects");
    }
    out.priors = model.priors;
    return out;
  }
  out.tree = model.tree.nodes().empty() ? build_default_tree(tags) : model.tree;
  std::set<std::string> leaves(out.tree.leaves().begin(), out.tree.leaves().end());
  std::set<std::string> ids;
  for (const auto& t : out.terms) ids.insert(t.effect.id());
  if (leaves != ids || leaves.size() != out.tree.leaves().size()) {
    throw Error(ErrorKind::Specification,
                "tree leaves must match the model's effect ids exactly once each");
  }
  out.priors = model.priors;
  validate_priors(out.tree, out.priors);
  return out;
}

}  // namespace

AssembledModel assemble(const ModelSpec& model, const Dataset& data) {
  data.validate();
  AssembledModel out = assemble_terms(model);
  const Dataset train = data.subset(true);
  out.y = train.y;
  for (const auto& t : out.terms) out.designs.push_back(t.design(train));
  return out;
}

AssembledModel assemble_prior_only(const ModelSpec& model) {
  AssembledModel out = assemble_terms(model);
  out.y.resize(0);
  for (const auto& t : out.terms) out.designs.emplace_back(0, t.effect.size());
  return out;
}

double bernoulli_logit_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) out += y[i] * eta[i] - softplus(eta[i]);
  return out;
}

Eigen::VectorXd term_variances(const AssembledModel& model, const Eigen::VectorXd& theta) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(model.terms.size()));
  if (model.terms.empty()) return out;
  const auto sigma2 = to_variances(model.tree, from_unconstrained(model.tree, theta));
  for (std::size_t e = 0; e < model.terms.size(); ++e) {
    out[static_cast<Eigen::Index>(e)] = sigma2.at(model.terms[e].effect.id());
  }
  return out;
}

double log_posterior(const AssembledModel& model, const ModelState& state,
                     double likelihood_weight) {
  if (state.coefficients.size() != model.terms.size()) {
    throw Error(ErrorKind::Dimension, "state has the wrong number of coefficient blocks");
  }
  double lp = 0.0;
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(model.y.size(), state.mu);
  if (model.intercept) {
    const double z = state.mu / kInterceptPriorSd;
    lp += -0.5 * z * z - std::log(kInterceptPriorSd * std::sqrt(2.0 * std::numbers::pi));
  } else if (state.mu != 0.0) {
    throw Error(ErrorKind::Validation, "intercept-free model with nonzero mu");
  }
  if (!model.terms.empty()) {
    lp += log_prior_unconstrained(model.tree, model.priors, state.theta);
    if (!std::isfinite(lp)) return lp;
    const Eigen::VectorXd sigma2 = term_variances(model, state.theta);
    for (std::size_t e = 0; e < model.terms.size(); ++e) {
      const auto& u = state.coefficients[e];
      lp += model.terms[e].effect.law().log_density(u, sigma2[static_cast<Eigen::Index>(e)]);
      if (model.y.size() > 0) eta += model.designs[e] * u;
    }
  }
  if (likelihood_weight != 0.0 && model.y.size() > 0) {
    lp += likelihood_weight * bernoulli_logit_loglik(model.y, eta);
  }
  return lp;
}

}  // namespace hdsdm
