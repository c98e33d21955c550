#include "hdsdm_cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "hdsdm/error.hpp"
#include "hdsdm/partition.hpp"
#include "hdsdm/stats.hpp"
#include "hdsdm_cli/csv.hpp"
#include "json.hpp"

#ifndef HDSDM_VERSION
#define HDSDM_VERSION "unknown"
#endif

namespace hdsdm::cli {

using nlohmann::json;

namespace {

std::string out_path(const RunConfig& c, const std::string& file) {
  std::filesystem::create_directories(c.output_dir);
  return (std::filesystem::path(c.output_dir) / file).string();
}

void write_manifest(const RunConfig& c, const std::string& command, json extra) {
  json m{{"command", command},
         {"version", HDSDM_VERSION},
         {"seed", c.mcmc.seed},
         {"config", json::parse(dump_config(c))}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream out(out_path(c, "manifest_" + command + ".json"));
  out << m.dump(2) << '\n';
}

std::string num(double x) { return CsvWriter::number(x); }

struct Loaded {
  Dataset data;
  AssembledModel model;
};

Loaded load(const RunConfig& c) {
  if (c.data.path.empty()) throw Error(ErrorKind::Specification, "config: data.path is required");
  Loaded l;
  l.data = ingest(c.data, resolve_path(c, c.data.path));
  l.model = assemble(build_model_spec(c), l.data);
  return l;
}

double bisect_cdf(const std::function<double(double)>& cdf, double lo, double hi, bool log_scale) {
  for (int i = 0; i < 200; ++i) {
    const double mid = log_scale ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  return log_scale ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
}

void write_trends(CsvWriter& w, const std::string& prefix, const AssembledModel& model,
                  const std::vector<Eigen::VectorXd>& trends) {
  const auto groups = model.groups();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const ModelTerm* first = nullptr;
    for (const auto& t : model.terms) {
      if (t.group == groups[g]) {
        first = &t;
        break;
      }
    }
    const Eigen::MatrixXd& pts = first->effect.dist().points();
    for (Eigen::Index i = 0; i < trends[g].size(); ++i) {
      std::vector<std::string> row;
      if (!prefix.empty()) row.push_back(prefix);
      row.push_back(groups[g]);
      row.push_back(std::to_string(i));
      row.push_back(num(pts(i, 0)));
      row.push_back(pts.cols() > 1 ? num(pts(i, 1)) : "");
      row.push_back(num(trends[g][i]));
      w.row(row);
    }
  }
}

}  // namespace

std::string error_record(const std::string& kind, const std::string& message) {
  return json{{"error", kind}, {"message", message}}.dump();
}

void write_samples(const std::string& path, const AssembledModel& model, const FitResult& result) {
  std::vector<std::string> header{"chain"};
  header.insert(header.end(), result.summary_names.begin(), result.summary_names.end());
  for (const auto& t : model.terms) {
    for (int k = 0; k < t.effect.size(); ++k) header.push_back("coef:" + t.effect.id() + ":" + std::to_string(k));
  }
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < result.samples.size(); ++i) {
    const auto& s = result.samples[i];
    std::vector<std::string> row{std::to_string(s.chain)};
    for (Eigen::Index j = 0; j < result.summary.cols(); ++j) {
      row.push_back(num(result.summary(static_cast<Eigen::Index>(i), j)));
    }
    for (const auto& c : s.coefficients) {
      for (Eigen::Index k = 0; k < c.values.size(); ++k) row.push_back(num(c.values[k]));
    }
    w.row(row);
  }
}

std::vector<PosteriorSample> read_samples(const std::string& path, const AssembledModel& model) {
  const Table t = read_table(path);
  std::vector<PosteriorSample> out;
  const auto names = summary_names(model.tree, model.intercept);
  std::vector<std::size_t> summary_cols;
  for (const auto& n : names) summary_cols.push_back(t.column(n));
  std::vector<std::vector<std::size_t>> coef_cols;
  for (const auto& term : model.terms) {
    std::vector<std::size_t> cols;
    for (int k = 0; k < term.effect.size(); ++k) {
      cols.push_back(t.column("coef:" + term.effect.id() + ":" + std::to_string(k)));
    }
    coef_cols.push_back(std::move(cols));
  }
  const std::size_t chain_col = t.column("chain");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int line = t.lines[r];
    auto value = [&](std::size_t c) { return parse_number(row[c], line, t.header[c]); };
    PosteriorSample s;
    s.chain = static_cast<int>(value(chain_col));
    std::size_t next = 0;
    if (!model.tree.nodes().empty()) {
      s.hd.total_variance = value(summary_cols[next++]);
      for (int split : model.tree.splits()) {
        const TreeNode& n = model.tree.node(split);
        Eigen::VectorXd w(static_cast<Eigen::Index>(n.children.size()));
        if (n.children.size() == 2) {
          const double omega = value(summary_cols[next++]);
          w[n.designated] = omega;
          w[1 - n.designated] = 1.0 - omega;
        } else {
          for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = value(summary_cols[next++]);
        }
        s.hd.proportions[n.name] = w;
      }
    }
    if (model.intercept) s.mu = value(summary_cols[next++]);
    for (std::size_t e = 0; e < model.terms.size(); ++e) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(coef_cols[e].size()));
      for (std::size_t k = 0; k < coef_cols[e].size(); ++k) u[static_cast<Eigen::Index>(k)] = value(coef_cols[e][k]);
      s.coefficients.push_back({model.terms[e].effect.id(), u});
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(ErrorKind::Validation, "'" + path + "' holds no samples");
  return out;
}

void run_fit(const RunConfig& c) {
  const Loaded l = load(c);
  const FitResult result = fit(l.model, c.mcmc);
  write_samples(out_path(c, "samples.csv"), l.model, result);
  {
    CsvWriter w(out_path(c, "rhat.csv"), {"parameter", "rhat", "posterior_mean"});
    for (std::size_t j = 0; j < result.summary_names.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      w.row({result.summary_names[j], num(result.rhat[jj]), num(result.summary.col(jj).mean())});
    }
  }
  json acceptance = json::object();
  for (const auto& [name, rate] : result.acceptance) acceptance[name] = rate;
  write_manifest(c, "fit", {{"training_rows", l.model.y.size()},
                            {"samples", result.samples.size()},
                            {"tree", l.model.tree.to_string()},
                            {"acceptance", acceptance}});
}

void run_predict(const RunConfig& c) {
  const Loaded l = load(c);
  const auto samples = read_samples(out_path(c, "samples.csv"), l.model);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < l.data.size(); ++i) {
    if (l.data.train.empty() || !l.data.train[static_cast<std::size_t>(i)]) rows.push_back(i);
  }
  const Dataset test = l.data.train.empty() ? l.data : l.data.subset(false);
  if (test.size() == 0) throw Error(ErrorKind::Validation, "the split rule leaves no test rows");
  const Eigen::VectorXd p = predict(l.model, samples, test);
  CsvWriter w(out_path(c, "predictions.csv"), {"row", "y", "p_hat"});
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    w.row({std::to_string(rows[static_cast<std::size_t>(i)]), num(test.y[i]), num(p[i])});
  }
  write_manifest(c, "predict", {{"test_rows", test.size()}});
}

void run_metrics(const RunConfig& c) {
  const Table t = read_table(out_path(c, "predictions.csv"));
  const std::size_t yc = t.column("y"), pc = t.column("p_hat");
  Eigen::VectorXd y(static_cast<Eigen::Index>(t.rows.size())), p(y.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = parse_number(t.rows[i][yc], t.lines[i], "y");
    p[static_cast<Eigen::Index>(i)] = parse_number(t.rows[i][pc], t.lines[i], "p_hat");
  }
  const Metrics m = metrics(p, y);
  CsvWriter w(out_path(c, "metrics.csv"), {"metric", "value"});
  w.row({"loglik", num(m.loglik)});
  w.row({"brier", num(m.brier)});
  w.row({"tjur_r2", num(m.tjur_r2)});
  w.row({"accuracy", num(m.accuracy)});
  write_manifest(c, "metrics", {{"rows", y.size()}});
}

void run_partition(const RunConfig& c) {
  const Loaded l = load(c);
  const auto samples = read_samples(out_path(c, "samples.csv"), l.model);
  const PartitionResult r = phi(samples, l.model);
  {
    std::vector<std::string> header{"sample"};
    header.insert(header.end(), r.groups.begin(), r.groups.end());
    CsvWriter w(out_path(c, "phi.csv"), header);
    for (Eigen::Index i = 0; i < r.phi.rows(); ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (Eigen::Index g = 0; g < r.phi.cols(); ++g) row.push_back(num(r.phi(i, g)));
      w.row(row);
    }
  }
  {
    CsvWriter w(out_path(c, "phi_summary.csv"), {"group", "mean_phi", "mean_s2"});
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
      const auto gg = static_cast<Eigen::Index>(g);
      w.row({r.groups[g], num(r.mean_phi[gg]), num(r.mean_s2[gg])});
    }
  }
  CsvWriter w(out_path(c, "trends.csv"), {"group", "index", "x1", "x2", "trend"});
  write_trends(w, "", l.model, mean_trends(samples, l.model));
  write_manifest(c, "partition", {{"samples", samples.size()}, {"skipped_samples", r.skipped}});
}

void run_sensitivity(const RunConfig& c) {
  if (c.data.path.empty()) throw Error(ErrorKind::Specification, "config: data.path is required");
  const Dataset data = ingest(c.data, resolve_path(c, c.data.path));
  const ModelSpec spec = build_model_spec(c);
  const auto points = sensitivity_sweep(spec, data, c.sensitivity.split, c.sensitivity.q_values, c.mcmc);
  const AssembledModel model = assemble(spec, data);
  CsvWriter w(out_path(c, "sensitivity.csv"), {"q", "group", "mean_phi", "mean_s2"});
  CsvWriter tw(out_path(c, "sensitivity_trends.csv"), {"q", "group", "index", "x1", "x2", "trend"});
  json skipped = json::array();
  for (const auto& p : points) {
    for (std::size_t g = 0; g < p.partition.groups.size(); ++g) {
      const auto gg = static_cast<Eigen::Index>(g);
      w.row({num(p.q), p.partition.groups[g], num(p.partition.mean_phi[gg]), num(p.partition.mean_s2[gg])});
    }
    write_trends(tw, num(p.q), model, p.trends);
    skipped.push_back(p.partition.skipped);
  }
  write_manifest(c, "sensitivity", {{"q_values", c.sensitivity.q_values}, {"skipped_samples", skipped}});
}

void run_prior_check(const RunConfig& c) {
  const ModelSpec spec = build_model_spec(c);
  const AssembledModel model = assemble_prior_only(spec);
  if (model.terms.empty()) throw Error(ErrorKind::Specification, "prior-check needs at least one effect");
  McmcSettings settings = c.mcmc;
  settings.likelihood_weight = 0.0;
  const FitResult result = fit(model, settings);

  CsvWriter w(out_path(c, "prior_check.csv"),
              {"node", "component", "samples", "ks_statistic", "p_value", "sample_median", "prior_median"});
  auto check = [&](const std::string& node, int component, const std::vector<double>& values, bool log_scale,
                   double lo, double hi) {
    const auto cdf = [&](double x) { return prior_marginal_cdf(model.tree, model.priors, node, component, x); };
    const KsResult ks = ks_test(values, cdf);
    w.row({node, std::to_string(component), std::to_string(values.size()), num(ks.statistic), num(ks.p_value),
           num(sample_median(values)), num(bisect_cdf(cdf, lo, hi, log_scale))});
  };
  std::vector<double> v;
  for (const auto& s : result.samples) v.push_back(s.hd.total_variance);
  check(kTotalVarianceNode, 0, v, true, 1e-14, 1e14);
  for (int split : model.tree.splits()) {
    const TreeNode& n = model.tree.node(split);
    if (prior_for(model.priors, n.name).family == PriorFamily::Pc0Exact) continue;
    for (int k = 0; k < static_cast<int>(n.children.size()); ++k) {
      if (n.children.size() == 2 && k != n.designated) continue;
      std::vector<double> values;
      for (const auto& s : result.samples) values.push_back(s.hd.proportions.at(n.name)[k]);
      check(n.name, k, values, false, 0.0, 1.0);
    }
  }
  write_manifest(c, "prior-check", {{"samples", result.samples.size()}});
}

void run_command(const std::string& name, const RunConfig& config) {
  static const std::map<std::string, void (*)(const RunConfig&)> commands{
      {"fit", run_fit},           {"predict", run_predict},         {"metrics", run_metrics},
      {"partition", run_partition}, {"sensitivity", run_sensitivity}, {"prior-check", run_prior_check}};
  const auto it = commands.find(name);
  if (it == commands.end()) throw Error(ErrorKind::Specification, "unknown command '" + name + "'");
  it->second(config);
}

}  // namespace hdsdm::cli
