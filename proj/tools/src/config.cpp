#include "hdsdm_cli/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hdsdm/error.hpp"
#include "hdsdm_cli/csv.hpp"
#include "json.hpp"

namespace hdsdm::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorKind::Specification, "config: " + what);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

json tree_to_json(const DecompTree::Spec& s) {
  if (s.children.empty()) return s.name;
  json children = json::array();
  for (const auto& c : s.children) children.push_back(tree_to_json(c));
  return {{"name", s.name}, {"children", children}, {"designated", s.designated}};
}

DecompTree::Spec tree_from_json(const json& j) {
  if (j.is_string()) return DecompTree::leaf(j.get<std::string>());
  if (!j.is_object() || !j.contains("name") || !j.contains("children")) {
    bad("tree nodes are leaf names or objects with name and children");
  }
  std::vector<DecompTree::Spec> children;
  for (const auto& c : j.at("children")) children.push_back(tree_from_json(c));
  return DecompTree::split(j.at("name").get<std::string>(), std::move(children),
                           get_or<int>(j, "designated", 0));
}

json effect_to_json(const EffectConfig& e) {
  const EffectDecl& d = e.decl;
  json j{{"id", d.id}, {"kind", std::string(to_string(d.kind))}, {"columns", d.columns},
         {"abiotic", d.abiotic}};
  if (!d.group.empty()) j["group"] = d.group;
  if (!d.ranges.empty()) {
    json r = json::array();
    for (const auto& [a, b] : d.ranges) r.push_back({a, b});
    j["range"] = r;
  }
  switch (d.kind) {
    case EffectKind::Iid:
    case EffectKind::Rw1:
    case EffectKind::Rw2:
      j["levels"] = {d.first_level, d.last_level};
      break;
    case EffectKind::PSpline:
      j["basis_size"] = d.basis_size;
      break;
    case EffectKind::Spatial:
      j["basis_size"] = d.basis_size;
      j["point_cloud"] = e.point_cloud_path;
      break;
    default:
      break;
  }
  return j;
}

EffectConfig effect_from_json(const json& j) {
  EffectConfig e;
  EffectDecl& d = e.decl;
  d.id = get_or<std::string>(j, "id", "");
  if (d.id.empty()) bad("every effect needs an id");
  d.kind = effect_kind_from_string(get_or<std::string>(j, "kind", ""));
  d.columns = get_or<std::vector<std::string>>(j, "columns", {});
  if (d.columns.empty() && j.contains("column")) d.columns = {j.at("column").get<std::string>()};
  if (j.contains("range")) {
    const json& r = j.at("range");
    // a single [a, b] or a list of them
    if (r.size() == 2 && r[0].is_number()) {
      d.ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
    } else {
      for (const auto& p : r) {
        if (p.size() != 2) bad("effect '" + d.id + "': ranges are [lower, upper] pairs");
        d.ranges.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
    }
  }
  if (j.contains("levels")) {
    const auto levels = j.at("levels").get<std::vector<int>>();
    if (levels.size() != 2) bad("effect '" + d.id + "': levels are [first, last]");
    d.first_level = levels[0];
    d.last_level = levels[1];
  }
  d.basis_size = get_or<int>(j, "basis_size", d.basis_size);
  d.abiotic = get_or<bool>(j, "abiotic", d.abiotic);
  d.group = get_or<std::string>(j, "group", "");
  e.point_cloud_path = get_or<std::string>(j, "point_cloud", "");
  return e;
}

json prior_to_json(const PriorConfig& p) {
  const PriorSpec& s = p.spec;
  json j{{"node", s.node}, {"family", std::string(to_string(s.family))}};
  switch (s.family) {
    case PriorFamily::PcVariance:
    case PriorFamily::Pc0:
      j["lambda"] = s.lambda;
      break;
    case PriorFamily::Beta:
      j["a"] = s.a;
      j["b"] = s.b;
      break;
    case PriorFamily::Dirichlet:
      if (p.calibrate_q) {
        j["q"] = "calibrate";
      } else {
        j["q"] = s.q;
      }
      break;
    default:
      break;
  }
  return j;
}

PriorConfig prior_from_json(const json& j) {
  PriorConfig p;
  PriorSpec& s = p.spec;
  s.node = get_or<std::string>(j, "node", "");
  if (s.node.empty()) bad("every prior needs a node");
  s.family = prior_family_from_string(get_or<std::string>(j, "family", ""));
  switch (s.family) {
    case PriorFamily::PcVariance:
      s.lambda = j.contains("lambda") ? j.at("lambda").get<double>()
                                      : pc_variance_lambda(get_or<double>(j, "U", 0.0),
                                                           get_or<double>(j, "alpha", 0.0));
      break;
    case PriorFamily::Pc0:
      s.lambda = j.contains("lambda") ? j.at("lambda").get<double>()
                                      : pc0_calibrate(get_or<double>(j, "U", 0.0),
                                                      get_or<double>(j, "alpha", 0.0));
      break;
    case PriorFamily::Beta:
      s.a = get_or<double>(j, "a", 1.0);
      s.b = get_or<double>(j, "b", 1.0);
      break;
    case PriorFamily::Dirichlet:
      if (j.contains("q") && j.at("q").is_string()) {
        if (j.at("q").get<std::string>() != "calibrate") bad("q must be a number or \"calibrate\"");
        p.calibrate_q = true;
      } else {
        s.q = get_or<double>(j, "q", 1.0);
      }
      break;
    case PriorFamily::Pc0Exact:
      bad("the exact PC0 prior is available for validation only, not in configs");
    default:
      break;
  }
  return p;
}

json mcmc_to_json(const McmcSettings& m) {
  return {{"chains", m.chains},
          {"iterations", m.iterations},
          {"burn_in", m.burn_in},
          {"thin", m.thin},
          {"adaptation_window", m.adaptation_window},
          {"target_hyper", m.target_hyper},
          {"target_block", m.target_block},
          {"seed", m.seed},
          {"likelihood_weight", m.likelihood_weight},
          {"parallel_chains", m.parallel_chains}};
}

McmcSettings mcmc_from_json(const json& j) {
  McmcSettings m;
  m.chains = get_or<int>(j, "chains", m.chains);
  m.iterations = get_or<int>(j, "iterations", m.iterations);
  m.burn_in = get_or<int>(j, "burn_in", m.burn_in);
  m.thin = get_or<int>(j, "thin", m.thin);
  m.adaptation_window = get_or<int>(j, "adaptation_window", m.adaptation_window);
  m.target_hyper = get_or<double>(j, "target_hyper", m.target_hyper);
  m.target_block = get_or<double>(j, "target_block", m.target_block);
  m.seed = get_or<std::uint64_t>(j, "seed", m.seed);
  m.likelihood_weight = get_or<double>(j, "likelihood_weight", m.likelihood_weight);
  m.parallel_chains = get_or<bool>(j, "parallel_chains", m.parallel_chains);
  m.validate();
  return m;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("top level must be an object");
  RunConfig c;
  c.base_dir = base_dir;
  if (j.contains("data")) {
    const json& d = j.at("data");
    c.data.path = get_or<std::string>(d, "path", "");
    c.data.response = get_or<std::string>(d, "response", c.data.response);
    c.data.year = get_or<std::string>(d, "year", "");
    c.data.train_until = get_or<int>(d, "train_until", c.data.train_until);
    const auto delim = get_or<std::string>(d, "delimiter", ",");
    if (delim.size() != 1) bad("delimiter must be a single character");
    c.data.delimiter = delim[0];
  }
  c.intercept = get_or<bool>(j, "intercept", true);
  if (j.contains("effects")) {
    for (const auto& e : j.at("effects")) c.effects.push_back(effect_from_json(e));
  }
  if (j.contains("tree") && !j.at("tree").is_null()) c.tree = tree_from_json(j.at("tree"));
  if (j.contains("priors")) {
    for (const auto& p : j.at("priors")) c.priors.push_back(prior_from_json(p));
  }
  if (j.contains("mcmc")) c.mcmc = mcmc_from_json(j.at("mcmc"));
  if (j.contains("sensitivity")) {
    const json& s = j.at("sensitivity");
    c.sensitivity.split = get_or<std::string>(s, "split", c.sensitivity.split);
    c.sensitivity.q_values = get_or<std::vector<double>>(s, "q_values", c.sensitivity.q_values);
  }
  c.output_dir = get_or<std::string>(j, "output", c.output_dir);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::path(path).parent_path().string());
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["data"] = {{"path", c.data.path},
               {"response", c.data.response},
               {"year", c.data.year},
               {"train_until", c.data.train_until},
               {"delimiter", std::string(1, c.data.delimiter)}};
  j["intercept"] = c.intercept;
  j["effects"] = json::array();
  for (const auto& e : c.effects) j["effects"].push_back(effect_to_json(e));
  j["tree"] = c.tree ? tree_to_json(*c.tree) : json(nullptr);
  j["priors"] = json::array();
  for (const auto& p : c.priors) j["priors"].push_back(prior_to_json(p));
  j["mcmc"] = mcmc_to_json(c.mcmc);
  j["sensitivity"] = {{"split", c.sensitivity.split}, {"q_values", c.sensitivity.q_values}};
  j["output"] = c.output_dir;
  return j.dump(2);
}

std::string resolve_path(const RunConfig& config, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || config.base_dir.empty()) return path;
  return (std::filesystem::path(config.base_dir) / p).string();
}

Dataset ingest(const DataConfig& data, const std::string& path) {
  const Table t = read_table(path, data.delimiter);
  const std::size_t ycol = t.column(data.response);
  if (!data.year.empty()) t.column(data.year);
  Dataset out;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  out.y.resize(n);
  std::vector<std::size_t> numeric;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c != ycol) {
      numeric.push_back(c);
      out.columns[t.header[c]] = Eigen::VectorXd(n);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const int line = t.lines[static_cast<std::size_t>(i)];
    const double y = parse_number(row[ycol], line, data.response);
    if (y != 0.0 && y != 1.0) {
      std::ostringstream msg;
      msg << path << ":" << line << ": response '" << row[ycol] << "' is not 0 or 1";
      throw Error(ErrorKind::Validation, msg.str());
    }
    out.y[i] = y;
    for (std::size_t c : numeric) {
      out.columns[t.header[c]][i] = parse_number(row[c], line, t.header[c]);
    }
  }
  if (!data.year.empty()) {
    const Eigen::VectorXd& year = out.columns.at(data.year);
    for (Eigen::Index i = 0; i < n; ++i) out.train.push_back(year[i] <= data.train_until);
  }
  out.validate();
  return out;
}

Eigen::MatrixXd read_points(const std::string& path, char delimiter) {
  const Table t = read_table(path, delimiter);
  if (t.header.size() != 2) throw Error(ErrorKind::Validation, "'" + path + "' must have two columns");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(t.rows.size()), 2);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          parse_number(t.rows[i][c], t.lines[i], t.header[c]);
    }
  }
  return out;
}

ModelSpec build_model_spec(const RunConfig& config) {
  ModelSpec m;
  m.intercept = config.intercept;
  for (const auto& e : config.effects) {
    EffectDecl d = e.decl;
    if (d.kind == EffectKind::Spatial) {
      if (e.point_cloud_path.empty()) bad("spatial effect '" + d.id + "' needs a point_cloud file");
      d.point_cloud = read_points(resolve_path(config, e.point_cloud_path), config.data.delimiter);
    }
    m.effects.push_back(std::move(d));
  }
  if (config.tree) {
    m.tree = DecompTree(*config.tree);
  } else if (!m.effects.empty()) {
    m.tree = build_default_tree(default_tags(m.effects));
  }
  for (const auto& p : config.priors) {
    PriorSpec s = p.spec;
    if (p.calibrate_q) {
      if (!m.tree.contains(s.node)) bad("prior for unknown split '" + s.node + "'");
      s.q = dirichlet_q_calibrate(static_cast<int>(m.tree.node(m.tree.find(s.node)).children.size()));
    }
    m.priors.push_back(std::move(s));
  }
  return m;
}

}  // namespace hdsdm::cli
