#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hdsdm/hd_tree.hpp"
#include "hdsdm/inference.hpp"
#include "hdsdm/model.hpp"
#include "hdsdm/priors.hpp"

namespace hdsdm::cli {

struct DataConfig {
  std::string path;
  std::string response = "y";
  /// Column holding the year; empty trains on every row.
  std::string year;
  int train_until = 2015;
  char delimiter = ',';
  bool operator==(const DataConfig&) const = default;
};

struct EffectConfig {
  EffectDecl decl;
  /// Two-column file of support points for spatial effects.
  std::string point_cloud_path;
  bool operator==(const EffectConfig&) const = default;
};

struct PriorConfig {
  PriorSpec spec;
  /// Dirichlet q solved from the split's branch count.
  bool calibrate_q = false;
  bool operator==(const PriorConfig&) const = default;
};

struct SensitivityConfig {
  std::string split = "omega_X";
  std::vector<double> q_values{1.0, 0.5, 1.0 / 6.0};
  bool operator==(const SensitivityConfig&) const = default;
};

struct RunConfig {
  DataConfig data;
  bool intercept = true;
  std::vector<EffectConfig> effects;
  std::optional<DecompTree::Spec> tree;
  std::vector<PriorConfig> priors;
  McmcSettings mcmc;
  SensitivityConfig sensitivity;
  std::string output_dir = "out";
  /// Directory relative paths are resolved against.
  std::string base_dir;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text, const std::string& base_dir = {});
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& config);

/// Resolves a path against the config's base directory.
std::string resolve_path(const RunConfig& config, const std::string& path);

/// Reads the data file: binary response, numeric covariates, training flags
/// from the year threshold. Errors carry file line numbers.
Dataset ingest(const DataConfig& data, const std::string& path);

/// Two-column point file.
Eigen::MatrixXd read_points(const std::string& path, char delimiter = ',');

/// Model with point clouds loaded, tree built, and calibrated priors resolved.
ModelSpec build_model_spec(const RunConfig& config);

}  // namespace hdsdm::cli
