#pragma once

#include <string>
#include <vector>

#include "hdsdm/inference.hpp"
#include "hdsdm/model.hpp"
#include "hdsdm_cli/config.hpp"

namespace hdsdm::cli {

/// samples.csv: chain, summary columns, then "coef:<effect>:<k>".
void write_samples(const std::string& path, const AssembledModel& model, const FitResult& result);
std::vector<PosteriorSample> read_samples(const std::string& path, const AssembledModel& model);

void run_fit(const RunConfig& config);
void run_predict(const RunConfig& config);
void run_metrics(const RunConfig& config);
void run_partition(const RunConfig& config);
void run_sensitivity(const RunConfig& config);
void run_prior_check(const RunConfig& config);

/// Dispatches a subcommand by name.
void run_command(const std::string& name, const RunConfig& config);

/// {"error": kind, "message": text}
std::string error_record(const std::string& kind, const std::string& message);

}  // namespace hdsdm::cli
