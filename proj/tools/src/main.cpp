#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "hdsdm/error.hpp"
#include "hdsdm_cli/commands.hpp"
#include "hdsdm_cli/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical decomposition priors for species distribution models"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool have_seed = false;

  const std::vector<std::pair<std::string, std::string>> verbs{
      {"fit", "Sample the posterior and write samples and R-hat"},
      {"predict", "Posterior-mean predictions for the test rows"},
      {"metrics", "Log-likelihood, Brier score, Tjur R2 and accuracy"},
      {"partition", "Posterior variance partition (phi) and trends"},
      {"sensitivity", "Refit over Dirichlet q values on one split"},
      {"prior-check", "Prior-only sampling with KS tests against prior CDFs"}};
  for (const auto& [name, help] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the MCMC seed")->each([&](const std::string&) { have_seed = true; });
    sub->add_option("--out", out_dir, "Output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  std::string error_dir = out_dir;
  try {
    hdsdm::cli::RunConfig config = hdsdm::cli::load_config(config_path);
    if (have_seed) config.mcmc.seed = seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    error_dir = config.output_dir;
    hdsdm::cli::run_command(command, config);
  } catch (const hdsdm::Error& e) {
    const std::string record = hdsdm::cli::error_record(std::string(hdsdm::to_string(e.kind())), e.what());
    std::cerr << record << '\n';
    if (!error_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(error_dir, ec);
      std::ofstream(std::filesystem::path(error_dir) / "error.json") << record << '\n';
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << hdsdm::cli::error_record("internal", e.what()) << '\n';
    return 1;
  }
  return EXIT_SUCCESS;
}
