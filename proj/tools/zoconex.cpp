#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "zoconex/diagnostics.hpp"
#include "zoconex/experiment.hpp"
#include "zoconex/types.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Zeroth-order constrained optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  CLI::App* run = app.add_subcommand("run", "Run an experiment and write trace and summary CSVs");
  run->add_option("--config", config_path, "YAML config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--jobs", jobs, "Concurrent trials")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed (overrides ZOCONEX_SEED and the config)");

  std::string experiment;
  CLI::App* gen = app.add_subcommand("gen", "Print the default config of a named experiment");
  gen->add_option("name", experiment, "qcqp-convex, qcqp-nonconvex or smoothing-sweep")
      ->required()
      ->check(CLI::IsMember({"qcqp-convex", "qcqp-nonconvex", "smoothing-sweep"}));

  CLI::App* verify = app.add_subcommand("verify", "Run the invariant and diagnostic checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      zoconex::ExperimentConfig cfg = zoconex::load_config(config_path);
      zoconex::apply_seed_override(cfg, std::getenv("ZOCONEX_SEED"), seed);
      if (!out_dir.empty()) cfg.output = out_dir;
      const zoconex::ExperimentReport report = zoconex::run_experiment(cfg, jobs);
      for (const std::string& f : report.files) std::cout << f << '\n';
      if (report.unsolved_references > 0) {
        std::cerr << "warning: " << report.unsolved_references
                  << " reference solve(s) failed to certify\n";
      }
      return report.exit_code;
    }
    if (*gen) {
      std::cout << zoconex::echo_config(zoconex::default_config(experiment));
      return 0;
    }
    if (*verify) return zoconex::run_verify_suite(std::cout) ? 0 : 1;
  } catch (const zoconex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
