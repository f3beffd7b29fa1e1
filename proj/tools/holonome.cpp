#include <iostream>

#include "CLI11.hpp"
#include "holonome/scenario.hpp"

namespace {

int run(const std::string& file, const holonome::RunOptions& options) {
  const holonome::Scenario sc = holonome::load_scenario(file);
  const holonome::RunOutcome outcome = holonome::run_scenario(sc, options);
  const auto& summary = outcome.report.at("summary");
  std::cout << sc.name << ": " << summary.at("tasks").get<int>() << " tasks, " << summary.at("passed").get<int>()
            << " passed, " << summary.at("failed").get<int>() << " failed, " << summary.at("errors").get<int>()
            << " errors\n";
  for (const auto& task : outcome.report.at("tasks")) {
    std::cout << "  [" << task.at("status").get<std::string>() << "] " << task.at("id").get<std::string>();
    if (task.contains("error")) std::cout << ": " << task.at("error").get<std::string>();
    std::cout << '\n';
  }
  std::cout << "report: " << (options.out_dir / "report.json").string() << '\n';
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel transport, holonomy and connection reconstruction"};
  app.require_subcommand(1);

  holonome::RunOptions options;
  std::string run_file;
  std::string out_dir = ".";
  double h = 0.0;
  double tol = 0.0;
  auto* run_cmd = app.add_subcommand("run", "Run every task in a scenario and write report.json");
  run_cmd->set_help_flag("--help", "Print this help message and exit");
  run_cmd->add_option("scenario", run_file, "Scenario JSON file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_flag("--trace-csv", options.trace_csv, "Write per-task transport traces as CSV");
  auto* h_opt = run_cmd->add_option("--h", h, "Override the solver step");
  auto* tol_opt = run_cmd->add_option("--tol", tol, "Override the step-doubling tolerance");

  std::string validate_file;
  auto* validate_cmd = app.add_subcommand("validate", "Load and validate a scenario without running it");
  validate_cmd->add_option("scenario", validate_file, "Scenario JSON file")->required();

  auto* examples_cmd = app.add_subcommand("examples", "List shipped example scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      options.out_dir = out_dir;
      if (*h_opt) options.h = h;
      if (*tol_opt) options.tol = tol;
      return run(run_file, options);
    }
    if (*validate_cmd) {
      const holonome::Scenario sc = holonome::load_scenario(validate_file);
      std::cout << "valid: " << sc.name << " (" << sc.tasks.size() << " tasks, " << sc.paths.size() << " paths, "
                << sc.families.size() << " families)\n";
      return 0;
    }
    if (*examples_cmd) {
      for (const auto& p : holonome::shipped_scenarios()) std::cout << p.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
