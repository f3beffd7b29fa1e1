#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "holonome/holonomy.hpp"
#include "holonome/reconstruction.hpp"

namespace holonome {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

struct TaskSpec {
  std::string type;
  std::string id;
  Json params;  // the task object as written, minus type and id
};

/// A validated scenario: connection, named paths and families, and tasks
/// whose references all resolve.
struct Scenario {
  std::string name;
  std::string source;
  SolverConfig solver;
  std::shared_ptr<const ConnectionForm> connection;
  std::map<std::string, PathSpec> paths;
  std::map<std::string, HomotopyFamily> families;
  std::vector<TaskSpec> tasks;
};

/// SchemaError carries a JSON pointer into the document; ValidationError
/// names the offending field or reference.
Scenario load_scenario(const std::filesystem::path& file);
Scenario parse_scenario(const Json& doc, std::string source = "<memory>");

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool trace_csv = false;
  std::optional<double> h;
  std::optional<double> tol;
  std::string timestamp;  // empty: current UTC time
};

struct RunOutcome {
  int exit_code = 0;  // 0 all pass, 2 some expectation failed, 1 some task errored
  OrderedJson report;
};

/// Runs every task in order and writes report.json (plus traces) to out_dir.
RunOutcome run_scenario(const Scenario& scenario, const RunOptions& options);

/// Scenario files shipped with the sources, sorted by name.
std::vector<std::filesystem::path> shipped_scenarios();

}  // namespace holonome
