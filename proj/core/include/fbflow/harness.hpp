#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fbflow/analysis.hpp"
#include "fbflow/integrator.hpp"
#include "fbflow/problem.hpp"

namespace fbflow {

struct AnalysisToggles {
  bool energy = true;
  bool subgradient = true;
  bool velocity = true;
  bool tail_length = true;
  bool limit = true;
  bool rate = false;
  bool lipschitz = true;
  std::size_t lipschitz_pairs = 1000;
  /// When set, the rate fit must classify the run into this regime.
  std::optional<Regime> expected_regime;
};

struct DiscreteConfig {
  std::size_t max_iterations = 1'000'000;
  double agreement_tol = 1e-6;
};

/// One fully validated run: the problem, how to integrate it and which
/// invariant checks to apply.
struct RunConfig {
  std::string name;
  std::string description;
  CompositeProblem problem;
  bool eta_auto = false;
  /// Asserted by the config author; gates the continuous/discrete agreement check.
  bool convex = false;
  IntegratorConfig integrator;
  AnalysisToggles analysis;
  DiscreteConfig discrete;
  bool compare_discrete = false;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
};

/// Parses a YAML run configuration. Errors throw ConfigError whose message
/// starts with "<source>:<line>:<column>: field '<path>': ...".
RunConfig parse_run_config(std::string_view yaml_text, std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Built-in problems (name, YAML text), the same files shipped in configs/.
const std::vector<std::pair<std::string, std::string>>& corpus_sources();
std::vector<RunConfig> corpus();

struct RunOverrides {
  std::optional<double> t_max;
  std::optional<double> stop_residual;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
  bool compare_discrete = false;
};

RunConfig apply_overrides(RunConfig config, const RunOverrides& overrides);

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct DiscreteRun {
  std::vector<Vector> iterates;
  std::vector<double> residuals;
  bool reached_residual = false;
};

struct RunResult {
  Trajectory trajectory;
  std::optional<DiscreteRun> discrete;
  std::vector<CheckResult> checks;
  std::string analysis_json;
  std::string analysis_trace_csv;
  std::string summary;

  bool passed() const;
  std::vector<std::string> failed_checks() const;
  /// 0 iff every enabled check passed, 1 otherwise.
  int exit_code() const { return passed() ? 0 : 1; }
};

/// Integrates, analyses and checks one configuration without touching disk.
RunResult execute(const RunConfig& config);

/// Writes trajectory.csv, analysis.json, analysis_trace.csv, summary.txt (and
/// discrete.csv when present) into config.output_dir.
void write_artifacts(const RunConfig& config, const RunResult& result);

/// execute + write_artifacts; returns the process exit status (0 or 1).
int run(const RunConfig& config, std::ostream& log);

}  // namespace fbflow
