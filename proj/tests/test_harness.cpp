#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include "fbflow/errors.hpp"
#include "fbflow/harness.hpp"

using namespace fbflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fbflow_test_" + name);
  fs::remove_all(dir);
  return dir;
}

const std::string kMinimal = R"(name: tiny
problem:
  x0: [1.0, -1.0]
  eta: 0.1
  f: {type: l1, weight: 0.5}
  g:
    type: quadratic
    A: [[1.0, 0.0], [0.0, 2.0]]
)";

// Expects a ConfigError whose message contains every fragment.
void expect_config_error(const std::string& yaml, std::initializer_list<std::string> fragments) {
  try {
    parse_run_config(yaml, "test.yaml");
    ADD_FAILURE() << "expected ConfigError for:\n" << yaml;
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const auto& f : fragments) EXPECT_NE(msg.find(f), std::string::npos) << msg << " lacks " << f;
  }
}

RunConfig lasso_config() {
  for (RunConfig& c : corpus()) {
    if (c.name == "lasso") return std::move(c);
  }
  throw std::runtime_error("lasso missing from corpus");
}

}  // namespace

TEST(Corpus, AtLeastSixValidProblems) {
  const auto configs = corpus();
  ASSERT_GE(configs.size(), 6u);
  for (const RunConfig& c : configs) {
    EXPECT_TRUE(validate_step(c.problem.eta(), c.problem.beta())) << c.name;
    if (c.eta_auto && c.problem.beta() > 0.0) {
      EXPECT_DOUBLE_EQ(c.problem.eta(), 0.9 * max_valid_eta(c.problem.beta())) << c.name;
    }
  }
  EXPECT_EQ(corpus_sources().size(), configs.size());
}

TEST(Corpus, EveryRunPasses) {
  for (const RunConfig& c : corpus()) {
    const RunResult r = execute(c);
    EXPECT_TRUE(r.passed()) << c.name << ": " << r.summary;
    EXPECT_EQ(r.exit_code(), 0);
  }
}

TEST(Parse, MinimalConfigDefaults) {
  const RunConfig c = parse_run_config(kMinimal, "test.yaml");
  EXPECT_EQ(c.name, "tiny");
  EXPECT_EQ(c.problem.dim(), 2);
  EXPECT_EQ(c.problem.eta(), 0.1);
  EXPECT_FALSE(c.eta_auto);
  EXPECT_EQ(c.integrator.method, Method::adaptive_rk45);
  EXPECT_EQ(c.integrator.stop_residual, 1e-9);
  EXPECT_EQ(c.output_dir, fs::path("out/tiny"));
  EXPECT_TRUE(c.analysis.energy);
  EXPECT_FALSE(c.analysis.rate);
}

TEST(Parse, AutoEtaWithZeroBeta) {
  const RunConfig c = parse_run_config(
      "problem: {x0: [0.5], eta: auto, f: {type: box, lo: 0, hi: 1}, g: {type: linear, b: [1.0]}}\n");
  EXPECT_TRUE(c.eta_auto);
  EXPECT_EQ(c.problem.eta(), 1.0);
}

TEST(Parse, AllTermTypes) {
  for (const char* f : {"{type: zero}", "{type: l1, weight: 1}", "{type: box, lo: [-1, -2], hi: .inf}",
                        "{type: nonnegative}", "{type: l2_squared, weight: 2}", "{type: power, p: 1.5, weight: 1}"}) {
    for (const char* g : {"{type: zero}", "{type: linear, b: 1}", "{type: quadratic, A: [[1, 0], [0, 1]]}",
                          "{type: least_squares, M: [[1, 0], [0, 1], [1, 1]], c: [1, 2, 3]}",
                          "{type: cosine, a: 1, Q: [[1, 0], [0, 1]]}", "{type: quartic, radius: 2}"}) {
      const std::string yaml =
          std::string("problem: {x0: [0.5, 0.5], eta: auto, f: ") + f + ", g: " + g + "}\n";
      EXPECT_NO_THROW(parse_run_config(yaml)) << yaml;
    }
  }
}

TEST(Parse, StepConditionViolationCitesInequality) {
  std::string yaml = kMinimal;
  yaml.replace(yaml.find("eta: 0.1"), 8, "eta: 0.5");
  expect_config_error(yaml, {"test.yaml:4:8", "problem.eta", "eta*beta*(3+eta*beta) < 1"});
}

TEST(Parse, Diagnostics) {
  expect_config_error("problem: [1, 2\n", {"test.yaml:", "syntax error"});
  expect_config_error("- 1\n- 2\n", {"mapping"});
  expect_config_error(kMinimal + "bogus: 1\n", {"test.yaml:9:1", "'bogus'", "unknown field"});
  expect_config_error("name: x\n", {"'problem'", "missing required field"});
  std::string bad_weight = kMinimal;
  bad_weight.replace(bad_weight.find("weight: 0.5"), 11, "weight: lots");
  expect_config_error(bad_weight, {"test.yaml:5:", "problem.f.weight", "expected a number"});
  std::string bad_type = kMinimal;
  bad_type.replace(bad_type.find("type: l1"), 8, "type: l7");
  expect_config_error(bad_type, {"problem.f.type", "unknown prox term 'l7'"});
  std::string bad_matrix = kMinimal;
  bad_matrix.replace(bad_matrix.find("[0.0, 2.0]"), 10, "[0.0]");
  expect_config_error(bad_matrix, {"problem.g.A[1]", "expected 2 columns"});
  std::string asym = kMinimal;
  asym.replace(asym.find("[1.0, 0.0]"), 10, "[1.0, 3.0]");
  expect_config_error(asym, {"problem.g", "not symmetric"});
  expect_config_error(kMinimal + "integrator: {method: leapfrog}\n", {"integrator.method", "leapfrog"});
  expect_config_error(kMinimal + "integrator: {step: -1, method: rk4}\n", {"integrator", "step"});
  expect_config_error(kMinimal + "analysis: {expected_regime: fast}\n", {"analysis.expected_regime"});
  expect_config_error(kMinimal + "analysis: {energy: maybe}\n", {"analysis.energy", "true or false"});
  expect_config_error(kMinimal + "seed: -4\n", {"seed", "nonnegative integer"});
  std::string eta_zero = kMinimal;
  eta_zero.replace(eta_zero.find("eta: 0.1"), 8, "eta: 0.0");
  expect_config_error(eta_zero, {"problem.eta", "positive"});
  std::string short_min = kMinimal + "  known_minimizer: [0]\n";
  expect_config_error(short_min, {"problem.known_minimizer", "expected 2 entries"});
}

TEST(Parse, LoadMissingFile) {
  EXPECT_THROW(load_run_config("/nonexistent/fbflow.yaml"), ConfigError);
}

TEST(Overrides, Apply) {
  RunOverrides o;
  o.t_max = 7.0;
  o.stop_residual = 1e-6;
  o.output_dir = "elsewhere";
  o.seed = 42;
  o.compare_discrete = true;
  const RunConfig c = apply_overrides(parse_run_config(kMinimal), o);
  EXPECT_EQ(c.integrator.t_max, 7.0);
  EXPECT_EQ(c.integrator.stop_residual, 1e-6);
  EXPECT_EQ(c.output_dir, fs::path("elsewhere"));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_TRUE(c.compare_discrete);
  RunOverrides bad;
  bad.t_max = -1.0;
  EXPECT_THROW(apply_overrides(parse_run_config(kMinimal), bad), ConfigError);
}

TEST(Execute, LassoReportsResidual) {
  const RunResult r = execute(lasso_config());
  EXPECT_TRUE(r.passed());
  const auto j = nlohmann::json::parse(r.analysis_json);
  EXPECT_LT(j["limit"]["residual"].get<double>(), 1e-9);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_NE(r.summary.find("all checks passed"), std::string::npos);
}

TEST(Execute, CompareDiscreteAgrees) {
  RunConfig c = lasso_config();
  c.compare_discrete = true;
  const RunResult r = execute(c);
  ASSERT_TRUE(r.discrete);
  EXPECT_TRUE(r.discrete->reached_residual);
  EXPECT_LT((r.discrete->iterates.back() - r.trajectory.states.back()).norm(), 1e-6);
  const auto j = nlohmann::json::parse(r.analysis_json);
  EXPECT_TRUE(j["discrete"]["agreement_checked"].get<bool>());
  EXPECT_TRUE(r.passed());
}

TEST(Execute, FailingCheckGivesExitOne) {
  RunConfig c = lasso_config();
  c.analysis.rate = true;
  c.analysis.expected_regime = Regime::polynomial;
  c.integrator.stop_residual = 1e-11;
  c.output_dir = scratch("failing");
  std::ostringstream log;
  EXPECT_EQ(run(c, log), 1);
  EXPECT_NE(log.str().find("failed invariant: rate_regime"), std::string::npos) << log.str();
}

TEST(Artifacts, WrittenAndDeterministic) {
  RunConfig c = lasso_config();
  c.compare_discrete = true;
  c.output_dir = scratch("artifacts_a");
  std::ostringstream log;
  ASSERT_EQ(run(c, log), 0);
  for (const char* f : {"trajectory.csv", "analysis.json", "analysis_trace.csv", "summary.txt", "discrete.csv"}) {
    EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
  }
  const fs::path first = c.output_dir;
  c.output_dir = scratch("artifacts_b");
  ASSERT_EQ(run(c, log), 0);
  for (const char* f : {"trajectory.csv", "analysis_trace.csv", "discrete.csv", "analysis.json"}) {
    EXPECT_EQ(slurp(first / f), slurp(c.output_dir / f)) << f;
  }
}

#ifdef FBFLOW_CLI_PATH
namespace {

int cli(const std::string& args) {
  const int status = std::system((std::string(FBFLOW_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  ASSERT_EQ(cli("corpus --dump " + (dir / "configs").string()), 0);
  const fs::path lasso = dir / "configs" / "02_lasso.yaml";
  ASSERT_TRUE(fs::exists(lasso));
  EXPECT_EQ(cli("run " + lasso.string() + " --compare-discrete --out " + (dir / "lasso").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "lasso" / "discrete.csv"));

  std::string bad = slurp(lasso);
  bad.replace(bad.find("eta: auto"), 9, "eta: 0.5");
  std::ofstream(dir / "bad.yaml") << bad;
  EXPECT_EQ(cli("run " + (dir / "bad.yaml").string() + " --out " + (dir / "bad").string()), 2);

  std::string failing = slurp(lasso) + "analysis: {rate: true, expected_regime: polynomial}\n";
  std::ofstream(dir / "failing.yaml") << failing;
  EXPECT_EQ(cli("run " + (dir / "failing.yaml").string() + " --stop-residual 1e-11 --out " +
                (dir / "failing").string()),
            1);

  EXPECT_EQ(cli("run"), 2);
  EXPECT_EQ(cli("run " + lasso.string() + " --t-max nope"), 2);
  EXPECT_EQ(cli("corpus --jobs 2 --out " + (dir / "corpus").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "corpus" / "quartic_box" / "analysis.json"));
}
#endif
