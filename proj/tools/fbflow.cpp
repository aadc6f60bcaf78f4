// Command line front end: run one config or the built-in corpus.
#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fbflow/errors.hpp"
#include "fbflow/harness.hpp"

namespace {

constexpr int kExitChecksFailed = 1;
constexpr int kExitBadInput = 2;

struct Overrides {
  std::optional<double> t_max;
  std::optional<double> stop_residual;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool compare_discrete = false;
};

void add_override_flags(CLI::App& cmd, Overrides& o) {
  cmd.add_flag("--compare-discrete", o.compare_discrete,
               "Also run the discrete forward-backward iteration and compare limits");
  cmd.add_option("--t-max", o.t_max, "Override the integration horizon");
  cmd.add_option("--stop-residual", o.stop_residual, "Override the residual stopping threshold");
  cmd.add_option("--seed", o.seed, "Seed for randomized checks");
}

fbflow::RunOverrides to_run_overrides(const Overrides& o) {
  fbflow::RunOverrides r;
  r.t_max = o.t_max;
  r.stop_residual = o.stop_residual;
  r.seed = o.seed;
  r.compare_discrete = o.compare_discrete;
  if (o.out) r.output_dir = *o.out;
  return r;
}

// Runs one config, capturing everything it prints so parallel corpus runs
// can report in a stable order.
int run_captured(const fbflow::RunConfig& config, std::ostream& log) {
  try {
    return fbflow::run(config, log);
  } catch (const fbflow::ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    log << "run '" << config.name << "' failed: " << e.what() << '\n';
    return kExitChecksFailed;
  }
}

int cmd_run(const std::string& path, const Overrides& o) {
  fbflow::RunConfig config = fbflow::apply_overrides(fbflow::load_run_config(path), to_run_overrides(o));
  return run_captured(config, std::cout);
}

int cmd_corpus(const Overrides& o, std::size_t jobs, bool list, const std::optional<std::string>& dump) {
  if (list) {
    for (const auto& [name, text] : fbflow::corpus_sources()) std::cout << name << '\n';
    return 0;
  }
  if (dump) {
    std::filesystem::create_directories(*dump);
    for (const auto& [name, text] : fbflow::corpus_sources()) {
      std::ofstream(std::filesystem::path(*dump) / (name + ".yaml")) << text;
    }
    return 0;
  }

  fbflow::RunOverrides ro = to_run_overrides(o);
  const std::filesystem::path root = o.out.value_or("out");
  std::vector<fbflow::RunConfig> configs;
  for (fbflow::RunConfig c : fbflow::corpus()) {
    ro.output_dir = root / c.name;
    configs.push_back(fbflow::apply_overrides(std::move(c), ro));
  }

  std::vector<std::string> logs(configs.size());
  std::vector<int> codes(configs.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      std::ostringstream log;
      codes[i] = run_captured(configs[i], log);
      logs[i] = log.str();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < std::max<std::size_t>(jobs, 1); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int status = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::cout << logs[i] << '\n';
    status = std::max(status, codes[i]);
  }
  std::size_t passed = 0;
  for (int c : codes) passed += c == 0 ? 1 : 0;
  std::cout << "corpus: " << passed << "/" << configs.size() << " runs passed\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous forward-backward flow: integrate, analyse and verify"};
  app.require_subcommand(1);

  Overrides run_overrides;
  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "Integrate one configuration file and check it");
  run->add_option("config", config_path, "YAML run configuration")->required();
  add_override_flags(*run, run_overrides);
  run->add_option("--out", run_overrides.out, "Output directory (default from config)");

  Overrides corpus_overrides;
  std::size_t jobs = 1;
  bool list = false;
  std::optional<std::string> dump;
  CLI::App* corpus = app.add_subcommand("corpus", "Run every built-in problem");
  add_override_flags(*corpus, corpus_overrides);
  corpus->add_option("--out", corpus_overrides.out, "Root output directory, one subdirectory per run")
      ->default_str("out");
  corpus->add_option("--jobs,-j", jobs, "Number of problems run concurrently");
  corpus->add_flag("--list", list, "Print the corpus names and exit");
  corpus->add_option("--dump", dump, "Write the corpus YAML files into a directory and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  try {
    if (*run) return cmd_run(config_path, run_overrides);
    return cmd_corpus(corpus_overrides, jobs, list, dump);
  } catch (const fbflow::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitChecksFailed;
  }
}
