#include "fbflow/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "corpus_data.hpp"
#include "fbflow/dynamics.hpp"
#include "fbflow/errors.hpp"
#include "fbflow/prox_catalog.hpp"
#include "fbflow/serialize.hpp"

namespace fbflow {
namespace {

using Json = nlohmann::ordered_json;

// Factor applied to max_valid_eta when the config asks for eta: auto.
constexpr double kAutoEtaFraction = 0.9;

// Walks a YAML document, turning every problem into a located ConfigError.
class Reader {
 public:
  explicit Reader(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const YAML::Node& where, const std::string& path,
                         const std::string& message) const {
    const YAML::Mark mark = where.Mark();
    if (mark.is_null()) {
      throw ConfigError(fmt::format("{}: field '{}': {}", source_, path, message));
    }
    throw ConfigError(fmt::format("{}:{}:{}: field '{}': {}", source_, mark.line + 1,
                                  mark.column + 1, path, message));
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  void allow_keys(const YAML::Node& map, const std::string& path,
                  std::initializer_list<const char*> keys) const {
    if (!map.IsMap()) fail(map, path.empty() ? "<root>" : path, "expected a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        fail(kv.first, join(path, key), "unknown field");
      }
    }
  }

  YAML::Node required(const YAML::Node& map, const std::string& path, const char* key) const {
    const YAML::Node node = map[key];
    if (!node.IsDefined() || node.IsNull()) fail(map, join(path, key), "missing required field");
    return node;
  }

  double to_double(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, path, "expected a number, got '" + node.Scalar() + "'");
    }
  }

  double number(const YAML::Node& map, const std::string& path, const char* key,
                std::optional<double> fallback = std::nullopt) const {
    const YAML::Node node = map[key];
    if (!node.IsDefined() || node.IsNull()) {
      if (fallback) return *fallback;
      fail(map, join(path, key), "missing required field");
    }
    return to_double(node, join(path, key));
  }

  bool boolean(const YAML::Node& map, const std::string& path, const char* key,
               bool fallback) const {
    const YAML::Node node = map[key];
    if (!node.IsDefined() || node.IsNull()) return fallback;
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, join(path, key), "expected true or false");
    }
  }

  std::string text(const YAML::Node& map, const std::string& path, const char* key,
                   std::optional<std::string> fallback = std::nullopt) const {
    const YAML::Node node = map[key];
    if (!node.IsDefined() || node.IsNull()) {
      if (fallback) return *fallback;
      fail(map, join(path, key), "missing required field");
    }
    if (!node.IsScalar()) fail(node, join(path, key), "expected a string");
    return node.Scalar();
  }

  std::uint64_t unsigned_integer(const YAML::Node& map, const std::string& path, const char* key,
                                 std::uint64_t fallback) const {
    const YAML::Node node = map[key];
    if (!node.IsDefined() || node.IsNull()) return fallback;
    try {
      return node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(node, join(path, key), "expected a nonnegative integer");
    }
  }

  // A list of numbers, or a single number broadcast to dim entries.
  Vector vector(const YAML::Node& map, const std::string& path, const char* key,
                Eigen::Index dim) const {
    const YAML::Node node = required(map, path, key);
    const std::string p = join(path, key);
    if (node.IsScalar()) return Vector::Constant(dim, to_double(node, p));
    Vector v = list(node, p);
    if (v.size() != dim) {
      fail(node, p, fmt::format("expected {} entries, got {}", dim, v.size()));
    }
    return v;
  }

  Vector list(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence() || node.size() == 0) fail(node, path, "expected a non-empty list of numbers");
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = to_double(node[i], fmt::format("{}[{}]", path, i));
    }
    return v;
  }

  Matrix matrix(const YAML::Node& map, const std::string& path, const char* key,
                Eigen::Index rows, Eigen::Index cols) const {
    const YAML::Node node = required(map, path, key);
    const std::string p = join(path, key);
    if (!node.IsSequence()) fail(node, p, "expected a list of rows");
    if (rows >= 0 && static_cast<Eigen::Index>(node.size()) != rows) {
      fail(node, p, fmt::format("expected {} rows, got {}", rows, node.size()));
    }
    Matrix m(static_cast<Eigen::Index>(node.size()), cols);
    for (std::size_t r = 0; r < node.size(); ++r) {
      const std::string rp = fmt::format("{}[{}]", p, r);
      const Vector row = list(node[r], rp);
      if (row.size() != cols) fail(node[r], rp, fmt::format("expected {} columns, got {}", cols, row.size()));
      m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
  }

 private:
  std::string source_;
};

ProxTerm parse_prox_term(const Reader& rd, const YAML::Node& node, const std::string& path,
                         Eigen::Index dim) {
  if (!node.IsMap()) rd.fail(node, path, "expected a mapping with a 'type' field");
  const std::string type = rd.text(node, path, "type");
  try {
    if (type == "zero") {
      rd.allow_keys(node, path, {"type"});
      return zero_term(dim);
    }
    if (type == "l1") {
      rd.allow_keys(node, path, {"type", "weight"});
      return l1_term(dim, rd.number(node, path, "weight"));
    }
    if (type == "box") {
      rd.allow_keys(node, path, {"type", "lo", "hi"});
      return box_term(rd.vector(node, path, "lo", dim), rd.vector(node, path, "hi", dim));
    }
    if (type == "nonnegative") {
      rd.allow_keys(node, path, {"type"});
      return box_term(Vector::Zero(dim), Vector::Constant(dim, std::numeric_limits<double>::infinity()));
    }
    if (type == "l2_squared") {
      rd.allow_keys(node, path, {"type", "weight"});
      return l2_squared_term(dim, rd.number(node, path, "weight"));
    }
    if (type == "power") {
      rd.allow_keys(node, path, {"type", "p", "weight"});
      return power_term(dim, rd.number(node, path, "p"), rd.number(node, path, "weight"));
    }
  } catch (const InvalidParameter& e) {
    rd.fail(node, path, e.what());
  }
  rd.fail(node["type"], Reader::join(path, "type"),
          "unknown prox term '" + type + "' (expected zero, l1, box, nonnegative, l2_squared, power)");
}

SmoothTerm parse_smooth_term(const Reader& rd, const YAML::Node& node, const std::string& path,
                             Eigen::Index dim) {
  if (!node.IsMap()) rd.fail(node, path, "expected a mapping with a 'type' field");
  const std::string type = rd.text(node, path, "type");
  try {
    if (type == "zero") {
      rd.allow_keys(node, path, {"type"});
      return smooth_zero(dim);
    }
    if (type == "linear") {
      rd.allow_keys(node, path, {"type", "b"});
      return smooth_linear(rd.vector(node, path, "b", dim));
    }
    if (type == "quadratic") {
      rd.allow_keys(node, path, {"type", "A", "b"});
      const Matrix a = rd.matrix(node, path, "A", dim, dim);
      const Vector b = node["b"].IsDefined() ? rd.vector(node, path, "b", dim) : Vector::Zero(dim);
      return smooth_quadratic(a, b);
    }
    if (type == "least_squares") {
      rd.allow_keys(node, path, {"type", "M", "c"});
      const Matrix m = rd.matrix(node, path, "M", -1, dim);
      return smooth_least_squares(m, rd.vector(node, path, "c", m.rows()));
    }
    if (type == "cosine") {
      rd.allow_keys(node, path, {"type", "a", "Q"});
      return smooth_nonconvex_cosine(rd.number(node, path, "a"), rd.matrix(node, path, "Q", dim, dim));
    }
    if (type == "quartic") {
      rd.allow_keys(node, path, {"type", "radius"});
      return smooth_quartic(dim, rd.number(node, path, "radius"));
    }
  } catch (const InvalidParameter& e) {
    rd.fail(node, path, e.what());
  }
  rd.fail(node["type"], Reader::join(path, "type"),
          "unknown smooth term '" + type +
              "' (expected zero, linear, quadratic, least_squares, cosine, quartic)");
}

}  // namespace

RunConfig parse_run_config(std::string_view yaml_text, std::string_view source) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}:{}: syntax error: {}", source, e.mark.line + 1,
                                  e.mark.column + 1, e.msg));
  }
  if (!root.IsMap()) throw ConfigError(fmt::format("{}: expected a mapping at top level", source));
  rd.allow_keys(root, "", {"name", "description", "problem", "integrator", "analysis", "discrete",
                           "seed", "output"});

  const YAML::Node pnode = rd.required(root, "", "problem");
  rd.allow_keys(pnode, "problem", {"x0", "eta", "f", "g", "coercive", "convex", "known_minimizer"});
  const Vector x0 = rd.list(rd.required(pnode, "problem", "x0"), "problem.x0");
  const Eigen::Index dim = x0.size();
  ProxTerm f = parse_prox_term(rd, rd.required(pnode, "problem", "f"), "problem.f", dim);
  SmoothTerm g = parse_smooth_term(rd, rd.required(pnode, "problem", "g"), "problem.g", dim);

  const YAML::Node eta_node = rd.required(pnode, "problem", "eta");
  const double beta = g.lipschitz_beta();
  bool eta_auto = false;
  double eta = 0.0;
  if (eta_node.IsScalar() && eta_node.Scalar() == "auto") {
    eta_auto = true;
    const double bound = max_valid_eta(beta);
    eta = bound == kUnboundedEta ? 1.0 : kAutoEtaFraction * bound;
  } else {
    eta = rd.to_double(eta_node, "problem.eta");
    if (!(eta > 0.0) || !std::isfinite(eta)) rd.fail(eta_node, "problem.eta", "eta must be positive");
    if (!validate_step(eta, beta)) {
      rd.fail(eta_node, "problem.eta",
              fmt::format("step condition eta*beta*(3+eta*beta) < 1 violated: eta = {}, beta = {}, "
                          "eta*beta*(3+eta*beta) = {} (largest admissible eta is {})",
                          eta, beta, eta * beta * (3.0 + eta * beta), max_valid_eta(beta)));
    }
  }
  std::optional<Vector> known;
  if (pnode["known_minimizer"].IsDefined()) {
    known = rd.vector(pnode, "problem", "known_minimizer", dim);
  }
  const bool coercive = rd.boolean(pnode, "problem", "coercive", false);

  RunConfig cfg{
      .name = rd.text(root, "", "name", std::string(source)),
      .description = rd.text(root, "", "description", std::string()),
      .problem = [&] {
        try {
          return CompositeProblem(std::move(f), std::move(g), eta, x0, coercive, known);
        } catch (const InvalidParameter& e) {
          rd.fail(pnode, "problem", e.what());
        }
      }(),
      .eta_auto = eta_auto,
      .convex = rd.boolean(pnode, "problem", "convex", false),
      .integrator = {},
      .analysis = {},
      .discrete = {},
      .compare_discrete = false,
      .output_dir = {},
      .seed = 0,
  };

  if (const YAML::Node in = root["integrator"]; in.IsDefined() && !in.IsNull()) {
    rd.allow_keys(in, "integrator",
                  {"method", "step", "abs_tol", "rel_tol", "t_max", "stop_residual", "max_samples"});
    IntegratorConfig& ic = cfg.integrator;
    if (in["method"].IsDefined()) {
      try {
        ic.method = parse_method(rd.text(in, "integrator", "method"));
      } catch (const InvalidConfig& e) {
        rd.fail(in["method"], "integrator.method", e.what());
      }
    }
    ic.step = rd.number(in, "integrator", "step", ic.step);
    ic.abs_tol = rd.number(in, "integrator", "abs_tol", ic.abs_tol);
    ic.rel_tol = rd.number(in, "integrator", "rel_tol", ic.rel_tol);
    ic.t_max = rd.number(in, "integrator", "t_max", ic.t_max);
    ic.stop_residual = rd.number(in, "integrator", "stop_residual", ic.stop_residual);
    ic.max_samples = rd.unsigned_integer(in, "integrator", "max_samples", ic.max_samples);
    try {
      check_config(cfg.problem, ic);
    } catch (const InvalidConfig& e) {
      rd.fail(in, "integrator", e.what());
    }
  }

  if (const YAML::Node an = root["analysis"]; an.IsDefined() && !an.IsNull()) {
    rd.allow_keys(an, "analysis", {"energy", "subgradient", "velocity", "tail_length", "limit",
                                   "rate", "lipschitz", "lipschitz_pairs", "expected_regime"});
    AnalysisToggles& at = cfg.analysis;
    at.energy = rd.boolean(an, "analysis", "energy", at.energy);
    at.subgradient = rd.boolean(an, "analysis", "subgradient", at.subgradient);
    at.velocity = rd.boolean(an, "analysis", "velocity", at.velocity);
    at.tail_length = rd.boolean(an, "analysis", "tail_length", at.tail_length);
    at.limit = rd.boolean(an, "analysis", "limit", at.limit);
    at.rate = rd.boolean(an, "analysis", "rate", at.rate);
    at.lipschitz = rd.boolean(an, "analysis", "lipschitz", at.lipschitz);
    at.lipschitz_pairs = rd.unsigned_integer(an, "analysis", "lipschitz_pairs", at.lipschitz_pairs);
    if (an["expected_regime"].IsDefined()) {
      try {
        at.expected_regime = parse_regime(rd.text(an, "analysis", "expected_regime"));
      } catch (const InvalidParameter& e) {
        rd.fail(an["expected_regime"], "analysis.expected_regime", e.what());
      }
    }
  }

  if (const YAML::Node dn = root["discrete"]; dn.IsDefined() && !dn.IsNull()) {
    rd.allow_keys(dn, "discrete", {"max_iterations", "agreement_tol"});
    cfg.discrete.max_iterations =
        rd.unsigned_integer(dn, "discrete", "max_iterations", cfg.discrete.max_iterations);
    cfg.discrete.agreement_tol = rd.number(dn, "discrete", "agreement_tol", cfg.discrete.agreement_tol);
  }

  cfg.seed = rd.unsigned_integer(root, "", "seed", 0);
  cfg.output_dir = rd.text(root, "", "output", "out/" + cfg.name);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string());
}

const std::vector<std::pair<std::string, std::string>>& corpus_sources() {
  return detail::embedded_corpus();
}

std::vector<RunConfig> corpus() {
  std::vector<RunConfig> out;
  for (const auto& [name, text] : corpus_sources()) {
    out.push_back(parse_run_config(text, "configs/" + name + ".yaml"));
  }
  return out;
}

RunConfig apply_overrides(RunConfig config, const RunOverrides& overrides) {
  if (overrides.t_max) config.integrator.t_max = *overrides.t_max;
  if (overrides.stop_residual) config.integrator.stop_residual = *overrides.stop_residual;
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.compare_discrete) config.compare_discrete = true;
  try {
    check_config(config.problem, config.integrator);
  } catch (const InvalidConfig& e) {
    throw ConfigError(std::string("command line override: ") + e.what());
  }
  return config;
}

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::vector<std::string> RunResult::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.name + ": " + c.detail);
  }
  return out;
}

namespace {

Json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

template <typename Seq>
bool nonincreasing(const Seq& values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1]) return false;
  }
  return true;
}

DiscreteRun run_discrete(const RunConfig& config) {
  const CompositeProblem& problem = config.problem;
  DiscreteRun d;
  Vector x = problem.x0();
  Vector v = field(problem, x);
  d.iterates.push_back(x);
  d.residuals.push_back(v.norm());
  for (std::size_t k = 0; k < config.discrete.max_iterations; ++k) {
    if (d.residuals.back() <= config.integrator.stop_residual) {
      d.reached_residual = true;
      break;
    }
    x = x + v;  // identical to fb_iterate(problem, x, 1)
    v = field(problem, x);
    d.iterates.push_back(x);
    d.residuals.push_back(v.norm());
  }
  if (d.residuals.back() <= config.integrator.stop_residual) d.reached_residual = true;
  return d;
}

}  // namespace

RunResult execute(const RunConfig& config) {
  const CompositeProblem& problem = config.problem;
  const AnalysisToggles& toggles = config.analysis;
  RunResult result;
  auto check = [&](std::string name, bool passed, std::string detail) {
    result.checks.push_back({std::move(name), passed, std::move(detail)});
  };

  Json report;
  report["name"] = config.name;
  report["description"] = config.description;
  report["problem"] = {
      {"f", problem.f().name()},
      {"g", problem.g().name()},
      {"dim", problem.dim()},
      {"eta", problem.eta()},
      {"eta_auto", config.eta_auto},
      {"beta", problem.beta()},
      {"step_condition", problem.eta() * problem.beta() * (3.0 + problem.eta() * problem.beta())},
      {"coercive", problem.coercive()},
      {"convex", config.convex},
      {"x0", vec_json(problem.x0())},
  };
  check("step_condition", validate_step(problem.eta(), problem.beta()),
        "eta*beta*(3+eta*beta) < 1");

  std::mt19937_64 rng(config.seed);
  if (toggles.lipschitz) {
    const double grad = sampled_gradient_lipschitz(problem.g(), rng, toggles.lipschitz_pairs);
    const double flow = sampled_field_lipschitz(problem, rng, toggles.lipschitz_pairs);
    const double flow_bound = 2.0 + problem.eta() * problem.beta();
    report["lipschitz"] = {{"pairs", toggles.lipschitz_pairs},
                           {"gradient_max_ratio", grad},
                           {"beta", problem.beta()},
                           {"field_max_ratio", flow},
                           {"field_bound", flow_bound}};
    check("gradient_lipschitz", grad <= problem.beta() * (1.0 + 1e-10) + 1e-300,
          fmt::format("max sampled ratio {} vs beta {}", grad, problem.beta()));
    check("field_lipschitz", flow <= flow_bound * (1.0 + 1e-9),
          fmt::format("max sampled ratio {} vs 2+eta*beta = {}", flow, flow_bound));
  }
  if (problem.known_minimizer()) {
    const double r = criticality_residual(problem, *problem.known_minimizer());
    report["known_minimizer_residual"] = r;
    check("known_minimizer_fixed_point", r <= kCriticalityTol,
          fmt::format("|field(x*)| = {}", r));
  }

  result.trajectory = integrate(problem, config.integrator);
  const Trajectory& traj = result.trajectory;
  {
    Json tj = Json::parse(trajectory_summary_json(problem, traj));
    tj["method"] = std::string(to_string(config.integrator.method));
    tj["field_evaluations"] = traj.field_evaluations;
    tj["rejected_steps"] = traj.rejected_steps;
    tj["warnings"] = traj.warnings;
    report["trajectory"] = std::move(tj);
  }
  const double tol = config.integrator.method == Method::adaptive_rk45
                         ? std::max(config.integrator.abs_tol, config.integrator.rel_tol)
                         : 0.0;

  if (toggles.energy) {
    const EnergyTrace et = energy_trace(problem, traj, tol);
    Json violations = Json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(et.violations.size(), 10); ++i) {
      violations.push_back({{"t", et.violations[i].t}, {"magnitude", et.violations[i].magnitude}});
    }
    report["energy"] = {{"dissipation_constant", et.dissipation_constant},
                        {"slack", et.slack},
                        {"initial", et.samples.front().energy},
                        {"final", et.samples.back().energy},
                        {"violation_count", et.violations.size()},
                        {"violations", violations}};
    check("energy_dissipation", et.violations.empty(),
          fmt::format("{} interval(s) violate the dissipation inequality", et.violations.size()));
  }
  if (toggles.subgradient) {
    const SubgradientCheck sc = subgradient_check(problem, traj);
    report["subgradient"] = {{"samples", sc.samples},
                             {"violations", sc.violations},
                             {"max_ratio", sc.max_ratio}};
    check("subgradient_bound", sc.violations == 0,
          fmt::format("{} of {} samples exceed (beta+1/eta)|xdot|", sc.violations, sc.samples));
  }
  if (toggles.velocity) {
    const VelocityDecay vd = velocity_decay(traj);
    const bool monotone = nonincreasing(vd.sup_tail) && nonincreasing(vd.l2_tail);
    report["velocity"] = {{"initial_speed", vd.sup_tail.front()},
                          {"final_sup_tail", vd.sup_tail.back()},
                          {"total_l2", vd.total_l2()},
                          {"monotone", monotone}};
    check("velocity_tails_nonincreasing", monotone, "tail sup / tail L2 mass");
    if (traj.terminated_by == Termination::residual) {
      check("final_speed_below_stop", vd.sup_tail.back() <= config.integrator.stop_residual,
            fmt::format("final |xdot| = {}", vd.sup_tail.back()));
    }
  }
  std::optional<TailLength> sigma;
  if (toggles.tail_length) {
    sigma = tail_length(traj);
    report["tail_length"] = {{"sigma0", sigma->sigma.front()},
                             {"distance0", sigma->distance_to_end.front()},
                             {"violations", sigma->violations}};
    check("trajectory_length_bound", sigma->bound_holds(),
          fmt::format("{} sample(s) with |x(t)-x(T)| > sigma(t) + slack", sigma->violations));
  }
  if (toggles.limit) {
    const LimitReport lr = limit_report(problem, traj);
    report["limit"] = {{"final_state", vec_json(lr.final_state)},
                       {"final_time", lr.final_time},
                       {"residual", lr.residual},
                       {"critical", lr.critical},
                       {"objective", lr.objective},
                       {"energy_gap", lr.energy_gap},
                       {"energy_gap_bound", lr.energy_gap_bound},
                       {"max_state_norm", lr.max_state_norm},
                       {"initial_energy", lr.initial_energy},
                       {"max_sublevel_excess", lr.max_sublevel_excess},
                       {"coercive", lr.coercive}};
    if (traj.terminated_by == Termination::residual) {
      check("limit_critical", lr.residual <= config.integrator.stop_residual,
            fmt::format("|field(x_T)| = {}", lr.residual));
    }
    check("energy_gap_bound", lr.energy_gap_bound_holds,
          fmt::format("H(xdot+x,x)-(f+g)(x) = {} vs bound {}", lr.energy_gap, lr.energy_gap_bound));
    if (lr.coercive) {
      check("bounded_sublevel", lr.sublevel_bound_holds,
            fmt::format("max (f+g)(xdot+x) - H(0) = {}", lr.max_sublevel_excess));
    }
  }
  if (toggles.rate) {
    const Vector limit = problem.known_minimizer().value_or(traj.states.back());
    try {
      const RateFit rf = fit_rate(problem, traj, limit);
      report["rate"] = {{"theta", rf.theta},
                        {"theta_r_squared", rf.theta_r_squared},
                        {"C", rf.C},
                        {"regime", std::string(to_string(rf.regime))},
                        {"note", rf.note},
                        {"a", rf.a},
                        {"b", rf.b},
                        {"r_squared_exponential", rf.r_squared_exponential},
                        {"c", rf.c},
                        {"d", rf.d},
                        {"power_exponent", rf.power_exponent},
                        {"r_squared_polynomial", rf.r_squared_polynomial},
                        {"r_squared", rf.r_squared},
                        {"window", {rf.window_begin, rf.window_end}},
                        {"window_samples", rf.window_samples}};
      if (toggles.expected_regime) {
        check("rate_regime", rf.regime == *toggles.expected_regime,
              fmt::format("classified {} (theta = {}), expected {}", to_string(rf.regime), rf.theta,
                          to_string(*toggles.expected_regime)));
      }
    } catch (const AnalysisError& e) {
      report["rate"] = {{"error", e.what()}};
      if (toggles.expected_regime) check("rate_regime", false, e.what());
    }
  }

  if (config.compare_discrete) {
    result.discrete = run_discrete(config);
    const DiscreteRun& d = *result.discrete;
    const double gap = (d.iterates.back() - traj.states.back()).norm();
    const bool both_converged =
        d.reached_residual && traj.terminated_by == Termination::residual;
    report["discrete"] = {{"iterations", d.iterates.size() - 1},
                          {"final_state", vec_json(d.iterates.back())},
                          {"final_residual", d.residuals.back()},
                          {"reached_residual", d.reached_residual},
                          {"objective", objective(problem, d.iterates.back())},
                          {"distance_to_continuous_limit", gap},
                          {"agreement_checked", config.convex && both_converged}};
    if (config.convex && both_converged) {
      check("discrete_agreement", gap <= config.discrete.agreement_tol,
            fmt::format("|x_FB - x(T)| = {}", gap));
    }
  }

  Json checks = Json::array();
  for (const auto& c : result.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  report["checks"] = std::move(checks);
  report["passed"] = result.passed();
  result.analysis_json = report.dump(2) + "\n";

  if (sigma) {
    std::ostringstream trace;
    write_analysis_trace_csv(trace, problem, traj, *sigma,
                             problem.known_minimizer().value_or(traj.states.back()));
    result.analysis_trace_csv = trace.str();
  }

  std::string s;
  s += fmt::format("run: {}\n", config.name);
  if (!config.description.empty()) s += fmt::format("  {}\n", config.description);
  s += fmt::format("problem: f = {}, g = {}, n = {}, eta = {}{}, beta = {}\n", problem.f().name(),
                   problem.g().name(), problem.dim(), format_double(problem.eta()),
                   config.eta_auto ? " (auto)" : "", format_double(problem.beta()));
  s += fmt::format("integrator: {}, {} samples, t_end = {}, terminated by {}\n",
                   to_string(config.integrator.method), traj.size(),
                   format_double(traj.times.back()), to_string(traj.terminated_by));
  s += fmt::format("final residual |field(x_T)| = {}\n",
                   format_double(criticality_residual(problem, traj.states.back())));
  s += fmt::format("final objective (f+g)(x_T) = {}\n",
                   format_double(objective(problem, traj.states.back())));
  for (const auto& w : traj.warnings) s += "warning: " + w + "\n";
  s += "checks:\n";
  for (const auto& c : result.checks) {
    s += fmt::format("  [{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
  }
  s += fmt::format("result: {}\n", result.passed() ? "all checks passed" : "CHECKS FAILED");
  result.summary = std::move(s);
  return result;
}

void write_artifacts(const RunConfig& config, const RunResult& result) {
  std::filesystem::create_directories(config.output_dir);
  auto open = [&](const char* file) {
    std::ofstream out(config.output_dir / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (config.output_dir / file).string());
    return out;
  };
  {
    auto out = open("trajectory.csv");
    write_trajectory_csv(out, result.trajectory);
  }
  open("analysis.json") << result.analysis_json;
  open("summary.txt") << result.summary;
  if (!result.analysis_trace_csv.empty()) open("analysis_trace.csv") << result.analysis_trace_csv;
  if (result.discrete) {
    auto out = open("discrete.csv");
    const Eigen::Index n = config.problem.dim();
    std::string header = "k";
    for (Eigen::Index i = 1; i <= n; ++i) header += fmt::format(",x_{}", i);
    out << header << ",residual\n";
    const DiscreteRun& d = *result.discrete;
    for (std::size_t k = 0; k < d.iterates.size(); ++k) {
      std::string line = std::to_string(k);
      for (Eigen::Index i = 0; i < n; ++i) line += ',' + format_double(d.iterates[k](i));
      out << line << ',' << format_double(d.residuals[k]) << '\n';
    }
  }
}

int run(const RunConfig& config, std::ostream& log) {
  const RunResult result = execute(config);
  write_artifacts(config, result);
  log << result.summary;
  for (const auto& f : result.failed_checks()) log << "failed invariant: " << f << '\n';
  return result.exit_code();
}

}  // namespace fbflow
