#include "fbflow/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "fbflow/dynamics.hpp"
#include "fbflow/errors.hpp"

namespace fbflow {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

class Recorder {
 public:
  Recorder(const CompositeProblem& problem, const IntegratorConfig& config, Trajectory& traj)
      : problem_(problem), config_(config), traj_(traj) {}

  Vector eval(const Vector& x) {
    ++traj_.field_evaluations;
    return field(problem_, x);
  }

  // Appends a sample; returns true if integration must stop after it.
  bool push(double t, Vector x, Vector v) {
    if (!x.allFinite() || !v.allFinite()) {
      throw DivergenceError("integrate: non-finite state at t = " + std::to_string(t));
    }
    const double speed = v.norm();
    traj_.times.push_back(t);
    traj_.states.push_back(std::move(x));
    traj_.velocities.push_back(std::move(v));
    if (speed <= config_.stop_residual) {
      traj_.terminated_by = Termination::residual;
      return true;
    }
    if (t >= config_.t_max) {
      traj_.terminated_by = Termination::t_max;
      return true;
    }
    if (traj_.size() >= config_.max_samples) {
      traj_.terminated_by = Termination::sample_cap;
      return true;
    }
    return false;
  }

 private:
  const CompositeProblem& problem_;
  const IntegratorConfig& config_;
  Trajectory& traj_;
};

void integrate_fixed(const CompositeProblem& problem, const IntegratorConfig& config,
                     Trajectory& traj) {
  Recorder rec(problem, config, traj);
  Vector x = problem.x0();
  Vector v = rec.eval(x);
  double t = 0.0;
  if (rec.push(t, x, v)) return;

  const double step = config.step;
  for (long i = 1;; ++i) {
    double t_next = static_cast<double>(i) * step;
    double h = step;
    if (t_next >= config.t_max - 1e-9 * step) {
      t_next = config.t_max;
      h = t_next - t;
    }
    Vector x_next;
    if (config.method == Method::euler) {
      x_next = x + h * v;
    } else {
      const Vector& k1 = v;
      const Vector k2 = rec.eval(x + (0.5 * h) * k1);
      const Vector k3 = rec.eval(x + (0.5 * h) * k2);
      const Vector k4 = rec.eval(x + h * k3);
      x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x_next.allFinite()) {
      throw DivergenceError("integrate: non-finite state at t = " + std::to_string(t_next));
    }
    v = rec.eval(x_next);
    x = std::move(x_next);
    t = t_next;
    if (rec.push(t, x, v)) return;
  }
}

double error_norm(const Vector& err, const Vector& y0, const Vector& y1,
                  const IntegratorConfig& config) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc =
        config.abs_tol + config.rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = err(i) / sc;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

// Starting step heuristic of Hairer, Norsett and Wanner (order 5).
double initial_step(Recorder& rec, const Vector& x0, const Vector& f0,
                    const IntegratorConfig& config) {
  Vector sc = (config.abs_tol + config.rel_tol * x0.array().abs()).matrix();
  const double n = static_cast<double>(x0.size());
  const double d0 = std::sqrt((x0.array() / sc.array()).square().sum() / n);
  const double d1 = std::sqrt((f0.array() / sc.array()).square().sum() / n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, config.t_max);
  const Vector f1 = rec.eval(x0 + h0 * f0);
  const double d2 = std::sqrt(((f1 - f0).array() / sc.array()).square().sum() / n) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
  return std::min(100.0 * h0, h1);
}

void integrate_adaptive(const CompositeProblem& problem, const IntegratorConfig& config,
                        Trajectory& traj) {
  Recorder rec(problem, config, traj);
  Vector x = problem.x0();
  Vector k1 = rec.eval(x);
  double t = 0.0;
  if (rec.push(t, x, k1)) return;

  double h = std::min(initial_step(rec, x, k1, config), config.t_max);
  bool last_rejected = false;
  while (true) {
    bool final_step = false;
    if (t + h >= config.t_max) {
      h = config.t_max - t;
      final_step = true;
    }
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw DivergenceError("integrate: step size underflow at t = " + std::to_string(t));
    }

    const Vector k2 = rec.eval(x + h * (a21 * k1));
    const Vector k3 = rec.eval(x + h * (a31 * k1 + a32 * k2));
    const Vector k4 = rec.eval(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = rec.eval(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = rec.eval(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vector x_new = x + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    if (!x_new.allFinite()) {
      throw DivergenceError("integrate: non-finite state at t = " + std::to_string(t + h));
    }
    Vector k7 = rec.eval(x_new);
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err_norm = error_norm(err, x, x_new, config);

    if (err_norm <= 1.0) {
      t = final_step ? config.t_max : t + h;
      x = std::move(x_new);
      k1 = std::move(k7);
      if (rec.push(t, x, k1)) return;
      double factor = err_norm == 0.0 ? kMaxFactor : kSafety * std::pow(err_norm, -0.2);
      factor = std::clamp(factor, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
      h *= factor;
      last_rejected = false;
    } else {
      ++traj.rejected_steps;
      h *= std::max(kMinFactor, kSafety * std::pow(err_norm, -0.2));
      last_rejected = true;
    }
  }
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::euler: return "euler";
    case Method::rk4: return "rk4";
    case Method::adaptive_rk45: return "adaptive-rk45";
  }
  return "unknown";
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::t_max: return "t_max";
    case Termination::residual: return "residual";
    case Termination::sample_cap: return "sample_cap";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "euler") return Method::euler;
  if (name == "rk4") return Method::rk4;
  if (name == "adaptive-rk45" || name == "rk45") return Method::adaptive_rk45;
  throw InvalidConfig("unknown integration method '" + std::string(name) +
                      "' (expected euler, rk4 or adaptive-rk45)");
}

std::vector<std::string> check_config(const CompositeProblem& problem,
                                      const IntegratorConfig& config) {
  if (!(config.t_max > 0.0) || !std::isfinite(config.t_max)) {
    throw InvalidConfig("t_max must be positive and finite");
  }
  if (!(config.stop_residual >= 0.0)) throw InvalidConfig("stop_residual must be >= 0");
  if (config.max_samples < 1) throw InvalidConfig("max_samples must be >= 1");
  std::vector<std::string> warnings;
  if (config.method == Method::adaptive_rk45) {
    if (!(config.abs_tol > 0.0) || !(config.rel_tol > 0.0)) {
      throw InvalidConfig("abs_tol and rel_tol must be positive");
    }
  } else {
    if (!(config.step > 0.0) || !std::isfinite(config.step)) {
      throw InvalidConfig("step must be positive and finite");
    }
    const double guidance = 1.0 / (2.0 + problem.eta() * problem.beta());
    if (config.method == Method::euler && config.step >= guidance) {
      warnings.push_back("euler step " + std::to_string(config.step) +
                         " is not below 1/(2+eta*beta) = " + std::to_string(guidance));
    }
  }
  return warnings;
}

Trajectory integrate(const CompositeProblem& problem, const IntegratorConfig& config) {
  Trajectory traj;
  traj.warnings = check_config(problem, config);
  if (config.method == Method::adaptive_rk45) {
    integrate_adaptive(problem, config, traj);
  } else {
    integrate_fixed(problem, config, traj);
  }
  return traj;
}

DenseSample interpolate(const Trajectory& traj, double t) {
  if (traj.empty()) throw InvalidParameter("interpolate: empty trajectory");
  if (!(t >= traj.times.front() && t <= traj.times.back())) {
    throw InvalidParameter("interpolate: time " + std::to_string(t) + " outside trajectory range");
  }
  auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t);
  const auto i = static_cast<std::size_t>(it - traj.times.begin());
  if (*it == t) return {traj.states[i], traj.velocities[i]};

  const std::size_t j = i - 1;
  const double h = traj.times[i] - traj.times[j];
  const double s = (t - traj.times[j]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const Vector& x0 = traj.states[j];
  const Vector& x1 = traj.states[i];
  const Vector& v0 = traj.velocities[j];
  const Vector& v1 = traj.velocities[i];
  DenseSample out;
  out.state = (2 * s3 - 3 * s2 + 1) * x0 + ((s3 - 2 * s2 + s) * h) * v0 +
              (-2 * s3 + 3 * s2) * x1 + ((s3 - s2) * h) * v1;
  out.velocity = ((6 * s2 - 6 * s) / h) * (x0 - x1) + (3 * s2 - 4 * s + 1) * v0 +
                 (3 * s2 - 2 * s) * v1;
  return out;
}

Trajectory resample(const Trajectory& traj, std::span<const double> grid) {
  Trajectory out;
  out.terminated_by = traj.terminated_by;
  out.warnings = traj.warnings;
  if (grid.empty()) return out;
  if (traj.empty()) throw InvalidParameter("resample: empty trajectory");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw InvalidParameter("resample: grid must be strictly increasing");
  }
  out.times.reserve(grid.size());
  out.states.reserve(grid.size());
  out.velocities.reserve(grid.size());
  for (double t : grid) {
    DenseSample s = interpolate(traj, t);
    out.times.push_back(t);
    out.states.push_back(std::move(s.state));
    out.velocities.push_back(std::move(s.velocity));
  }
  return out;
}

Trajectory densify(const Trajectory& traj, std::size_t min_points) {
  if (traj.size() < 2 || traj.size() >= min_points) return traj;
  const std::size_t intervals = traj.size() - 1;
  const std::size_t pieces = (min_points - 1 + intervals - 1) / intervals;
  std::vector<double> grid;
  grid.reserve(intervals * pieces + 1);
  for (std::size_t i = 0; i < intervals; ++i) {
    const double t0 = traj.times[i];
    const double h = traj.times[i + 1] - t0;
    grid.push_back(t0);
    for (std::size_t k = 1; k < pieces; ++k) {
      const double t = t0 + h * static_cast<double>(k) / static_cast<double>(pieces);
      if (t > grid.back() && t < traj.times[i + 1]) grid.push_back(t);
    }
  }
  grid.push_back(traj.times.back());
  return resample(traj, grid);
}

}  // namespace fbflow
