#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fbflow/problem.hpp"

namespace fbflow {

enum class Method { euler, rk4, adaptive_rk45 };
enum class Termination { t_max, residual, sample_cap };

std::string_view to_string(Method method);
std::string_view to_string(Termination termination);
/// Accepts "euler", "rk4", "adaptive-rk45". Throws InvalidConfig otherwise.
Method parse_method(std::string_view name);

struct IntegratorConfig {
  Method method = Method::adaptive_rk45;
  /// Step for euler / rk4.
  double step = 1e-2;
  /// Local error tolerances for adaptive-rk45.
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double t_max = 1e3;
  /// Stop once |field(x)| <= stop_residual; zero stops only at an exact fixed point.
  double stop_residual = 1e-9;
  std::size_t max_samples = 1'000'000;
};

/// Sampled solution of xdot = field(x), x(0) = x0.
///
/// For trajectories produced by integrate, velocities[i] is exactly
/// field(states[i]). Resampled trajectories carry Hermite-interpolated
/// velocities instead.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> velocities;
  Termination terminated_by = Termination::t_max;
  std::vector<std::string> warnings;
  std::size_t field_evaluations = 0;
  std::size_t rejected_steps = 0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  Eigen::Index dim() const { return states.empty() ? 0 : states.front().size(); }
};

/// Validates the configuration against the problem; returns advisory warnings
/// (e.g. an Euler step above 1/(2 + eta*beta)). Throws InvalidConfig.
std::vector<std::string> check_config(const CompositeProblem& problem,
                                      const IntegratorConfig& config);

/// Integrates the flow from the problem's x0 until t_max, the residual stop,
/// or the sample cap, whichever comes first. Throws InvalidConfig for bad
/// settings and DivergenceError if a non-finite state appears.
Trajectory integrate(const CompositeProblem& problem, const IntegratorConfig& config);

struct DenseSample {
  Vector state;
  Vector velocity;
};

/// Cubic Hermite interpolation from the stored (state, velocity) pairs.
/// Exact at sample times. Throws InvalidParameter outside [0, T].
DenseSample interpolate(const Trajectory& traj, double t);

/// Dense output on an increasing grid inside [times.front(), times.back()].
Trajectory resample(const Trajectory& traj, std::span<const double> grid);

/// Subdivides every interval uniformly so the result has at least min_points
/// samples; the original samples are kept exactly.
Trajectory densify(const Trajectory& traj, std::size_t min_points);

}  // namespace fbflow
