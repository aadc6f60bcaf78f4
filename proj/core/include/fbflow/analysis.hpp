#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fbflow/dynamics.hpp"
#include "fbflow/integrator.hpp"
#include "fbflow/problem.hpp"

namespace fbflow {

/// Minimum number of points used for trapezoidal quadrature along a
/// trajectory; coarser trajectories are Hermite-refined first.
inline constexpr std::size_t kQuadraturePoints = 10'000;

struct EnergyViolation {
  double t = 0.0;
  double magnitude = 0.0;
};

/// Energy H(xdot + x, x) along a trajectory and the per-interval dissipation
/// check H_{i+1} - H_i <= -c * int |xdot|^2 with c = 1/eta - beta(3 + eta*beta).
struct EnergyTrace {
  std::vector<EnergySample> samples;
  double dissipation_constant = 0.0;
  double slack = 0.0;
  std::vector<EnergyViolation> violations;
};

/// integrator_tol sets the relative slack (10x) on the dissipation term.
EnergyTrace energy_trace(const CompositeProblem& problem, const Trajectory& traj,
                         double integrator_tol = 1e-9);

struct SubgradientCheck {
  std::size_t samples = 0;
  std::size_t violations = 0;
  /// max |z| / ((beta + 1/eta) |xdot|) over samples with xdot != 0.
  double max_ratio = 0.0;
};

/// Checks |z(t)| <= (beta + 1/eta)|xdot(t)| at every sample, 1e-12 relative slack.
SubgradientCheck subgradient_check(const CompositeProblem& problem, const Trajectory& traj);

/// Running tail supremum of |xdot| and tail L2 mass int_t^T |xdot|^2, both at
/// the trajectory's sample times.
struct VelocityDecay {
  std::vector<double> times;
  std::vector<double> sup_tail;
  std::vector<double> l2_tail;

  double total_l2() const { return l2_tail.empty() ? 0.0 : l2_tail.front(); }
};

VelocityDecay velocity_decay(const Trajectory& traj);

/// sigma(t) = int_t^T |xdot| with the check |x(t) - x(T)| <= sigma(t) + slack(t).
struct TailLength {
  std::vector<double> times;
  std::vector<double> sigma;
  std::vector<double> distance_to_end;
  std::vector<double> slack;
  std::size_t violations = 0;

  bool bound_holds() const { return violations == 0; }
};

/// slack_floor is added to the quadrature error estimate to absorb the
/// integrator's own error in x(t).
TailLength tail_length(const Trajectory& traj, double slack_floor = 1e-8);

struct LimitReport {
  Vector final_state;
  double final_time = 0.0;
  Termination terminated_by = Termination::t_max;
  double residual = 0.0;
  bool critical = false;
  double objective = 0.0;
  /// H(xdot + x, x) - (f+g)(x) at the final state.
  double energy_gap = 0.0;
  /// (beta/2 - 1/(2 eta)) |xdot|^2, an upper bound for energy_gap.
  double energy_gap_bound = 0.0;
  bool energy_gap_bound_holds = true;
  double max_state_norm = 0.0;
  /// H(xdot(0) + x0, x0).
  double initial_energy = 0.0;
  /// max over samples of (f+g)(xdot + x) - initial_energy; <= 0 up to roundoff.
  double max_sublevel_excess = 0.0;
  bool sublevel_bound_holds = true;
  bool coercive = false;
};

LimitReport limit_report(const CompositeProblem& problem, const Trajectory& traj,
                         double criticality_tol = kCriticalityTol);

enum class Regime {
  finite_time,
  exponential,
  polynomial,
  inconclusive_finite_or_exponential,
  inconclusive,
};

std::string_view to_string(Regime regime);
/// Throws InvalidParameter for unknown names.
Regime parse_regime(std::string_view name);

/// Lower edge and upper edge of the band of estimated exponents classified as
/// exponential decay.
inline constexpr double kExponentialBandLow = 0.45;
inline constexpr double kExponentialBandHigh = 0.55;

struct RateFit {
  /// Estimated Lojasiewicz exponent of H at the limit.
  double theta = 0.0;
  double theta_r_squared = 0.0;
  /// Smallest C with |H - H_limit|^theta <= C |z| on the fit window.
  double C = 0.0;
  Regime regime = Regime::inconclusive;
  std::string note;
  // |x(t) - limit| ~ a exp(-b t)
  double a = 0.0;
  double b = 0.0;
  double r_squared_exponential = 0.0;
  // |x(t) - limit| ~ (c t + d)^(-p); power_exponent = -p
  double c = 0.0;
  double d = 0.0;
  double power_exponent = 0.0;
  double r_squared_polynomial = 0.0;
  /// r^2 of the fit belonging to the classified regime.
  double r_squared = 0.0;
  double window_begin = 0.0;
  double window_end = 0.0;
  std::size_t window_samples = 0;
};

/// Estimates the Lojasiewicz exponent along the tail of a trajectory
/// converging to limit and classifies the convergence regime.
///
/// The first 20% of samples and samples within 100 eps of the limit are
/// excluded. If the trajectory never gets within 1e-3 of the limit the result
/// is inconclusive; if too few samples remain the call throws AnalysisError.
RateFit fit_rate(const CompositeProblem& problem, const Trajectory& traj, const Vector& limit);

/// Expected power-law exponent -(1 - theta)/(2 theta - 1) for theta in (1/2, 1).
double polynomial_rate_exponent(double theta);

}  // namespace fbflow
