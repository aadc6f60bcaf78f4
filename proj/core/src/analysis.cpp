#include "fbflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fbflow/errors.hpp"

namespace fbflow {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_matching(const CompositeProblem& problem, const Trajectory& traj, const char* what) {
  if (traj.empty()) throw InvalidParameter(std::string(what) + ": empty trajectory");
  if (traj.dim() != problem.dim()) {
    throw InvalidParameter(std::string(what) + ": trajectory dimension " +
                           std::to_string(traj.dim()) + " does not match problem dimension " +
                           std::to_string(problem.dim()));
  }
}

// Hermite-refined copy with at least kQuadraturePoints samples and an even
// number (at least two) of pieces per interval, plus the index of each
// original sample in it.
struct Refined {
  Trajectory dense;
  std::vector<std::size_t> node_index;
};

Refined refine(const Trajectory& traj) {
  Refined r;
  if (traj.size() < 2) {
    r.dense = traj;
    r.node_index.assign(traj.size(), 0);
    return r;
  }
  const std::size_t intervals = traj.size() - 1;
  std::size_t pieces = std::max<std::size_t>(2, (kQuadraturePoints - 1 + intervals - 1) / intervals);
  pieces += pieces % 2;
  r.dense = densify(traj, intervals * pieces + 1);
  r.node_index.reserve(traj.size());
  std::size_t j = 0;
  for (double t : traj.times) {
    while (r.dense.times[j] != t) ++j;
    r.node_index.push_back(j);
  }
  return r;
}

// Reverse cumulative trapezoid of values over times: out[k] = int_{t_k}^{T}.
std::vector<double> reverse_trapezoid(const std::vector<double>& times,
                                      const std::vector<double>& values) {
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t k = times.size(); k-- > 1;) {
    out[k - 1] = out[k] + 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
  }
  return out;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double sse = 0.0;
};

LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - fit.sse / syy : 1.0;
  return fit;
}

struct PowerFit {
  double p = 0.0;
  double c = 0.0;
  double d = 0.0;
  double sse = kInf;
};

// dist ~ (c t + d)^(-p): for fixed p, dist^(-1/p) is linear in t. The error is
// measured in log-distance.
PowerFit power_fit_for(double p, const std::vector<double>& t, const std::vector<double>& dist) {
  std::vector<double> y(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) y[i] = std::pow(dist[i], -1.0 / p);
  const LinearFit line = least_squares_line(t, y);
  PowerFit fit{p, line.slope, line.intercept, 0.0};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double base = fit.c * t[i] + fit.d;
    if (!(base > 0.0) || !std::isfinite(base)) return PowerFit{p, fit.c, fit.d, kInf};
    const double r = std::log(dist[i]) + p * std::log(base);
    fit.sse += r * r;
  }
  return fit;
}

PowerFit best_power_fit(const std::vector<double>& t, const std::vector<double>& dist) {
  constexpr double kLogLo = -2.302585092994046;  // log(0.1)
  constexpr double kLogHi = 2.995732273553991;   // log(20)
  constexpr int kGrid = 400;
  PowerFit best;
  int best_k = 0;
  for (int k = 0; k <= kGrid; ++k) {
    const double lp = kLogLo + (kLogHi - kLogLo) * k / kGrid;
    PowerFit f = power_fit_for(std::exp(lp), t, dist);
    if (f.sse < best.sse) {
      best = f;
      best_k = k;
    }
  }
  if (!std::isfinite(best.sse)) return best;
  const double step = (kLogHi - kLogLo) / kGrid;
  double lo = kLogLo + step * std::max(0, best_k - 1);
  double hi = kLogLo + step * std::min(kGrid, best_k + 1);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    const double m1 = hi - ratio * (hi - lo);
    const double m2 = lo + ratio * (hi - lo);
    const PowerFit f1 = power_fit_for(std::exp(m1), t, dist);
    const PowerFit f2 = power_fit_for(std::exp(m2), t, dist);
    if (f1.sse < best.sse) best = f1;
    if (f2.sse < best.sse) best = f2;
    if (f1.sse <= f2.sse) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return best;
}

}  // namespace

EnergyTrace energy_trace(const CompositeProblem& problem, const Trajectory& traj,
                         double integrator_tol) {
  require_matching(problem, traj, "energy_trace");
  if (!(integrator_tol >= 0.0)) throw InvalidParameter("energy_trace: integrator_tol must be >= 0");
  const double eta = problem.eta();
  const double beta = problem.beta();

  EnergyTrace trace;
  trace.dissipation_constant = 1.0 / eta - beta * (3.0 + eta * beta);
  trace.slack = 10.0 * integrator_tol;
  trace.samples.reserve(traj.size());
  std::vector<double> speed_sq;
  speed_sq.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vector v = field(problem, traj.states[i]);
    speed_sq.push_back(v.squaredNorm());
    trace.samples.push_back(energy_sample(problem, traj.times[i], traj.states[i], v));
  }
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const double h = traj.times[i + 1] - traj.times[i];
    const double h0 = trace.samples[i].energy;
    const double h1 = trace.samples[i + 1].energy;
    const double dissipated = 0.5 * h * (speed_sq[i] + speed_sq[i + 1]);
    const double roundoff = 64.0 * kEps * (std::abs(h0) + std::abs(h1));
    const double allowed = -trace.dissipation_constant * dissipated * (1.0 - trace.slack) + roundoff;
    const double increase = h1 - h0;
    if (!(increase <= allowed)) {
      trace.violations.push_back({traj.times[i + 1], increase - allowed});
    }
  }
  return trace;
}

SubgradientCheck subgradient_check(const CompositeProblem& problem, const Trajectory& traj) {
  require_matching(problem, traj, "subgradient_check");
  const double factor = problem.beta() + 1.0 / problem.eta();
  SubgradientCheck check;
  for (const Vector& x : traj.states) {
    const Vector v = field(problem, x);
    const SubgradientWitness w = subgradient_witness(problem, x, v);
    const double bound = factor * v.norm();
    ++check.samples;
    if (w.norm > bound * (1.0 + 1e-12)) ++check.violations;
    if (bound > 0.0) check.max_ratio = std::max(check.max_ratio, w.norm / bound);
  }
  return check;
}

VelocityDecay velocity_decay(const Trajectory& traj) {
  if (traj.empty()) throw InvalidParameter("velocity_decay: empty trajectory");
  const Refined r = refine(traj);
  const std::size_t m = r.dense.size();
  std::vector<double> speed(m), speed_sq(m), sup(m);
  for (std::size_t k = 0; k < m; ++k) {
    speed[k] = r.dense.velocities[k].norm();
    speed_sq[k] = speed[k] * speed[k];
  }
  double running = 0.0;
  for (std::size_t k = m; k-- > 0;) {
    running = std::max(running, speed[k]);
    sup[k] = running;
  }
  const std::vector<double> l2 = reverse_trapezoid(r.dense.times, speed_sq);

  VelocityDecay out;
  out.times = traj.times;
  out.sup_tail.reserve(traj.size());
  out.l2_tail.reserve(traj.size());
  for (std::size_t idx : r.node_index) {
    out.sup_tail.push_back(sup[idx]);
    out.l2_tail.push_back(l2[idx]);
  }
  return out;
}

TailLength tail_length(const Trajectory& traj, double slack_floor) {
  if (traj.empty()) throw InvalidParameter("tail_length: empty trajectory");
  const Refined r = refine(traj);
  std::vector<double> dense_speed(r.dense.size());
  for (std::size_t k = 0; k < r.dense.size(); ++k) dense_speed[k] = r.dense.velocities[k].norm();
  const std::vector<double> sigma_dense = reverse_trapezoid(r.dense.times, dense_speed);

  // Quadrature error estimate: per original interval, the difference between
  // the trapezoid on the refined grid and on every other refined point.
  std::vector<double> error(traj.size(), 0.0);
  for (std::size_t i = traj.size() - 1; i-- > 0;) {
    const std::size_t a = r.node_index[i], b = r.node_index[i + 1];
    double half = 0.0;
    double fine = sigma_dense[a] - sigma_dense[b];
    if ((b - a) % 2 == 0) {
      for (std::size_t k = a; k < b; k += 2) {
        half += (r.dense.times[k + 2] - r.dense.times[k]) * (dense_speed[k] + dense_speed[k + 2]) / 2.0;
      }
    } else {
      half = 0.5 * (r.dense.times[b] - r.dense.times[a]) * (dense_speed[a] + dense_speed[b]);
    }
    error[i] = error[i + 1] + std::abs(fine - half);
  }

  TailLength out;
  out.times = traj.times;
  const Vector& end = traj.states.back();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double sigma = sigma_dense[r.node_index[i]];
    const double slack = error[i] + slack_floor;
    const double dist = (traj.states[i] - end).norm();
    out.sigma.push_back(sigma);
    out.slack.push_back(slack);
    out.distance_to_end.push_back(dist);
    if (dist > sigma + slack) ++out.violations;
  }
  return out;
}

LimitReport limit_report(const CompositeProblem& problem, const Trajectory& traj,
                         double criticality_tol) {
  require_matching(problem, traj, "limit_report");
  const double eta = problem.eta();
  LimitReport rep;
  rep.final_state = traj.states.back();
  rep.final_time = traj.times.back();
  rep.terminated_by = traj.terminated_by;
  rep.coercive = problem.coercive();

  const Vector v_end = field(problem, rep.final_state);
  rep.residual = v_end.norm();
  rep.critical = rep.residual <= criticality_tol;
  rep.objective = objective(problem, rep.final_state);
  const double h_end = energy(problem, rep.final_state + v_end, rep.final_state);
  rep.energy_gap_bound = (0.5 * problem.beta() - 0.5 / eta) * v_end.squaredNorm();
  if (std::isfinite(rep.objective)) {
    rep.energy_gap = h_end - rep.objective;
    const double roundoff = 64.0 * kEps * (std::abs(h_end) + std::abs(rep.objective));
    rep.energy_gap_bound_holds = rep.energy_gap <= rep.energy_gap_bound + roundoff;
  } else {
    rep.energy_gap = std::numeric_limits<double>::quiet_NaN();
  }

  const Vector v0 = field(problem, traj.states.front());
  rep.initial_energy = energy(problem, traj.states.front() + v0, traj.states.front());
  rep.max_sublevel_excess = -kInf;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vector& x = traj.states[i];
    rep.max_state_norm = std::max(rep.max_state_norm, x.norm());
    const Vector u = x + field(problem, x);
    const double value = objective(problem, u);
    const double excess = value - rep.initial_energy;
    rep.max_sublevel_excess = std::max(rep.max_sublevel_excess, excess);
    const double roundoff = 64.0 * kEps * (std::abs(value) + std::abs(rep.initial_energy));
    if (rep.coercive && !(excess <= roundoff)) rep.sublevel_bound_holds = false;
  }
  return rep;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::finite_time: return "finite_time";
    case Regime::exponential: return "exponential";
    case Regime::polynomial: return "polynomial";
    case Regime::inconclusive_finite_or_exponential: return "inconclusive_finite_or_exponential";
    case Regime::inconclusive: return "inconclusive";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  for (Regime r : {Regime::finite_time, Regime::exponential, Regime::polynomial,
                   Regime::inconclusive_finite_or_exponential, Regime::inconclusive}) {
    if (to_string(r) == name) return r;
  }
  throw InvalidParameter("unknown regime '" + std::string(name) + "'");
}

double polynomial_rate_exponent(double theta) {
  if (!(theta > 0.5 && theta < 1.0)) {
    throw InvalidParameter("polynomial_rate_exponent: theta must lie in (1/2, 1)");
  }
  return -(1.0 - theta) / (2.0 * theta - 1.0);
}

RateFit fit_rate(const CompositeProblem& problem, const Trajectory& traj, const Vector& limit) {
  require_matching(problem, traj, "fit_rate");
  require_dim(limit, problem.dim(), "fit_rate limit");
  RateFit fit;

  const std::size_t n = traj.size();
  std::vector<double> dist(n);
  double min_dist = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = (traj.states[i] - limit).norm();
    min_dist = std::min(min_dist, dist[i]);
  }
  if (min_dist > 1e-3) {
    fit.regime = Regime::inconclusive;
    fit.note = "insufficient decay: trajectory never within 1e-3 of the limit";
    return fit;
  }

  const double h_limit = objective(problem, limit);
  if (!std::isfinite(h_limit)) throw AnalysisError("fit_rate: limit outside dom f");
  const double dist_floor = 100.0 * kEps * std::max(1.0, limit.norm());
  const double energy_floor = 1e3 * kEps * std::abs(h_limit);

  bool hit_zero = false;
  std::vector<double> log_gap, log_z, t_win, d_win;
  const std::size_t first = n / 5;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector v = field(problem, traj.states[i]);
    if (v.norm() == 0.0) hit_zero = true;
    if (i < first || !(dist[i] > dist_floor)) continue;
    t_win.push_back(traj.times[i]);
    d_win.push_back(dist[i]);
    const double gap = energy(problem, traj.states[i] + v, traj.states[i]) - h_limit;
    const double z = subgradient_witness(problem, traj.states[i], v).norm;
    if (gap > energy_floor && gap > 0.0 && z > 0.0) {
      log_gap.push_back(std::log(gap));
      log_z.push_back(std::log(z));
    }
  }

  if (log_gap.size() < 8 || t_win.size() < 8) {
    if (hit_zero) {
      fit.regime = Regime::finite_time;
      fit.note = "velocity reached exact zero; too few decaying samples to estimate theta";
      fit.theta = std::numeric_limits<double>::quiet_NaN();
      return fit;
    }
    throw AnalysisError("fit_rate: degenerate fit window (" + std::to_string(log_gap.size()) +
                        " usable samples)");
  }
  fit.window_begin = t_win.front();
  fit.window_end = t_win.back();
  fit.window_samples = t_win.size();

  // |H - H_limit|^theta <= C |z|  <=>  log|z| >= theta log|H - H_limit| - log C.
  const LinearFit theta_fit = least_squares_line(log_gap, log_z);
  fit.theta = theta_fit.slope;
  fit.theta_r_squared = theta_fit.r_squared;
  fit.C = 0.0;
  for (std::size_t k = 0; k < log_gap.size(); ++k) {
    fit.C = std::max(fit.C, std::exp(fit.theta * log_gap[k] - log_z[k]));
  }

  std::vector<double> log_d(d_win.size());
  for (std::size_t k = 0; k < d_win.size(); ++k) log_d[k] = std::log(d_win[k]);
  const LinearFit exp_fit = least_squares_line(t_win, log_d);
  fit.a = std::exp(exp_fit.intercept);
  fit.b = -exp_fit.slope;
  fit.r_squared_exponential = exp_fit.r_squared;

  const PowerFit pow_fit = best_power_fit(t_win, d_win);
  fit.c = pow_fit.c;
  fit.d = pow_fit.d;
  fit.power_exponent = -pow_fit.p;
  {
    double mean = 0.0, sst = 0.0;
    for (double y : log_d) mean += y;
    mean /= static_cast<double>(log_d.size());
    for (double y : log_d) sst += (y - mean) * (y - mean);
    fit.r_squared_polynomial = sst > 0.0 ? 1.0 - pow_fit.sse / sst : 1.0;
  }

  if (hit_zero) {
    fit.regime = Regime::finite_time;
    fit.note = "velocity reached exact zero before the end of the run";
  } else if (fit.theta < kExponentialBandLow) {
    fit.regime = Regime::inconclusive_finite_or_exponential;
    fit.note = "theta below 1/2 but no exact stop observed";
  } else if (fit.theta <= kExponentialBandHigh) {
    fit.regime = Regime::exponential;
  } else {
    fit.regime = Regime::polynomial;
  }
  fit.r_squared = fit.regime == Regime::polynomial ? fit.r_squared_polynomial
                                                   : fit.r_squared_exponential;
  return fit;
}

}  // namespace fbflow
