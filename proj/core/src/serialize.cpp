#include "fbflow/serialize.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "fbflow/dynamics.hpp"
#include "fbflow/errors.hpp"

namespace fbflow {

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Eigen::Index n = traj.dim();
  std::string line = "t";
  for (Eigen::Index i = 1; i <= n; ++i) line += fmt::format(",x_{}", i);
  for (Eigen::Index i = 1; i <= n; ++i) line += fmt::format(",xdot_{}", i);
  out << line << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    line = format_double(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) line += ',' + format_double(traj.states[k](i));
    for (Eigen::Index i = 0; i < n; ++i) line += ',' + format_double(traj.velocities[k](i));
    out << line << '\n';
  }
}

void write_analysis_trace_csv(std::ostream& out, const CompositeProblem& problem,
                              const Trajectory& traj, const TailLength& sigma,
                              const Vector& limit) {
  if (sigma.sigma.size() != traj.size()) {
    throw InvalidParameter("write_analysis_trace_csv: sigma does not match trajectory");
  }
  out << "t,H,xdot_norm,z_norm,sigma,dist_to_limit\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vector& x = traj.states[k];
    const Vector v = field(problem, x);
    const double h = energy(problem, x + v, x);
    const double z = subgradient_witness(problem, x, v).norm;
    out << fmt::format("{},{},{},{},{},{}\n", format_double(traj.times[k]), format_double(h),
                       format_double(v.norm()), format_double(z), format_double(sigma.sigma[k]),
                       format_double((x - limit).norm()));
  }
}

std::string trajectory_summary_json(const CompositeProblem& problem, const Trajectory& traj) {
  nlohmann::ordered_json j;
  if (traj.empty()) {
    j["terminal_state"] = nlohmann::json::array();
    j["residual"] = nullptr;
  } else {
    const Vector& x = traj.states.back();
    j["terminal_time"] = traj.times.back();
    j["terminal_state"] = std::vector<double>(x.data(), x.data() + x.size());
    j["residual"] = criticality_residual(problem, x);
  }
  j["sample_count"] = traj.size();
  j["terminated_by"] = std::string(to_string(traj.terminated_by));
  return j.dump(2);
}

}  // namespace fbflow
