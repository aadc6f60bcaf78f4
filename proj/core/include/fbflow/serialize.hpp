#pragma once

#include <ostream>
#include <string>

#include "fbflow/analysis.hpp"
#include "fbflow/integrator.hpp"
#include "fbflow/problem.hpp"

namespace fbflow {

/// Round-trip decimal formatting (17 significant digits).
std::string format_double(double value);

/// Columns: t, x_1..x_n, xdot_1..xdot_n.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Columns: t, H, xdot_norm, z_norm, sigma, dist_to_limit. sigma must come
/// from tail_length on the same trajectory.
void write_analysis_trace_csv(std::ostream& out, const CompositeProblem& problem,
                              const Trajectory& traj, const TailLength& sigma,
                              const Vector& limit);

/// JSON object with terminal_state, residual, sample_count, terminated_by.
std::string trajectory_summary_json(const CompositeProblem& problem, const Trajectory& traj);

}  // namespace fbflow
