#include <cstdlib>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fbflow/analysis.hpp"
#include "fbflow/errors.hpp"
#include "fbflow/integrator.hpp"
#include "fbflow/prox_catalog.hpp"
#include "fbflow/serialize.hpp"

using namespace fbflow;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

CompositeProblem box_problem() {
  return CompositeProblem(box_term(Vector::Zero(2), Vector::Ones(2)),
                          smooth_quadratic(Matrix::Identity(2, 2), Vector::Constant(2, -2.0)), 0.2,
                          Vector::Constant(2, 0.1));
}

}  // namespace

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(TrajectoryCsv, HeaderAndRows) {
  const CompositeProblem p = box_problem();
  const Trajectory tr = integrate(p, IntegratorConfig{});
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  const auto lines = split(out.str(), '\n');
  ASSERT_EQ(lines.size(), tr.size() + 1);
  EXPECT_EQ(lines[0], "t,x_1,x_2,xdot_1,xdot_2");
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto cells = split(lines[k + 1], ',');
    ASSERT_EQ(cells.size(), 5u);
    EXPECT_EQ(std::strtod(cells[0].c_str(), nullptr), tr.times[k]);
    EXPECT_EQ(std::strtod(cells[2].c_str(), nullptr), tr.states[k](1));
    EXPECT_EQ(std::strtod(cells[3].c_str(), nullptr), tr.velocities[k](0));
  }
}

TEST(AnalysisTraceCsv, Columns) {
  const CompositeProblem p = box_problem();
  const Trajectory tr = integrate(p, IntegratorConfig{});
  const TailLength tl = tail_length(tr);
  std::ostringstream out;
  write_analysis_trace_csv(out, p, tr, tl, tr.states.back());
  const auto lines = split(out.str(), '\n');
  ASSERT_EQ(lines.size(), tr.size() + 1);
  EXPECT_EQ(lines[0], "t,H,xdot_norm,z_norm,sigma,dist_to_limit");
  EXPECT_EQ(std::strtod(split(lines.back(), ',')[5].c_str(), nullptr), 0.0);

  TailLength wrong = tl;
  wrong.sigma.pop_back();
  EXPECT_THROW(write_analysis_trace_csv(out, p, tr, wrong, tr.states.back()), InvalidParameter);
}

TEST(TrajectorySummaryJson, Fields) {
  const CompositeProblem p = box_problem();
  const Trajectory tr = integrate(p, IntegratorConfig{});
  const auto j = nlohmann::json::parse(trajectory_summary_json(p, tr));
  EXPECT_EQ(j["sample_count"].get<std::size_t>(), tr.size());
  EXPECT_EQ(j["terminated_by"].get<std::string>(), "residual");
  EXPECT_EQ(j["terminal_state"][0].get<double>(), tr.states.back()(0));
  EXPECT_LE(j["residual"].get<double>(), 1e-9);
  EXPECT_EQ(j["terminal_time"].get<double>(), tr.times.back());
}
