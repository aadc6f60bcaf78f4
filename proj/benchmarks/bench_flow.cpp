#include <random>

#include <benchmark/benchmark.h>

#include "fbflow/analysis.hpp"
#include "fbflow/dynamics.hpp"
#include "fbflow/harness.hpp"
#include "fbflow/integrator.hpp"
#include "fbflow/prox_catalog.hpp"

namespace {

using namespace fbflow;

CompositeProblem lasso(Eigen::Index n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  Matrix m(2 * n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  Vector c(2 * n);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = normal(rng);
  SmoothTerm g = smooth_least_squares(m, c);
  const double eta = 0.9 * max_valid_eta(g.lipschitz_beta());
  return CompositeProblem(l1_term(n, 0.1), std::move(g), eta, Vector::Ones(n));
}

void BM_FieldEvaluation(benchmark::State& state) {
  const CompositeProblem p = lasso(state.range(0));
  Vector x = p.x0();
  for (auto _ : state) {
    Vector v = field(p, x);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FieldEvaluation)->Arg(4)->Arg(64)->Arg(512);

void BM_Integrate(benchmark::State& state) {
  const CompositeProblem p = lasso(state.range(0));
  IntegratorConfig cfg;
  cfg.method = Method::adaptive_rk45;
  cfg.t_max = 1e4;
  cfg.stop_residual = 1e-9;
  std::size_t evals = 0;
  for (auto _ : state) {
    Trajectory t = integrate(p, cfg);
    evals = t.field_evaluations;
    benchmark::DoNotOptimize(t.states.back().data());
  }
  state.counters["field_evals"] = static_cast<double>(evals);
}
BENCHMARK(BM_Integrate)->Arg(4)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ProxClosedFormL1(benchmark::State& state) {
  const Vector y = Vector::LinSpaced(state.range(0), -3.0, 3.0);
  for (auto _ : state) {
    Vector u = prox_l1(y, 0.5, 1.0);
    benchmark::DoNotOptimize(u.data());
  }
}
BENCHMARK(BM_ProxClosedFormL1)->Arg(64)->Arg(4096);

void BM_ProxNumericL1(benchmark::State& state) {
  const SeparableConvexTerm term("abs", std::vector<ScalarConvex>(state.range(0), scalar_abs(1.0)));
  const Vector y = Vector::LinSpaced(state.range(0), -3.0, 3.0);
  for (auto _ : state) {
    Vector u = prox_numeric(term, y, 0.5);
    benchmark::DoNotOptimize(u.data());
  }
}
BENCHMARK(BM_ProxNumericL1)->Arg(64)->Arg(4096);

void BM_EnergyTrace(benchmark::State& state) {
  const RunConfig cfg = corpus().front();
  const Trajectory t = integrate(cfg.problem, cfg.integrator);
  for (auto _ : state) {
    EnergyTrace e = energy_trace(cfg.problem, t);
    benchmark::DoNotOptimize(e.samples.data());
  }
}
BENCHMARK(BM_EnergyTrace)->Unit(benchmark::kMillisecond);

void BM_CorpusRun(benchmark::State& state) {
  const std::vector<RunConfig> configs = corpus();
  for (auto _ : state) {
    for (const RunConfig& c : configs) {
      RunResult r = execute(c);
      benchmark::DoNotOptimize(r.checks.data());
    }
  }
}
BENCHMARK(BM_CorpusRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
