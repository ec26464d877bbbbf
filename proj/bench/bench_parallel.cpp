#include <benchmark/benchmark.h>

#include "windgrid/config.hpp"
#include "windgrid/io.hpp"

using namespace windgrid;

namespace {

const SystemConfig& cfg() {
  static const SystemConfig c = load_system_config(default_system_config());
  return c;
}

struct OperatingPoint {
  SystemModel model;
  EquilibriumPoint eq;
};

const OperatingPoint& operating_point() {
  static const OperatingPoint op = [] {
    Scenario sc = cfg().scenario;
    sc.gamma_override = 20.0;
    SystemModel m = apply_overrides(cfg().model, sc);
    EquilibriumPoint eq = find_equilibrium(m, cfg().dispatch);
    return OperatingPoint{std::move(m), std::move(eq)};
  }();
  return op;
}

void jacobian(benchmark::State& state, Exec exec) {
  const OperatingPoint& op = operating_point();
  const SystemDynamics dyn(op.model, op.eq);
  const Vec x = dyn.initial_state();
  for (auto _ : state) benchmark::DoNotOptimize(system_jacobian(dyn, x, exec));
}

void sweep(benchmark::State& state, Exec exec) {
  std::vector<double> gammas;
  for (double g = 3.0; g <= 30.0; g += 3.0) gammas.push_back(g);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        eigen_sweep(cfg().model, cfg().dispatch, gammas, cfg().sweep.seed, exec));
  }
}

}  // namespace

BENCHMARK_CAPTURE(jacobian, serial, Exec::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(jacobian, parallel, Exec::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, serial, Exec::Serial)->Unit(benchmark::kMillisecond)->Iterations(2);
BENCHMARK_CAPTURE(sweep, parallel, Exec::Parallel)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
