// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "demon/schedules.hpp"

namespace {

void BM_DemonBeta(benchmark::State& state) {
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(demon::demon_beta(t, 10000.0, 0.9));
    t = t >= 10000.0 ? 0.0 : t + 1.0;
  }
}
BENCHMARK(BM_DemonBeta);

void BM_ScheduleEval(benchmark::State& state) {
  demon::ScheduleSpec spec;
  spec.kind = static_cast<demon::ScheduleKind>(state.range(0));
  spec.init_value = 0.9;
  spec.min_value = 0.1;
  spec.milestones = {0.5, 0.75};
  spec.target = demon::ScheduleTarget::Momentum;
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(demon::schedule_eval(spec, t, 10000.0));
    t = t >= 10000.0 ? 0.0 : t + 1.0;
  }
  state.SetLabel(std::string(demon::to_string(spec.kind)));
}
// Every family except Plateau, which needs external state.
BENCHMARK(BM_ScheduleEval)->DenseRange(0, 6);

}  // namespace
