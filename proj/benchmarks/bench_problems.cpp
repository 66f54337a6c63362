// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "demon/harness.hpp"

namespace {

demon::Problem mlp(std::size_t width) {
  demon::ProblemSpec spec;
  spec.generator = demon::ProblemKind::Mlp;
  spec.n = 200;
  spec.hidden = {width};
  return demon::build_problem(spec, 0).train;
}

void BM_MlpGradient(benchmark::State& state) {
  const demon::Problem p = mlp(static_cast<std::size_t>(state.range(0)));
  const demon::Vector theta = p.initial_point(1);
  for (auto _ : state) benchmark::DoNotOptimize(p.grad(theta));
  state.counters["params"] = static_cast<double>(p.dim());
}
BENCHMARK(BM_MlpGradient)->Arg(16)->Arg(64)->Arg(256);

void BM_MlpMinibatchGradient(benchmark::State& state) {
  const demon::Problem p = mlp(16);
  const demon::Vector theta = p.initial_point(1);
  std::vector<std::size_t> rows(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (auto _ : state) benchmark::DoNotOptimize(p.grad_rows(theta, rows));
}
BENCHMARK(BM_MlpMinibatchGradient)->Arg(8)->Arg(32)->Arg(128);

void BM_ScaleInvariantGradient(benchmark::State& state) {
  const demon::Problem p = demon::make_scale_invariant(8);
  const demon::Vector theta = p.initial_point(1);
  for (auto _ : state) benchmark::DoNotOptimize(p.grad(theta));
}
BENCHMARK(BM_ScaleInvariantGradient);

void BM_TrainingRun(benchmark::State& state) {
  demon::RunConfig c;
  c.problem_spec.generator = demon::ProblemKind::Mlp;
  c.optimizer = demon::OptimizerKind::DemonSGDM;
  c.lr_schedule = demon::constant_schedule(0.1, demon::ScheduleTarget::LearningRate);
  c.T = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(demon::run_training(c).records.size());
}
BENCHMARK(BM_TrainingRun)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
