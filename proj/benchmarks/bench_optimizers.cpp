// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "demon/optimizers.hpp"

namespace {

demon::Vector gradient(std::size_t n) {
  demon::Vector g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = 1e-3 * static_cast<double>(i % 17) - 0.008;
  return g;
}

void BM_SgdmStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const demon::Vector g = gradient(n);
  demon::OptimizerState s(demon::Vector(n, 1.0));
  demon::StepHyper h;
  h.eta = 1e-3;
  h.beta = 0.9;
  for (auto _ : state) {
    s = demon::sgdm_step(std::move(s), g, h);
    benchmark::DoNotOptimize(s.theta.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SgdmStep)->Range(64, 1 << 16);

void BM_DemonSgdmStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const demon::Vector g = gradient(n);
  demon::OptimizerState s(demon::Vector(n, 1.0));
  std::uint64_t t = 0;
  for (auto _ : state) {
    s = demon::demon_sgdm_step(std::move(s), g, 1e-3, 0.9, t, 1000000, {});
    t = (t + 1) % 1000000;
    benchmark::DoNotOptimize(s.theta.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DemonSgdmStep)->Range(64, 1 << 16);

void BM_DemonAdamStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const demon::Vector g = gradient(n);
  demon::OptimizerState s(demon::Vector(n, 1.0));
  std::uint64_t t = 0;
  for (auto _ : state) {
    s = demon::demon_adam_step(std::move(s), g, 1e-4, 0.9, t, 1000000, {});
    t = (t + 1) % 1000000;
    benchmark::DoNotOptimize(s.theta.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DemonAdamStep)->Range(64, 1 << 16);

void BM_AdamStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const demon::Vector g = gradient(n);
  demon::OptimizerState s(demon::Vector(n, 1.0));
  demon::StepHyper h;
  h.eta = 1e-4;
  h.beta = 0.9;
  for (auto _ : state) {
    s = demon::adam_step(std::move(s), g, h);
    benchmark::DoNotOptimize(s.theta.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AdamStep)->Range(64, 1 << 16);

}  // namespace
