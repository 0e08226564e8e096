//
// Copyright 2026 The pdbrw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <span>
#include <vector>

#include <benchmark/benchmark.h>

#include "pdbrw/alias_table.hpp"
#include "pdbrw/coalescent.hpp"
#include "pdbrw/distributions.hpp"
#include "pdbrw/rng.hpp"

namespace {

using namespace pdbrw;

void BM_Exponential(benchmark::State& state) {
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(rng.exponential());
}
BENCHMARK(BM_Exponential);

void BM_BetaLog(benchmark::State& state) {
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_beta_log(0.5, 3.0, rng));
}
BENCHMARK(BM_BetaLog);

void BM_StickLogWeights(benchmark::State& state) {
  const PDParams p(0.5, 0.0);
  std::vector<double> log_v(static_cast<std::size_t>(state.range(0)));
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(stick_log_weights(p, log_v, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StickLogWeights)->RangeMultiplier(10)->Range(1000, 100000);

void BM_PPPTopK(benchmark::State& state) {
  Rng rng(4);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_ppp_top_k(k, rng).cutoff);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PPPTopK)->RangeMultiplier(10)->Range(100, 100000);

void BM_AliasTableBuild(benchmark::State& state) {
  std::vector<double> lw(static_cast<std::size_t>(state.range(0)));
  Rng rng(5);
  for (double& x : lw) x = -rng.exponential();
  for (auto _ : state) {
    AliasTable t(lw);
    benchmark::DoNotOptimize(t.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AliasTableBuild)->RangeMultiplier(10)->Range(100, 100000);

void BM_MergerProbabilities(benchmark::State& state) {
  Rng rng(6);
  const PDWeights w = sample_pd_weights(PDParams(0.5, 0.0), 10000, rng);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(merger_size_probabilities(w.theta, n));
}
BENCHMARK(BM_MergerProbabilities)->DenseRange(2, 8, 3);

}  // namespace

BENCHMARK_MAIN();
