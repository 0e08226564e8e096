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

#include <vector>

#include <benchmark/benchmark.h>

#include "pdbrw/brw.hpp"
#include "pdbrw/rng.hpp"

namespace {

using namespace pdbrw;

void run_steps(benchmark::State& state, Engine engine, double beta) {
  BRWConfig c;
  c.n_particles = static_cast<std::size_t>(state.range(0));
  c.beta = beta;
  c.engine = engine;
  Rng rng(1);
  PopulationState s = PopulationState::from_positions(std::vector<double>(c.n_particles, 0.0));
  for (auto _ : state) {
    s = step(s, c, rng).state;
    benchmark::DoNotOptimize(s.x_eq);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StepDirectBeta2(benchmark::State& state) { run_steps(state, Engine::direct, 2.0); }
void BM_StepDirectBeta15(benchmark::State& state) { run_steps(state, Engine::direct, 1.5); }
void BM_StepPdExactBeta2(benchmark::State& state) { run_steps(state, Engine::pd_exact, 2.0); }
void BM_StepExponentialModel(benchmark::State& state) {
  run_steps(state, Engine::exponential_model, kInfiniteBeta);
}

BENCHMARK(BM_StepDirectBeta2)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StepDirectBeta15)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StepPdExactBeta2)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StepExponentialModel)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMicrosecond);

void BM_FirstSelectedCertified(benchmark::State& state) {
  BRWConfig c;
  c.n_particles = 50;
  c.beta = 2.0;
  c.truncation_epsilon = 1.0 / static_cast<double>(state.range(0));
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(first_selected_normalized_weight(c, rng));
}
BENCHMARK(BM_FirstSelectedCertified)->Arg(100)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
