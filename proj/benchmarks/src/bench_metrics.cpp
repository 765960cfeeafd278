/*
 * Copyright 2026 The rankbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include "rankbench/metrics.hpp"
#include "rankbench/models.hpp"
#include "rankbench/stats.hpp"
#include "rankbench/synth.hpp"

namespace rb = rankbench;

static rb::SynthDataset dataset(int drugs, int cells) {
  auto c = rb::synth_preset("dominance", 1);
  c.n_drugs = drugs;
  c.n_cells = cells;
  return rb::generate(c);
}

static void BM_PerDrugR(benchmark::State& state) {
  const auto d = dataset(static_cast<int>(state.range(0)), 300);
  const auto pred = d.true_signal();
  for (auto _ : state) benchmark::DoNotOptimize(rb::per_drug_r(pred, d.response));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(d.response.size()));
}
BENCHMARK(BM_PerDrugR)->Arg(50)->Arg(200);

static void BM_Decompose(benchmark::State& state) {
  const auto d = dataset(static_cast<int>(state.range(0)), 300);
  const auto pred = rb::drug_mean_predictor(d.response).predict(d.response);
  for (auto _ : state) benchmark::DoNotOptimize(rb::decompose_global_r(pred, d.response));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(d.response.size()));
}
BENCHMARK(BM_Decompose)->Arg(50)->Arg(200);

static void BM_MannWhitneyExact(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<double> a, b;
  for (int i = 0; i < n; ++i) {
    a.push_back(i * 0.37 - (i % 5));
    b.push_back(i * 0.41 + (i % 3));
  }
  for (auto _ : state) benchmark::DoNotOptimize(rb::mann_whitney_u(a, b, rb::Alternative::kLess));
}
BENCHMARK(BM_MannWhitneyExact)->Arg(10)->Arg(40);
