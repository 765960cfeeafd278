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

#include "rankbench/leakage.hpp"
#include "rankbench/matching.hpp"
#include "rankbench/protocols.hpp"
#include "rankbench/synth.hpp"

namespace rb = rankbench;

static void BM_DrugBlindCv(benchmark::State& state) {
  auto c = rb::synth_preset("two-cluster", 5);
  c.n_drugs = static_cast<int>(state.range(0));
  const auto d = rb::generate(c);
  const auto data = d.aligned();
  rb::CvConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(rb::run_cv(data, cfg));
}
BENCHMARK(BM_DrugBlindCv)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_KShotCurve(benchmark::State& state) {
  const auto d = rb::generate(rb::synth_preset("two-cluster", 6));
  std::vector<rb::Observation> train, test;
  for (const auto& r : d.response.records()) (r.drug < "D081" ? train : test).push_back(r);
  const rb::ResponseTable tr(train), te(test);
  rb::KShotOptions opt;
  opt.k_list = {0, static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(rb::kshot_curve(tr, te, opt));
}
BENCHMARK(BM_KShotCurve)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_LeakageSimulation(benchmark::State& state) {
  const auto d = rb::generate(rb::synth_preset("noisy-leakage", 7));
  const auto data = d.aligned(true);
  rb::LeakageSimConfig cfg;
  cfg.learner.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rb::simulate_leakage(data, cfg));
}
BENCHMARK(BM_LeakageSimulation)->Arg(50)->Unit(benchmark::kMillisecond);
