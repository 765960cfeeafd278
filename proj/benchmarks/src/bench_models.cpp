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

#include <random>
#include <vector>

#include "rankbench/models.hpp"
#include "rankbench/synth.hpp"

namespace rb = rankbench;

static void BM_RidgeDense(benchmark::State& state) {
  const auto n = state.range(0), p = state.range(1);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, p);
  std::vector<double> y(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = nd(rng);
    y[static_cast<std::size_t>(i)] = x(i, 0) + nd(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(rb::ridge_fit(x, y, 1.0));
}
BENCHMARK(BM_RidgeDense)->Args({2000, 50})->Args({5000, 200});

// Cell-by-drug design with the rows left implicit.
static void BM_RidgeFactored(benchmark::State& state) {
  auto c = rb::synth_preset("noisy-leakage", 2);
  c.n_drugs = static_cast<int>(state.range(0));
  c.n_cells = 300;
  const auto d = rb::generate(c);
  const auto& cells = d.cell_features.values();
  const auto& drugs = d.drug_features.values();
  rb::FactoredDesign design{&cells, &drugs, {}, {}};
  std::vector<double> y;
  for (const auto& r : d.response.records()) {
    design.cell_of_row.push_back(d.cell_features.row_of(r.cell).value());
    design.drug_of_row.push_back(d.drug_features.row_of(r.drug).value());
    y.push_back(r.value);
  }
  for (auto _ : state) benchmark::DoNotOptimize(rb::ridge_fit(design, y, 1.0));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(y.size()));
}
BENCHMARK(BM_RidgeFactored)->Arg(100)->Arg(400);

static void BM_Pca(benchmark::State& state) {
  auto c = rb::synth_preset("noisy-leakage", 4);
  c.n_cells = 500;
  c.n_distractor_features = 200;
  const auto d = rb::generate(c);
  for (auto _ : state) benchmark::DoNotOptimize(rb::pca_fit(d.cell_features, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Pca)->Arg(20)->Arg(100);
