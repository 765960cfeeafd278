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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rankbench/dataio.hpp"

namespace rankbench {

// Pilot observations of one held-out drug. Truth on eval cells is not part of
// the task, so matching cannot read it.
struct KShotTask {
  std::string test_drug;
  std::vector<std::string> observed_cells;
  std::vector<double> observed_values;
  std::vector<std::string> eval_cells;
};

struct MatchedDrug {
  std::string drug;
  double correlation = 0.0;
  double weight = 0.0;  // max(correlation, 0)
};

struct MatchSet {
  std::vector<MatchedDrug> matched;  // by |correlation| desc, then drug id
  int n = 5;
  bool empty = true;  // no positive weight; predictions are the prior
};

struct MatchResult {
  PredictionTable predictions;  // one row per eval cell
  MatchSet matches;
  std::size_t fallback_cells = 0;  // eval cells served by the cell-mean prior
};

// Top-n profile transfer. Throws DataError when K < min_overlap.
MatchResult match_predict(const ResponseTable& train, const KShotTask& task, int n = 5,
                          int min_overlap = 2);

// Per-drug convex blend (1 - w) * prior + w * matched. With `standardize`,
// each component is first scaled to zero mean and unit sd within the drug.
PredictionTable blend(const PredictionTable& prior, const PredictionTable& matched, double w,
                      bool standardize = true);

// {0.0, 0.1, ..., 1.0}
std::vector<double> default_blend_grid();

struct KShotOptions {
  std::vector<int> k_list = {0, 1, 3, 5, 10, 20, 50};
  int trials = 5;
  int inner_trials = 2;
  int n = 5;
  int min_overlap = 2;
  std::size_t min_obs = 5;
  std::vector<double> grid = default_blend_grid();
  std::uint64_t seed = 42;
  bool standardize = true;
};

// Inner selection on training drugs only: each drug is held out in turn and
// matched against the others. Ties go to the smaller weight.
double select_blend_weight(const ResponseTable& train, int k, const KShotOptions& options);

struct CurvePoint {
  int k = 0;
  double selected_w = 0.0;
  double per_drug_r_mean = 0.0;
  double per_drug_r_sd = 0.0;
  std::size_t n_drugs = 0;
  std::size_t n_skipped = 0;  // too few cells, or no defined r in any trial
  std::size_t n_tasks = 0;
  std::size_t n_fallback_cells = 0;
  std::size_t n_empty_matches = 0;
};

struct BlendCurve {
  std::vector<CurvePoint> points;  // ascending k
  KShotOptions options;

  const CurvePoint* at(int k) const;
};

BlendCurve kshot_curve(const ResponseTable& train, const ResponseTable& test,
                       const KShotOptions& options = {});

// Observed K-vectors are shuffled across test drugs by a derangement before
// matching; everything else matches kshot_curve at the same k.
CurvePoint permuted_pairing_control(const ResponseTable& train, const ResponseTable& test,
                                    int k = 50, const KShotOptions& options = {});

}  // namespace rankbench
