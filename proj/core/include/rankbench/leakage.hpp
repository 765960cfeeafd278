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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rankbench/dataio.hpp"

namespace rankbench {

// Records of one split with their feature rows (x.rows() == records.size()).
// Record values are the truth.
struct RecordSplit {
  std::vector<Observation> records;
  Eigen::MatrixXd x;
};

struct LearnerConfig {
  double lr = 0.05;
  int epochs = 50;
  double alpha = 1.0;
};

struct EpochRecord {
  int epoch = 0;
  std::vector<double> val;   // aligned with EpochTrace::val_truth
  std::vector<double> test;  // aligned with EpochTrace::test_truth
};

struct EpochTrace {
  std::vector<Observation> val_truth;
  std::vector<Observation> test_truth;
  std::vector<EpochRecord> epochs;  // epochs 1..n
  LearnerConfig config;

  PredictionTable val_predictions(std::size_t i) const;
  PredictionTable test_predictions(std::size_t i) const;
};

// Full-batch gradient descent from zero on
//   (1/2n) |y - Xw - b|^2 + (alpha/2n) |w|^2,
// whose fixed point is the closed-form ridge solution with an unpenalized
// intercept. Throws NumericalError when the loss stops being finite.
EpochTrace iterative_learner_trace(const RecordSplit& train, const RecordSplit& val,
                                   const RecordSplit& test, const LearnerConfig& config);

enum class CheckpointPolicy { kValidationMax, kTestMax, kLast };

const char* to_string(CheckpointPolicy p);

// Argmax (earliest on ties) of a per-epoch metric; epochs are 1-based.
int select_checkpoint(std::span<const std::optional<double>> metric_by_epoch);

// Computes only the policy's own split metric, then selects.
int select_checkpoint(const EpochTrace& trace, CheckpointPolicy policy);

// Global r of one split's predictions per epoch.
std::vector<std::optional<double>> global_r_by_epoch(const EpochTrace& trace, bool test_split);

struct FoldLeakage {
  int fair_epoch = 0;
  int snooped_epoch = 0;
  int last_epoch = 0;
  double fair_global_r = 0.0;
  double snooped_global_r = 0.0;
  double last_global_r = 0.0;
  double fair_per_drug_r = 0.0;
  double snooped_per_drug_r = 0.0;
  double last_per_drug_r = 0.0;
};

struct LeakageReport {
  double fair_global_r = 0.0;
  double snooped_global_r = 0.0;
  double last_epoch_global_r = 0.0;
  double fair_per_drug_r = 0.0;
  double snooped_per_drug_r = 0.0;
  double last_epoch_per_drug_r = 0.0;
  double snoop_inflation = 0.0;     // snooped - fair, mean over folds
  double per_drug_inflation = 0.0;  // same for per-drug r
  double best_fold_global_r = 0.0;  // max single-fold snooped global r
  double mean_fold_global_r = 0.0;  // mean single-fold snooped global r
  double best_fold_inflation = 0.0;
  std::vector<FoldLeakage> folds;
};

LeakageReport inflation_report(std::span<const EpochTrace> folds, int min_obs = 5);

struct LeakageSimConfig {
  int folds = 10;
  double val_fraction = 0.1;  // of each fold's training drugs
  LearnerConfig learner;
  std::uint64_t seed = 42;
};

// Drug-blind folds; features are [standardized cell features | standardized
// drug features]. Requires drug features.
LeakageReport simulate_leakage(const AlignedDataset& data, const LeakageSimConfig& config);

}  // namespace rankbench
