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

#include <Eigen/Dense>

#include "rankbench/dataio.hpp"

namespace rankbench {

// Generator: y[d,c] = mu_d + s_d * (u_d . z_c) + eps[d,c].
struct SynthConfig {
  std::string preset = "custom";
  int n_drugs = 100;
  int n_cells = 300;
  int latent_dim = 10;
  double sigma_between = 1.0;  // sd of mu_d
  double signal_scale_mean = 1.0;  // s_d ~ max(0, N(mean, sd))
  double signal_scale_sd = 0.0;
  int n_clusters = 1;
  double within_cluster_angle_deg = 30.0;
  // Share of each cluster base along one common axis, in [0, 1].
  double shared_axis_weight = 0.0;
  double sigma_noise = 1.0;
  int n_distractor_features = 0;
  // Drug feature matrix: a noisy potency column (standardized mu latent plus
  // N(0, potency_noise^2)) followed by pure-noise columns.
  double potency_noise = 0.0;
  int n_drug_distractors = 0;
  std::uint64_t seed = 42;
};

// Throws UsageError for an invalid configuration.
void validate(const SynthConfig& config);

std::vector<std::string> synth_preset_names();
// dominance, two-cluster, no-analog, noisy-leakage.
SynthConfig synth_preset(std::string_view name, std::uint64_t seed = 42);

struct SynthGroundTruth {
  std::vector<std::string> drugs;
  std::vector<std::string> cells;
  Eigen::VectorXd mu;
  Eigen::VectorXd scale;
  Eigen::MatrixXd directions;  // n_drugs x L, unit rows
  Eigen::MatrixXd latent;      // n_cells x L
  Eigen::MatrixXd cluster_bases;  // n_clusters x L
  std::vector<int> cluster;
  // Attainable per-drug r of the noise-free signal.
  Eigen::VectorXd ceiling;
};

struct SynthDataset {
  SynthConfig config;
  ResponseTable response;
  FeatureMatrix cell_features;
  FeatureMatrix drug_features;
  MoaMap moa;
  SynthGroundTruth truth;

  AlignedDataset aligned(bool with_drug_features = false) const;
  // mu_d + s_d * (u_d . z_c) for every (drug, cell).
  PredictionTable true_signal() const;
};

SynthDataset generate(const SynthConfig& config);

}  // namespace rankbench
