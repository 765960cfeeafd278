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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankbench/dataio.hpp"

namespace rankbench {

// Population (n-denominator) moments are used throughout this module.

// Mean that is exact for constant inputs.
double mean(std::span<const double> x);

// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_sd(std::span<const double> x);

// Sample Pearson correlation; nullopt when either input has zero variance.
// Throws UsageError on length mismatch or fewer than 2 points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

enum class ZeroVariancePolicy { kZero, kSkip };

const char* to_string(ZeroVariancePolicy p);
ZeroVariancePolicy zero_variance_policy_from_string(std::string_view s);

struct MetricOptions {
  int min_obs = 5;
  ZeroVariancePolicy zero_variance = ZeroVariancePolicy::kZero;
};

struct MetricReport {
  std::optional<double> global_r;
  double per_drug_r_mean = 0.0;
  double per_drug_r_sd = 0.0;  // n - 1 denominator across drugs
  int n_drugs_evaluated = 0;
  int n_drugs_skipped = 0;
  std::map<std::string, double> per_drug_values;
  std::vector<std::string> skipped_drugs;
  std::optional<double> per_drug_r_min;
  std::optional<double> per_drug_r_max;
  MetricOptions options;
};

struct DecompositionReport {
  double cov_total = 0.0;
  double cov_between = 0.0;
  double cov_within = 0.0;
  double cov_cross_1 = 0.0;  // Cov(truth drug mean, prediction residual)
  double cov_cross_2 = 0.0;  // Cov(truth residual, prediction drug mean)
  double sigma_y = 0.0;
  double sigma_pred = 0.0;
  double sigma_between_y = 0.0;
  double sigma_within_y = 0.0;
  double sigma_between_pred = 0.0;
  double sigma_within_pred = 0.0;
  std::optional<double> r_between;
  std::optional<double> r_within;
  double omega_b = 0.0;
  double omega_w = 0.0;
  std::optional<double> global_r_exact;
  double global_r_approx = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_drugs = 0;
};

// Predictions joined to truth, grouped by drug. Every prediction key must be
// present in the truth table.
struct PairedValues {
  std::vector<std::string> drugs;
  std::vector<std::size_t> offsets;  // drugs.size() + 1
  std::vector<double> truth;
  std::vector<double> pred;

  std::span<const double> drug_truth(std::size_t d) const {
    return std::span<const double>(truth).subspan(offsets[d], offsets[d + 1] - offsets[d]);
  }
  std::span<const double> drug_pred(std::size_t d) const {
    return std::span<const double>(pred).subspan(offsets[d], offsets[d + 1] - offsets[d]);
  }
};

PairedValues pair_with_truth(const KeyedTable& pred, const KeyedTable& truth);

std::optional<double> global_r(const KeyedTable& pred, const KeyedTable& truth);

MetricReport per_drug_r(const KeyedTable& pred, const KeyedTable& truth,
                        const MetricOptions& options = {});

DecompositionReport decompose_global_r(const KeyedTable& pred, const KeyedTable& truth);

// Per-drug agreement between two assays of the same drugs, restricted to the
// anchor drugs. Anchors missing from either table or short of min_obs shared
// cells are listed in skipped_drugs.
MetricReport replicate_concordance(const ResponseTable& a, const ResponseTable& b,
                                   std::span<const std::string> anchor_drugs,
                                   int min_obs = 5);

struct ProfileConcordance {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator over pairs
  int n_pairs = 0;
};

// Mean pairwise profile correlation among drugs of one class.
ProfileConcordance profile_concordance(const ResponseTable& truth, const MoaMap& moa,
                                       std::string_view class_label, int min_obs = 5);

}  // namespace rankbench
