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

#include "rankbench/dataio.hpp"

namespace rankbench {

enum class Alternative { kTwoSided, kLess, kGreater };

const char* to_string(Alternative a);
Alternative alternative_from_string(std::string_view s);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;  // e.g. "mann-whitney-u exact"
  Alternative alternative = Alternative::kTwoSided;
  int n1 = 0;
  int n2 = 0;
  bool exact = false;
};

// Exact path limits.
inline constexpr int kMannWhitneyExactMaxN = 12;  // n1 + n2, and no ties
inline constexpr int kWilcoxonExactMaxN = 20;     // nonzero differences

// Statistic is U for group_a (mid-ranks for ties). "less" tests whether
// group_a tends to be smaller than group_b.
TestResult mann_whitney_u(std::span<const double> group_a,
                          std::span<const double> group_b, Alternative alternative);

// (mean_a - mean_b) / pooled sd with an (n1 + n2 - 2) denominator. nullopt
// when the pooled sd is zero. Throws UsageError for groups smaller than 2.
std::optional<double> cohens_d_pooled(std::span<const double> group_a,
                                      std::span<const double> group_b);

// Statistic is W+, the rank sum of positive differences. Zero differences are
// dropped before ranking.
TestResult wilcoxon_signed_rank(std::span<const double> paired_diffs,
                                Alternative alternative);

struct BiomarkerResult {
  TestResult test;
  std::optional<double> cohens_d;  // sign: mean(mutant) - mean(wild type)
  int n_mutant = 0;
  int n_wild_type = 0;
};

// Mutant vs. wild-type responses of one drug. The default alternative is
// "mutant less than wild type".
BiomarkerResult biomarker_stratify(const ResponseTable& truth,
                                   const std::map<std::string, int>& mutation_status,
                                   std::string_view drug,
                                   Alternative alternative = Alternative::kLess);

// Mid-ranks (1-based) of the values.
std::vector<double> midranks(std::span<const double> values);

double normal_cdf(double z);

}  // namespace rankbench
