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

#include "rankbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rankbench/error.hpp"
#include "rankbench/metrics.hpp"

namespace rankbench {
namespace {

// Sum of t^3 - t over tie groups.
double tie_term(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double term = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double t = static_cast<double>(j - i);
    term += t * t * t - t;
    i = j;
  }
  return term;
}

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

// Continuity-corrected normal tail probabilities around mu.
double normal_p(double stat, double mu, double sigma, Alternative alt) {
  if (sigma <= 0.0) return 1.0;
  switch (alt) {
    case Alternative::kLess: return clamp_p(normal_cdf((stat - mu + 0.5) / sigma));
    case Alternative::kGreater: return clamp_p(1.0 - normal_cdf((stat - mu - 0.5) / sigma));
    case Alternative::kTwoSided: {
      const double z = std::max(0.0, (std::abs(stat - mu) - 0.5) / sigma);
      return clamp_p(2.0 * (1.0 - normal_cdf(z)));
    }
  }
  return 1.0;
}

// Exact tail probabilities from a distribution over integer statistic values
// (counts indexed by value).
double exact_p(const std::vector<double>& counts, long observed, Alternative alt) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double le = 0.0;
  double ge = 0.0;
  for (long s = 0; s < static_cast<long>(counts.size()); ++s) {
    if (s <= observed) le += counts[static_cast<std::size_t>(s)];
    if (s >= observed) ge += counts[static_cast<std::size_t>(s)];
  }
  le /= total;
  ge /= total;
  switch (alt) {
    case Alternative::kLess: return clamp_p(le);
    case Alternative::kGreater: return clamp_p(ge);
    case Alternative::kTwoSided: return clamp_p(2.0 * std::min(le, ge));
  }
  return 1.0;
}

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw UsageError(std::string(what) + " contains non-finite values");
  }
}

}  // namespace

const char* to_string(Alternative a) {
  switch (a) {
    case Alternative::kTwoSided: return "two-sided";
    case Alternative::kLess: return "less";
    case Alternative::kGreater: return "greater";
  }
  return "two-sided";
}

Alternative alternative_from_string(std::string_view s) {
  if (s == "two-sided") return Alternative::kTwoSided;
  if (s == "less") return Alternative::kLess;
  if (s == "greater") return Alternative::kGreater;
  throw UsageError("unknown alternative '" + std::string(s) + "' (two-sided|less|greater)");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // average of i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

TestResult mann_whitney_u(std::span<const double> group_a, std::span<const double> group_b,
                          Alternative alternative) {
  if (group_a.empty() || group_b.empty()) throw UsageError("mann-whitney: empty group");
  require_finite(group_a, "group_a");
  require_finite(group_b, "group_b");

  const int n1 = static_cast<int>(group_a.size());
  const int n2 = static_cast<int>(group_b.size());
  const int n = n1 + n2;
  std::vector<double> pooled(group_a.begin(), group_a.end());
  pooled.insert(pooled.end(), group_b.begin(), group_b.end());
  const auto ranks = midranks(pooled);
  const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + n1, 0.0);
  const double u = rank_sum - n1 * (n1 + 1) / 2.0;
  const double ties = tie_term(pooled);

  TestResult result;
  result.statistic = u;
  result.alternative = alternative;
  result.n1 = n1;
  result.n2 = n2;

  if (n <= kMannWhitneyExactMaxN && ties == 0.0) {
    // counts[k][s]: subsets of size k of ranks seen so far with rank sum s.
    const int max_sum = n * (n + 1) / 2;
    std::vector<std::vector<double>> counts(
        static_cast<std::size_t>(n1) + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    counts[0][0] = 1.0;
    for (int rank = 1; rank <= n; ++rank) {
      for (int k = std::min(rank, n1); k >= 1; --k) {
        for (int s = max_sum; s >= rank; --s) {
          counts[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] +=
              counts[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(s - rank)];
        }
      }
    }
    // Shift rank sums to U values.
    const int offset = n1 * (n1 + 1) / 2;
    std::vector<double> u_counts(static_cast<std::size_t>(n1 * n2) + 1, 0.0);
    for (int s = offset; s <= max_sum; ++s) {
      const int uu = s - offset;
      if (uu <= n1 * n2) {
        u_counts[static_cast<std::size_t>(uu)] +=
            counts[static_cast<std::size_t>(n1)][static_cast<std::size_t>(s)];
      }
    }
    result.p_value = exact_p(u_counts, std::lround(u), alternative);
    result.exact = true;
    result.method = "mann-whitney-u exact";
    return result;
  }

  const double mu = n1 * static_cast<double>(n2) / 2.0;
  const double var = n1 * static_cast<double>(n2) / 12.0 *
                     ((n + 1.0) - ties / (static_cast<double>(n) * (n - 1.0)));
  result.p_value = normal_p(u, mu, std::sqrt(std::max(var, 0.0)), alternative);
  result.method = "mann-whitney-u normal approximation, tie and continuity corrected";
  return result;
}

std::optional<double> cohens_d_pooled(std::span<const double> group_a,
                                      std::span<const double> group_b) {
  if (group_a.size() < 2 || group_b.size() < 2) {
    throw UsageError("cohen's d: each group needs at least 2 values");
  }
  const double n1 = static_cast<double>(group_a.size());
  const double n2 = static_cast<double>(group_b.size());
  const double sa = sample_sd(group_a);
  const double sb = sample_sd(group_b);
  const double pooled_var = ((n1 - 1.0) * sa * sa + (n2 - 1.0) * sb * sb) / (n1 + n2 - 2.0);
  if (!(pooled_var > 0.0)) return std::nullopt;
  return (mean(group_a) - mean(group_b)) / std::sqrt(pooled_var);
}

TestResult wilcoxon_signed_rank(std::span<const double> paired_diffs,
                                Alternative alternative) {
  require_finite(paired_diffs, "paired_diffs");
  std::vector<double> nonzero;
  for (double d : paired_diffs) {
    if (d != 0.0) nonzero.push_back(d);
  }
  if (nonzero.empty()) throw DataError("wilcoxon: all differences are zero");

  const int n = static_cast<int>(nonzero.size());
  std::vector<double> magnitudes(nonzero.size());
  std::transform(nonzero.begin(), nonzero.end(), magnitudes.begin(),
                 [](double d) { return std::abs(d); });
  const auto ranks = midranks(magnitudes);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    if (nonzero[i] > 0.0) w_plus += ranks[i];
  }

  TestResult result;
  result.statistic = w_plus;
  result.alternative = alternative;
  result.n1 = n;
  result.n2 = 0;

  if (n <= kWilcoxonExactMaxN) {
    // Mid-ranks are multiples of 1/2, so doubled ranks are integers. The
    // conditional distribution of 2 W+ over all 2^n sign patterns.
    std::vector<long> doubled(ranks.size());
    long total = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      doubled[i] = std::lround(2.0 * ranks[i]);
      total += doubled[i];
    }
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    for (long r : doubled) {
      for (long s = total; s >= r; --s) {
        counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - r)];
      }
    }
    result.p_value = exact_p(counts, std::lround(2.0 * w_plus), alternative);
    result.exact = true;
    result.method = "wilcoxon-signed-rank exact, zeros dropped";
    return result;
  }

  const double nd = n;
  const double mu = nd * (nd + 1.0) / 4.0;
  const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term(magnitudes) / 48.0;
  result.p_value = normal_p(w_plus, mu, std::sqrt(std::max(var, 0.0)), alternative);
  result.method =
      "wilcoxon-signed-rank normal approximation, tie and continuity corrected, zeros dropped";
  return result;
}

BiomarkerResult biomarker_stratify(const ResponseTable& truth,
                                   const std::map<std::string, int>& mutation_status,
                                   std::string_view drug, Alternative alternative) {
  const auto block = truth.drug_records(drug);
  if (block.empty()) throw DataError("drug '" + std::string(drug) + "' has no responses");
  std::vector<double> mutant, wild;
  for (const auto& o : block) {
    const auto it = mutation_status.find(o.cell);
    if (it == mutation_status.end()) continue;
    (it->second == 1 ? mutant : wild).push_back(o.value);
  }
  if (mutant.empty()) throw DataError("mutant stratum is empty for drug '" + std::string(drug) + "'");
  if (wild.empty()) throw DataError("wild-type stratum is empty for drug '" + std::string(drug) + "'");

  BiomarkerResult out;
  out.test = mann_whitney_u(mutant, wild, alternative);
  if (mutant.size() >= 2 && wild.size() >= 2) out.cohens_d = cohens_d_pooled(mutant, wild);
  out.n_mutant = static_cast<int>(mutant.size());
  out.n_wild_type = static_cast<int>(wild.size());
  return out;
}

}  // namespace rankbench
