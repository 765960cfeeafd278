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

// Independent reference computations used as test oracles. They favour
// directness over speed and share no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace rankbench::oracle {

// Two-pass Pearson in long double.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Population covariance by a double loop over all pairs:
// cov = (1 / 2n^2) * sum_i sum_j (x_i - x_j)(y_i - y_j).
inline double pairwise_cov(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s += (x[i] - x[j]) * static_cast<long double>(y[i] - y[j]);
  }
  return static_cast<double>(s / (2.0L * n * n));
}

// Mid-ranks by counting: rank = #less + (#equal + 1) / 2.
inline std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

struct TailProbabilities {
  double le = 0.0;
  double ge = 0.0;
};

// Exact Mann-Whitney tails for U of group a, by enumerating every split of
// the pooled ranks into groups of sizes n1 and n2.
inline TailProbabilities mann_whitney_enumeration(const std::vector<double>& a,
                                                  const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const std::size_t n = pooled.size(), n1 = a.size();
  const double offset = n1 * (n1 + 1) / 2.0;
  double observed = 0;
  for (std::size_t i = 0; i < n1; ++i) observed += ranks[i];
  observed -= offset;

  std::vector<int> pick(n, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n1), 1);
  std::sort(pick.begin(), pick.end());
  std::uint64_t total = 0, le = 0, ge = 0;
  do {
    double u = -offset;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) u += ranks[i];
    }
    ++total;
    if (u <= observed + 1e-9) ++le;
    if (u >= observed - 1e-9) ++ge;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return {static_cast<double>(le) / total, static_cast<double>(ge) / total};
}

// Exact signed-rank tails for W+, by enumerating all 2^n sign patterns of the
// nonzero differences' absolute mid-ranks.
inline TailProbabilities wilcoxon_enumeration(const std::vector<double>& diffs) {
  std::vector<double> nonzero, magnitudes;
  for (double d : diffs) {
    if (d != 0.0) {
      nonzero.push_back(d);
      magnitudes.push_back(std::abs(d));
    }
  }
  const auto ranks = midranks(magnitudes);
  double observed = 0;
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    if (nonzero[i] > 0) observed += ranks[i];
  }
  const std::size_t n = nonzero.size();
  const std::uint64_t patterns = std::uint64_t{1} << n;
  std::vector<double> w(patterns, 0.0);
  std::uint64_t le = 0, ge = 0;
  for (std::uint64_t m = 0; m < patterns; ++m) {
    if (m) w[m] = w[m & (m - 1)] + ranks[static_cast<std::size_t>(__builtin_ctzll(m))];
    if (w[m] <= observed + 1e-9) ++le;
    if (w[m] >= observed - 1e-9) ++ge;
  }
  return {static_cast<double>(le) / patterns, static_cast<double>(ge) / patterns};
}

// Two-sided binomial(n, 1/2) sign-test p-value for k successes.
inline double sign_test_p(int k, int n) {
  auto pmf = [n](int i) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                    n * std::log(2.0));
  };
  const int extreme = std::max(k, n - k);
  double tail = 0;
  for (int i = extreme; i <= n; ++i) tail += pmf(i);
  return std::min(1.0, 2.0 * tail);
}

}  // namespace rankbench::oracle
