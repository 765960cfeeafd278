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

#include "rankbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rankbench/error.hpp"

namespace rankbench {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool all_equal(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

// Population variance, with rounding-level spread of a constant vector
// treated as exactly zero.
double population_variance(std::span<const double> x) {
  if (x.empty() || all_equal(x)) return 0.0;
  const double mu = mean(x);
  long double ss = 0.0L;
  for (double v : x) ss += static_cast<long double>(v - mu) * (v - mu);
  const double var = static_cast<double>(ss / static_cast<long double>(x.size()));
  const double floor = 8.0 * kEps * max_abs(x);
  return var <= floor * floor ? 0.0 : var;
}

double population_cov(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  long double s = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += static_cast<long double>(x[i] - mx) * (y[i] - my);
  }
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

double clamp_r(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  if (all_equal(x)) return x.front();
  long double s = 0.0L;
  for (double v : x) s += v;
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double mu = mean(x);
  long double ss = 0.0L;
  for (double v : x) ss += static_cast<long double>(v - mu) * (v - mu);
  return std::sqrt(static_cast<double>(ss / static_cast<long double>(x.size() - 1)));
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("pearson: length mismatch");
  if (x.size() < 2) throw UsageError("pearson: need at least 2 points");
  const double vx = population_variance(x);
  const double vy = population_variance(y);
  if (vx == 0.0 || vy == 0.0) return std::nullopt;
  return clamp_r(population_cov(x, y) / std::sqrt(vx * vy));
}

const char* to_string(ZeroVariancePolicy p) {
  return p == ZeroVariancePolicy::kZero ? "zero" : "skip";
}

ZeroVariancePolicy zero_variance_policy_from_string(std::string_view s) {
  if (s == "zero") return ZeroVariancePolicy::kZero;
  if (s == "skip") return ZeroVariancePolicy::kSkip;
  throw UsageError("unknown zero-variance policy '" + std::string(s) + "' (zero|skip)");
}

PairedValues pair_with_truth(const KeyedTable& pred, const KeyedTable& truth) {
  PairedValues out;
  out.truth.reserve(pred.size());
  out.pred.reserve(pred.size());
  for (std::size_t d = 0; d < pred.drugs().size(); ++d) {
    const auto p_block = pred.drug_records(d);
    const auto t_block = truth.drug_records(pred.drugs()[d]);
    std::size_t t = 0;
    for (const auto& p : p_block) {
      while (t < t_block.size() && t_block[t].cell < p.cell) ++t;
      if (t == t_block.size() || t_block[t].cell != p.cell) {
        throw DataError("prediction key (" + p.drug + ", " + p.cell +
                        ") is absent from the evaluation table");
      }
      out.truth.push_back(t_block[t].value);
      out.pred.push_back(p.value);
    }
    out.drugs.push_back(pred.drugs()[d]);
    out.offsets.push_back(out.truth.size() - p_block.size());
  }
  out.offsets.push_back(out.truth.size());
  return out;
}

std::optional<double> global_r(const KeyedTable& pred, const KeyedTable& truth) {
  const PairedValues paired = pair_with_truth(pred, truth);
  if (paired.truth.size() < 2) throw DataError("global r needs at least 2 shared pairs");
  return pearson(paired.pred, paired.truth);
}

namespace {

void summarize(MetricReport& report) {
  std::vector<double> values;
  values.reserve(report.per_drug_values.size());
  for (const auto& [d, r] : report.per_drug_values) values.push_back(r);
  report.n_drugs_evaluated = static_cast<int>(values.size());
  report.n_drugs_skipped = static_cast<int>(report.skipped_drugs.size());
  if (values.empty()) return;
  report.per_drug_r_mean = mean(values);
  report.per_drug_r_sd = sample_sd(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  report.per_drug_r_min = *lo;
  report.per_drug_r_max = *hi;
}

}  // namespace

MetricReport per_drug_r(const KeyedTable& pred, const KeyedTable& truth,
                        const MetricOptions& options) {
  if (options.min_obs < 2) throw UsageError("min_obs must be at least 2");
  const PairedValues paired = pair_with_truth(pred, truth);
  MetricReport report;
  report.options = options;
  if (paired.truth.size() >= 2) report.global_r = pearson(paired.pred, paired.truth);

  std::size_t max_available = 0;
  for (std::size_t d = 0; d < paired.drugs.size(); ++d) {
    const auto t = paired.drug_truth(d);
    const auto p = paired.drug_pred(d);
    max_available = std::max(max_available, t.size());
    const std::string& drug = paired.drugs[d];
    if (t.size() < static_cast<std::size_t>(options.min_obs)) {
      report.skipped_drugs.push_back(drug);
      continue;
    }
    if (population_variance(t) == 0.0) {
      report.skipped_drugs.push_back(drug);
      continue;
    }
    if (population_variance(p) == 0.0) {
      if (options.zero_variance == ZeroVariancePolicy::kZero) {
        report.per_drug_values[drug] = 0.0;
      } else {
        report.skipped_drugs.push_back(drug);
      }
      continue;
    }
    report.per_drug_values[drug] = *pearson(p, t);
  }
  if (max_available < static_cast<std::size_t>(options.min_obs)) {
    throw DataError("no drug has min_obs=" + std::to_string(options.min_obs) +
                    " shared cells (max available " + std::to_string(max_available) + ")");
  }
  if (report.per_drug_values.empty()) {
    throw DataError("no drug could be evaluated (all skipped for zero variance)");
  }
  summarize(report);
  return report;
}

namespace {

// Cov(drug mean of a, residual of b) in grouped form:
//   (1/n) * sum_d (mean_d - grand) * sum_c resid_dc.
// Each residual sum is zero up to the rounding of the drug mean; sums inside
// that bound are taken as exactly zero.
double cross_term(const PairedValues& paired, std::span<const double> drug_mean,
                  std::span<const double> resid, std::span<const double> raw) {
  const std::size_t n = resid.size();
  const double grand = mean(drug_mean);
  long double acc = 0.0L;
  for (std::size_t d = 0; d < paired.drugs.size(); ++d) {
    long double sum = 0.0L, magnitude = 0.0L;
    for (std::size_t i = paired.offsets[d]; i < paired.offsets[d + 1]; ++i) {
      sum += resid[i];
      magnitude += std::abs(raw[i]);
    }
    const auto m = static_cast<long double>(paired.offsets[d + 1] - paired.offsets[d]);
    const long double bound = 4.0L * m * std::numeric_limits<double>::epsilon() * magnitude;
    if (std::abs(sum) <= bound) continue;
    acc += (static_cast<long double>(drug_mean[paired.offsets[d]]) - grand) * sum;
  }
  return static_cast<double>(acc / static_cast<long double>(n));
}

}  // namespace

DecompositionReport decompose_global_r(const KeyedTable& pred, const KeyedTable& truth) {
  const PairedValues paired = pair_with_truth(pred, truth);
  const std::size_t n = paired.truth.size();
  if (paired.drugs.size() < 2) throw DataError("decomposition needs at least 2 drugs");
  if (n < 2) throw DataError("decomposition needs at least 2 shared pairs");

  std::vector<double> mean_y(n), mean_p(n), resid_y(n), resid_p(n);
  for (std::size_t d = 0; d < paired.drugs.size(); ++d) {
    const double my = mean(paired.drug_truth(d));
    const double mp = mean(paired.drug_pred(d));
    for (std::size_t i = paired.offsets[d]; i < paired.offsets[d + 1]; ++i) {
      mean_y[i] = my;
      mean_p[i] = mp;
      resid_y[i] = paired.truth[i] - my;
      resid_p[i] = paired.pred[i] - mp;
    }
  }

  DecompositionReport r;
  r.n_pairs = n;
  r.n_drugs = paired.drugs.size();
  r.cov_total = population_cov(paired.truth, paired.pred);
  r.cov_between = population_cov(mean_y, mean_p);
  r.cov_cross_1 = cross_term(paired, mean_y, resid_p, paired.pred);
  r.cov_cross_2 = cross_term(paired, mean_p, resid_y, paired.truth);
  r.cov_within = population_cov(resid_y, resid_p);

  const double var_y = population_variance(paired.truth);
  if (var_y == 0.0) throw DataError("truth has zero variance; decomposition undefined");
  const double var_p = population_variance(paired.pred);
  r.sigma_y = std::sqrt(var_y);
  r.sigma_pred = std::sqrt(var_p);
  r.sigma_between_y = std::sqrt(population_variance(mean_y));
  r.sigma_within_y = std::sqrt(population_variance(resid_y));
  r.sigma_between_pred = std::sqrt(population_variance(mean_p));
  r.sigma_within_pred = std::sqrt(population_variance(resid_p));

  if (var_p > 0.0) {
    const double denom = r.sigma_y * r.sigma_pred;
    r.global_r_exact = clamp_r(r.cov_total / denom);
    r.omega_b = r.sigma_between_y * r.sigma_between_pred / denom;
    r.omega_w = r.sigma_within_y * r.sigma_within_pred / denom;
    if (r.sigma_between_y > 0.0 && r.sigma_between_pred > 0.0) {
      r.r_between = clamp_r(r.cov_between / (r.sigma_between_y * r.sigma_between_pred));
    }
    if (r.sigma_within_y > 0.0 && r.sigma_within_pred > 0.0) {
      r.r_within = clamp_r(r.cov_within / (r.sigma_within_y * r.sigma_within_pred));
    }
  }
  r.global_r_approx = r.omega_b * r.r_between.value_or(0.0) +
                      r.omega_w * r.r_within.value_or(0.0);
  return r;
}

MetricReport replicate_concordance(const ResponseTable& a, const ResponseTable& b,
                                   std::span<const std::string> anchor_drugs,
                                   int min_obs) {
  MetricReport report;
  report.options.min_obs = min_obs;
  std::vector<std::string> anchors(anchor_drugs.begin(), anchor_drugs.end());
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  for (const auto& drug : anchors) {
    const auto ra = a.drug_records(drug);
    const auto rb = b.drug_records(drug);
    std::vector<double> xa, xb;
    std::size_t j = 0;
    for (const auto& o : ra) {
      while (j < rb.size() && rb[j].cell < o.cell) ++j;
      if (j < rb.size() && rb[j].cell == o.cell) {
        xa.push_back(o.value);
        xb.push_back(rb[j].value);
      }
    }
    if (xa.size() < static_cast<std::size_t>(std::max(min_obs, 2))) {
      report.skipped_drugs.push_back(drug);
      continue;
    }
    const auto r = pearson(xa, xb);
    if (!r) {
      report.skipped_drugs.push_back(drug);
      continue;
    }
    report.per_drug_values[drug] = *r;
  }
  summarize(report);
  return report;
}

ProfileConcordance profile_concordance(const ResponseTable& truth, const MoaMap& moa,
                                       std::string_view class_label, int min_obs) {
  std::vector<std::string> members;
  for (const auto& d : moa.members(class_label)) {
    if (!truth.drug_records(d).empty()) members.push_back(d);
  }
  if (members.size() < 2) {
    throw DataError("class '" + std::string(class_label) +
                    "' has fewer than 2 drugs with responses");
  }
  std::vector<double> rs;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t k = i + 1; k < members.size(); ++k) {
      const auto ri = truth.drug_records(members[i]);
      const auto rk = truth.drug_records(members[k]);
      std::vector<double> xi, xk;
      std::size_t j = 0;
      for (const auto& o : ri) {
        while (j < rk.size() && rk[j].cell < o.cell) ++j;
        if (j < rk.size() && rk[j].cell == o.cell) {
          xi.push_back(o.value);
          xk.push_back(rk[j].value);
        }
      }
      if (xi.size() < static_cast<std::size_t>(std::max(min_obs, 2))) continue;
      if (const auto r = pearson(xi, xk)) rs.push_back(*r);
    }
  }
  if (rs.empty()) {
    throw DataError("class '" + std::string(class_label) +
                    "' has no drug pair with min_obs shared cells");
  }
  return {mean(rs), sample_sd(rs), static_cast<int>(rs.size())};
}

}  // namespace rankbench
