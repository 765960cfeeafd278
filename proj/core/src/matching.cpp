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

#include "rankbench/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include <Eigen/Dense>

#include "rankbench/error.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/models.hpp"
#include "rankbench/parallel.hpp"
#include "rankbench/random.hpp"

namespace rankbench {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Dense drug x cell view of the training table, NaN where unobserved. The
// cell axis also covers extra cells (test cells absent from training).
class ProfileIndex {
 public:
  ProfileIndex(const ResponseTable& train, const std::vector<std::string>& extra_cells)
      : drugs_(train.drugs()) {
    std::set<std::string> cells;
    for (const auto& r : train.records()) cells.insert(r.cell);
    cells.insert(extra_cells.begin(), extra_cells.end());
    cells_.assign(cells.begin(), cells.end());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      cell_index_[cells_[c]] = static_cast<Eigen::Index>(c);
    }
    values_ = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(drugs_.size()),
                                        static_cast<Eigen::Index>(cells_.size()), kMissing);
    sums_.assign(cells_.size(), 0.0L);
    counts_.assign(cells_.size(), 0);
    for (std::size_t d = 0; d < drugs_.size(); ++d) {
      for (const auto& r : train.drug_records(d)) {
        const auto c = cell_index_.at(r.cell);
        values_(static_cast<Eigen::Index>(d), c) = r.value;
        sums_[static_cast<std::size_t>(c)] += r.value;
        ++counts_[static_cast<std::size_t>(c)];
        grand_sum_ += r.value;
        ++grand_count_;
      }
    }
  }

  const std::vector<std::string>& drugs() const { return drugs_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index cell(std::string_view id) const {
    const auto it = cell_index_.find(std::string(id));
    return it == cell_index_.end() ? -1 : it->second;
  }
  Eigen::Index drug(std::string_view id) const {
    const auto it = std::lower_bound(drugs_.begin(), drugs_.end(), id);
    return it != drugs_.end() && *it == id ? it - drugs_.begin() : -1;
  }

  // Cell-mean prior over training drugs other than `exclude`.
  double prior(Eigen::Index c, Eigen::Index exclude) const {
    long double grand = grand_sum_;
    std::size_t grand_n = grand_count_;
    long double sum = c >= 0 ? sums_[static_cast<std::size_t>(c)] : 0.0L;
    std::size_t n = c >= 0 ? counts_[static_cast<std::size_t>(c)] : 0;
    if (exclude >= 0) {
      const auto row = values_.row(exclude);
      for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (!std::isnan(row(j))) {
          grand -= row(j);
          --grand_n;
        }
      }
      if (c >= 0 && !std::isnan(row(c))) {
        sum -= row(c);
        --n;
      }
    }
    if (n > 0) return static_cast<double>(sum / static_cast<long double>(n));
    return grand_n > 0 ? static_cast<double>(grand / static_cast<long double>(grand_n)) : 0.0;
  }

 private:
  std::vector<std::string> drugs_;
  std::vector<std::string> cells_;
  std::unordered_map<std::string, Eigen::Index> cell_index_;
  Eigen::MatrixXd values_;
  std::vector<long double> sums_;
  std::vector<std::size_t> counts_;
  long double grand_sum_ = 0.0L;
  std::size_t grand_count_ = 0;
};

struct CoreMatch {
  MatchSet set;
  std::vector<double> matched;  // per eval cell, NaN without coverage
};

// Only observed values enter; eval cells are passed as column ids.
CoreMatch match_core(const ProfileIndex& index, std::span<const Eigen::Index> observed,
                     std::span<const double> values, std::span<const Eigen::Index> eval,
                     Eigen::Index exclude, int n, int min_overlap) {
  CoreMatch out;
  out.set.n = n;
  const auto& profiles = index.values();
  std::vector<MatchedDrug> candidates;
  std::vector<double> a, b;
  for (Eigen::Index d = 0; d < profiles.rows(); ++d) {
    if (d == exclude) continue;
    a.clear();
    b.clear();
    for (std::size_t i = 0; i < observed.size(); ++i) {
      if (observed[i] < 0) continue;
      const double v = profiles(d, observed[i]);
      if (std::isnan(v)) continue;
      a.push_back(values[i]);
      b.push_back(v);
    }
    if (a.size() < static_cast<std::size_t>(std::max(min_overlap, 2))) continue;
    const auto r = pearson(a, b);
    if (!r) continue;
    candidates.push_back({index.drugs()[static_cast<std::size_t>(d)], *r, std::max(*r, 0.0)});
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchedDrug& x, const MatchedDrug& y) {
    const double ax = std::abs(x.correlation), ay = std::abs(y.correlation);
    if (ax != ay) return ax > ay;
    return x.drug < y.drug;
  });
  if (candidates.size() > static_cast<std::size_t>(n)) candidates.resize(static_cast<std::size_t>(n));
  out.set.matched = std::move(candidates);
  out.set.empty = std::none_of(out.set.matched.begin(), out.set.matched.end(),
                               [](const MatchedDrug& m) { return m.weight > 0.0; });

  out.matched.assign(eval.size(), kMissing);
  if (out.set.empty) return out;
  std::vector<std::pair<Eigen::Index, double>> rows;
  for (const auto& m : out.set.matched) {
    if (m.weight > 0.0) rows.emplace_back(index.drug(m.drug), m.weight);
  }
  for (std::size_t i = 0; i < eval.size(); ++i) {
    if (eval[i] < 0) continue;
    double num = 0.0, den = 0.0;
    for (const auto& [d, w] : rows) {
      const double v = profiles(d, eval[i]);
      if (std::isnan(v)) continue;
      num += w * v;
      den += w;
    }
    if (den > 0.0) out.matched[i] = num / den;
  }
  return out;
}

void standardize_in_place(std::vector<double>& v) {
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  const bool degenerate = !(sd > 0.0) || !pearson(v, v).has_value();
  for (double& x : v) x = degenerate ? x - mu : (x - mu) / sd;
}

std::vector<double> blend_values(std::vector<double> prior, std::vector<double> matched, double w,
                                 bool standardize) {
  if (standardize) {
    standardize_in_place(prior);
    standardize_in_place(matched);
  }
  std::vector<double> out(prior.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * prior[i] + w * matched[i];
  return out;
}

struct TaskOutcome {
  std::vector<std::optional<double>> r;  // one per weight
  std::size_t fallback_cells = 0;
  bool empty = false;
};

// One K-shot task for a drug whose records are `records`; observed positions
// index into `records`. `values_from`, when given, supplies the observed
// values instead (the permuted-pairing control).
TaskOutcome run_task(const ProfileIndex& index, std::span<const Observation> records,
                     const std::vector<std::size_t>& observed_pos,
                     std::span<const Observation> values_from, Eigen::Index exclude,
                     const std::vector<double>& weights, const KShotOptions& opt,
                     const std::vector<double>* outer_prior) {
  std::vector<bool> is_observed(records.size(), false);
  for (auto p : observed_pos) is_observed[p] = true;

  std::vector<Eigen::Index> obs_cells;
  std::vector<double> obs_values;
  for (auto p : observed_pos) {
    const auto& rec = records[p];
    double v = rec.value;
    if (!values_from.empty()) {
      const auto it = std::lower_bound(values_from.begin(), values_from.end(), rec.cell,
                                       [](const Observation& o, const std::string& c) { return o.cell < c; });
      if (it == values_from.end() || it->cell != rec.cell) continue;
      v = it->value;
    }
    obs_cells.push_back(index.cell(rec.cell));
    obs_values.push_back(v);
  }

  std::vector<Eigen::Index> eval_cells;
  std::vector<double> truth;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (is_observed[i]) continue;
    eval_cells.push_back(index.cell(records[i].cell));
    truth.push_back(records[i].value);
  }

  std::vector<double> prior(eval_cells.size());
  for (std::size_t i = 0; i < eval_cells.size(); ++i) {
    prior[i] = outer_prior && eval_cells[i] >= 0 ? (*outer_prior)[static_cast<std::size_t>(eval_cells[i])]
                                                 : index.prior(eval_cells[i], exclude);
  }

  TaskOutcome out;
  std::vector<double> matched = prior;
  if (static_cast<int>(obs_cells.size()) >= opt.min_overlap) {
    const CoreMatch m = match_core(index, obs_cells, obs_values, eval_cells, exclude, opt.n,
                                   opt.min_overlap);
    out.empty = m.set.empty;
    for (std::size_t i = 0; i < matched.size(); ++i) {
      if (std::isnan(m.matched[i])) {
        ++out.fallback_cells;
      } else {
        matched[i] = m.matched[i];
      }
    }
  } else {
    out.empty = true;
    out.fallback_cells = matched.size();
  }

  out.r.reserve(weights.size());
  for (double w : weights) {
    out.r.push_back(pearson(blend_values(prior, matched, w, opt.standardize), truth));
  }
  return out;
}

std::vector<std::size_t> sample_positions(std::size_t n, int k, Rng& rng) {
  std::vector<std::size_t> pos(n);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pos[i], pos[pick(rng)]);
  }
  pos.resize(static_cast<std::size_t>(k));
  return pos;
}

void validate(const KShotOptions& opt) {
  if (opt.grid.empty()) throw UsageError("blend weight grid is empty");
  for (double w : opt.grid) {
    if (!(w >= 0.0 && w <= 1.0)) throw UsageError("blend weights must lie in [0, 1]");
  }
  if (opt.n < 1) throw UsageError("n must be >= 1");
  if (opt.min_overlap < 2) throw UsageError("min_overlap must be >= 2");
  if (opt.trials < 1 || opt.inner_trials < 1) throw UsageError("trials must be >= 1");
  for (int k : opt.k_list) {
    if (k < 0) throw UsageError("K must be >= 0");
  }
}

double select_core(const ProfileIndex& index, const ResponseTable& train, int k,
                   const KShotOptions& opt) {
  std::vector<double> grid = opt.grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.size() == 1 || k < opt.min_overlap) return grid.front();

  const auto& drugs = train.drugs();
  std::vector<std::vector<double>> per_drug(drugs.size());
  std::vector<bool> usable(drugs.size(), false);
  parallel_for(drugs.size(), [&](std::size_t d) {
    const auto records = train.drug_records(d);
    if (records.size() < opt.min_obs + static_cast<std::size_t>(k)) return;
    std::vector<double> sum(grid.size(), 0.0);
    std::vector<int> count(grid.size(), 0);
    for (int t = 0; t < opt.inner_trials; ++t) {
      Rng rng = make_rng(opt.seed, "kshot-inner", drugs[d], k, t);
      const auto pos = sample_positions(records.size(), k, rng);
      const auto outcome = run_task(index, records, pos, {}, static_cast<Eigen::Index>(d), grid,
                                    opt, nullptr);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        if (outcome.r[g]) {
          sum[g] += *outcome.r[g];
          ++count[g];
        }
      }
    }
    if (std::all_of(count.begin(), count.end(), [](int c) { return c > 0; })) {
      per_drug[d].resize(grid.size());
      for (std::size_t g = 0; g < grid.size(); ++g) per_drug[d][g] = sum[g] / count[g];
      usable[d] = true;
    }
  });

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t d = 0; d < drugs.size(); ++d) {
      if (!usable[d]) continue;
      s += per_drug[d][g];
      ++n;
    }
    if (n == 0) return grid.front();
    const double score = s / static_cast<double>(n);
    if (score > best_score) {
      best_score = score;
      best = g;
    }
  }
  return grid[best];
}

void check_disjoint(const ResponseTable& train, const ResponseTable& test) {
  for (const auto& d : test.drugs()) {
    if (train.drug_index(d)) throw DataError("test drug '" + d + "' is also in the training table");
  }
}

// Evaluates one K over the test drugs. `partner` maps test drug index to the
// drug whose values fill the observed vector (identity outside the control).
CurvePoint evaluate_k(const ProfileIndex& index, const std::vector<double>& outer_prior,
                      const ResponseTable& test, int k, double w, const KShotOptions& opt,
                      const std::vector<std::size_t>* partner,
                      const std::vector<std::size_t>& eligible) {
  CurvePoint point;
  point.k = k;
  point.selected_w = w;
  const int trials = k == 0 ? 1 : opt.trials;
  const std::vector<double> weights{w};

  struct DrugOutcome {
    std::optional<double> r;
    std::size_t tasks = 0, fallbacks = 0, empties = 0;
  };
  std::vector<DrugOutcome> outcomes(eligible.size());
  parallel_for(eligible.size(), [&](std::size_t e) {
    const std::size_t d = eligible[e];
    const auto records = test.drug_records(d);
    std::span<const Observation> values_from;
    if (partner) values_from = test.drug_records((*partner)[e]);
    double sum = 0.0;
    int count = 0;
    DrugOutcome& o = outcomes[e];
    for (int t = 0; t < trials; ++t) {
      Rng rng = make_rng(opt.seed, "kshot", test.drugs()[d], k, t);
      const auto pos = sample_positions(records.size(), k, rng);
      const auto outcome = run_task(index, records, pos, values_from, -1, weights, opt, &outer_prior);
      ++o.tasks;
      o.fallbacks += outcome.fallback_cells;
      if (outcome.empty && k > 0) ++o.empties;
      if (outcome.r[0]) {
        sum += *outcome.r[0];
        ++count;
      }
    }
    if (count > 0) o.r = sum / count;
  });

  std::vector<double> rs;
  for (const auto& o : outcomes) {
    point.n_tasks += o.tasks;
    point.n_fallback_cells += o.fallbacks;
    point.n_empty_matches += o.empties;
    if (o.r) rs.push_back(*o.r);
  }
  point.n_skipped = test.drugs().size() - rs.size();
  point.n_drugs = rs.size();
  if (!rs.empty()) {
    point.per_drug_r_mean = mean(rs);
    point.per_drug_r_sd = sample_sd(rs);
  }
  return point;
}

std::vector<std::size_t> eligible_drugs(const ResponseTable& test, int k, const KShotOptions& opt) {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < test.drugs().size(); ++d) {
    if (test.drug_records(d).size() >= opt.min_obs + static_cast<std::size_t>(k)) out.push_back(d);
  }
  return out;
}

std::vector<double> outer_prior_values(const ResponseTable& train, const ProfileIndex& index,
                                       const std::vector<std::string>& cells) {
  const Predictor prior = cell_mean_predictor(train);
  std::vector<double> out(cells.size());
  for (const auto& c : cells) {
    const auto i = index.cell(c);
    out[static_cast<std::size_t>(i)] = prior.predict("", c);
  }
  return out;
}

std::vector<std::string> all_cells(const ResponseTable& train, const ResponseTable& test) {
  std::set<std::string> cells;
  for (const auto& r : train.records()) cells.insert(r.cell);
  for (const auto& r : test.records()) cells.insert(r.cell);
  return {cells.begin(), cells.end()};
}

}  // namespace

MatchResult match_predict(const ResponseTable& train, const KShotTask& task, int n,
                          int min_overlap) {
  if (n < 1) throw UsageError("n must be >= 1");
  if (min_overlap < 2) throw UsageError("min_overlap must be >= 2");
  if (task.observed_cells.size() != task.observed_values.size()) {
    throw UsageError("observed cells and values differ in length");
  }
  if (task.observed_cells.size() < static_cast<std::size_t>(min_overlap)) {
    throw DataError("K = " + std::to_string(task.observed_cells.size()) +
                    " is below the minimum overlap of " + std::to_string(min_overlap));
  }
  const std::set<std::string> observed(task.observed_cells.begin(), task.observed_cells.end());
  for (const auto& c : task.eval_cells) {
    if (observed.count(c)) throw UsageError("cell '" + c + "' is both observed and evaluated");
  }

  const ProfileIndex index(train, task.eval_cells);
  std::vector<Eigen::Index> obs, eval;
  for (const auto& c : task.observed_cells) obs.push_back(index.cell(c));
  for (const auto& c : task.eval_cells) eval.push_back(index.cell(c));
  const CoreMatch m = match_core(index, obs, task.observed_values, eval, index.drug(task.test_drug),
                                 n, min_overlap);

  const Predictor prior = cell_mean_predictor(train);
  MatchResult out;
  out.matches = m.set;
  std::vector<Observation> rows;
  rows.reserve(task.eval_cells.size());
  for (std::size_t i = 0; i < task.eval_cells.size(); ++i) {
    double v = m.matched[i];
    if (std::isnan(v)) {
      v = prior.predict(task.test_drug, task.eval_cells[i]);
      ++out.fallback_cells;
    }
    rows.push_back({task.test_drug, task.eval_cells[i], v});
  }
  out.predictions = PredictionTable(std::move(rows));
  return out;
}

PredictionTable blend(const PredictionTable& prior, const PredictionTable& matched, double w,
                      bool standardize) {
  if (!(w >= 0.0 && w <= 1.0)) throw UsageError("blend weight must lie in [0, 1]");
  if (prior.size() != matched.size() || prior.drugs() != matched.drugs()) {
    throw UsageError("blend components have different keys");
  }
  std::vector<Observation> out;
  out.reserve(prior.size());
  for (std::size_t d = 0; d < prior.drugs().size(); ++d) {
    const auto p = prior.drug_records(d);
    const auto m = matched.drug_records(d);
    if (p.size() != m.size()) throw UsageError("blend components have different keys");
    std::vector<double> pv, mv;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i].cell != m[i].cell) throw UsageError("blend components have different keys");
      pv.push_back(p[i].value);
      mv.push_back(m[i].value);
    }
    const auto b = blend_values(std::move(pv), std::move(mv), w, standardize);
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back({p[i].drug, p[i].cell, b[i]});
  }
  return PredictionTable(std::move(out));
}

std::vector<double> default_blend_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

double select_blend_weight(const ResponseTable& train, int k, const KShotOptions& options) {
  validate(options);
  if (train.drugs().size() < 2) throw DataError("blend selection needs at least 2 training drugs");
  const ProfileIndex index(train, {});
  return select_core(index, train, k, options);
}

const CurvePoint* BlendCurve::at(int k) const {
  for (const auto& p : points) {
    if (p.k == k) return &p;
  }
  return nullptr;
}

BlendCurve kshot_curve(const ResponseTable& train, const ResponseTable& test,
                       const KShotOptions& options) {
  validate(options);
  check_disjoint(train, test);
  BlendCurve curve;
  curve.options = options;
  std::vector<int> ks = options.k_list;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  curve.options.k_list = ks;

  const auto cells = all_cells(train, test);
  const ProfileIndex index(train, cells);
  const auto prior = outer_prior_values(train, index, cells);

  bool any = false;
  for (int k : ks) {
    const auto eligible = eligible_drugs(test, k, options);
    const double w = train.drugs().size() >= 2 ? select_core(index, train, k, options)
                                               : *std::min_element(options.grid.begin(), options.grid.end());
    curve.points.push_back(evaluate_k(index, prior, test, k, w, options, nullptr, eligible));
    any = any || curve.points.back().n_drugs > 0;
  }
  if (!any) throw DataError("no test drug has enough cells for any K");
  return curve;
}

CurvePoint permuted_pairing_control(const ResponseTable& train, const ResponseTable& test, int k,
                                    const KShotOptions& options) {
  validate(options);
  check_disjoint(train, test);
  if (k < 0) throw UsageError("K must be >= 0");
  const auto eligible = eligible_drugs(test, k, options);
  if (eligible.size() < 2) throw DataError("permuted pairing needs at least 2 eligible test drugs");

  // Rejection sampling until no drug keeps its own values.
  std::vector<std::size_t> perm(eligible.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(options.seed, "kshot-derangement", k);
  for (;;) {
    std::shuffle(perm.begin(), perm.end(), rng);
    bool fixed = false;
    for (std::size_t i = 0; i < perm.size(); ++i) fixed = fixed || perm[i] == i;
    if (!fixed) break;
  }
  std::vector<std::size_t> partner(eligible.size());
  for (std::size_t i = 0; i < eligible.size(); ++i) partner[i] = eligible[perm[i]];

  const auto cells = all_cells(train, test);
  const ProfileIndex index(train, cells);
  const auto prior = outer_prior_values(train, index, cells);
  const double w = train.drugs().size() >= 2 ? select_core(index, train, k, options)
                                             : *std::min_element(options.grid.begin(), options.grid.end());
  return evaluate_k(index, prior, test, k, w, options, &partner, eligible);
}

}  // namespace rankbench
