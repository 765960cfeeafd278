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

#include "rankbench/leakage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "rankbench/error.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/parallel.hpp"
#include "rankbench/protocols.hpp"
#include "rankbench/random.hpp"

namespace rankbench {

namespace {

PredictionTable as_table(const std::vector<Observation>& keys, const std::vector<double>& values) {
  std::vector<Observation> rows;
  rows.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) rows.push_back({keys[i].drug, keys[i].cell, values[i]});
  return PredictionTable(std::move(rows));
}

std::vector<double> truth_values(const std::vector<Observation>& keys) {
  std::vector<double> v;
  v.reserve(keys.size());
  for (const auto& o : keys) v.push_back(o.value);
  return v;
}

std::vector<double> predict(const RecordSplit& s, const Eigen::VectorXd& w, double b) {
  std::vector<double> out(s.records.size(), b);
  if (w.size() > 0) {
    const Eigen::VectorXd p = s.x * w;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace

PredictionTable EpochTrace::val_predictions(std::size_t i) const {
  return as_table(val_truth, epochs.at(i).val);
}

PredictionTable EpochTrace::test_predictions(std::size_t i) const {
  return as_table(test_truth, epochs.at(i).test);
}

const char* to_string(CheckpointPolicy p) {
  switch (p) {
    case CheckpointPolicy::kValidationMax: return "validation_max";
    case CheckpointPolicy::kTestMax: return "test_max";
    case CheckpointPolicy::kLast: return "last";
  }
  return "last";
}

EpochTrace iterative_learner_trace(const RecordSplit& train, const RecordSplit& val,
                                   const RecordSplit& test, const LearnerConfig& config) {
  if (config.epochs < 1) throw UsageError("epochs must be >= 1");
  if (!(config.lr > 0.0)) throw UsageError("learning rate must be positive");
  if (!(config.alpha >= 0.0)) throw UsageError("alpha must be >= 0");
  if (train.records.empty()) throw DataError("empty training split");
  const Eigen::Index p = train.x.cols();
  for (const RecordSplit* s : {&train, &val, &test}) {
    if (s->x.rows() != static_cast<Eigen::Index>(s->records.size()) || s->x.cols() != p) {
      throw UsageError("split feature rows do not match its records");
    }
  }
  {
    std::set<std::pair<std::string, std::string>> seen;
    for (const RecordSplit* s : {&train, &val, &test}) {
      for (const auto& r : s->records) {
        if (!seen.emplace(r.drug, r.cell).second) {
          throw UsageError("record (" + r.drug + ", " + r.cell + ") appears in two splits");
        }
      }
    }
  }

  EpochTrace trace;
  trace.config = config;
  trace.val_truth = val.records;
  trace.test_truth = test.records;

  const auto n = static_cast<double>(train.records.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(train.records.size()));
  for (std::size_t i = 0; i < train.records.size(); ++i) y(static_cast<Eigen::Index>(i)) = train.records[i].value;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  double b = 0.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Eigen::VectorXd r = y.array() - b;
    if (p > 0) r -= train.x * w;
    const double loss = 0.5 * (r.squaredNorm() + config.alpha * w.squaredNorm()) / n;
    if (!std::isfinite(loss)) {
      throw NumericalError("learner diverged at epoch " + std::to_string(epoch));
    }
    if (p > 0) {
      const Eigen::VectorXd grad = (-(train.x.transpose() * r) + config.alpha * w) / n;
      w -= config.lr * grad;
    }
    b += config.lr * r.mean();
    if (!std::isfinite(b) || !w.allFinite()) {
      throw NumericalError("learner diverged at epoch " + std::to_string(epoch));
    }
    trace.epochs.push_back({epoch, predict(val, w, b), predict(test, w, b)});
  }
  return trace;
}

int select_checkpoint(std::span<const std::optional<double>> metric_by_epoch) {
  if (metric_by_epoch.empty()) throw UsageError("empty trace");
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < metric_by_epoch.size(); ++i) {
    if (metric_by_epoch[i] && *metric_by_epoch[i] > best_value) {
      best_value = *metric_by_epoch[i];
      best = static_cast<int>(i) + 1;
    }
  }
  if (best == 0) throw DataError("metric undefined at every epoch");
  return best;
}

std::vector<std::optional<double>> global_r_by_epoch(const EpochTrace& trace, bool test_split) {
  const auto truth = truth_values(test_split ? trace.test_truth : trace.val_truth);
  std::vector<std::optional<double>> out;
  out.reserve(trace.epochs.size());
  for (const auto& e : trace.epochs) {
    const auto& pred = test_split ? e.test : e.val;
    out.push_back(truth.size() >= 2 ? pearson(pred, truth) : std::nullopt);
  }
  return out;
}

int select_checkpoint(const EpochTrace& trace, CheckpointPolicy policy) {
  if (trace.epochs.empty()) throw UsageError("empty trace");
  switch (policy) {
    case CheckpointPolicy::kLast: return static_cast<int>(trace.epochs.size());
    case CheckpointPolicy::kValidationMax: return select_checkpoint(global_r_by_epoch(trace, false));
    case CheckpointPolicy::kTestMax: return select_checkpoint(global_r_by_epoch(trace, true));
  }
  return static_cast<int>(trace.epochs.size());
}

LeakageReport inflation_report(std::span<const EpochTrace> folds, int min_obs) {
  if (folds.size() < 2) throw UsageError("inflation report needs at least 2 folds");
  for (const auto& f : folds) {
    if (f.epochs.size() != folds.front().epochs.size() || f.epochs.empty()) {
      throw UsageError("folds have different epoch counts");
    }
  }

  LeakageReport report;
  report.folds.resize(folds.size());
  MetricOptions mo;
  mo.min_obs = min_obs;
  parallel_for(folds.size(), [&](std::size_t i) {
    const EpochTrace& t = folds[i];
    FoldLeakage& f = report.folds[i];
    f.fair_epoch = select_checkpoint(t, CheckpointPolicy::kValidationMax);
    f.snooped_epoch = select_checkpoint(t, CheckpointPolicy::kTestMax);
    f.last_epoch = select_checkpoint(t, CheckpointPolicy::kLast);
    const auto test_r = global_r_by_epoch(t, true);
    KeyedTable truth(t.test_truth);
    auto eval = [&](int epoch, double& g, double& pd) {
      g = test_r[static_cast<std::size_t>(epoch - 1)].value_or(0.0);
      pd = per_drug_r(t.test_predictions(static_cast<std::size_t>(epoch - 1)), truth, mo).per_drug_r_mean;
    };
    eval(f.fair_epoch, f.fair_global_r, f.fair_per_drug_r);
    eval(f.snooped_epoch, f.snooped_global_r, f.snooped_per_drug_r);
    eval(f.last_epoch, f.last_global_r, f.last_per_drug_r);
  });

  const double n = static_cast<double>(folds.size());
  report.best_fold_global_r = -std::numeric_limits<double>::infinity();
  for (const auto& f : report.folds) {
    report.fair_global_r += f.fair_global_r / n;
    report.snooped_global_r += f.snooped_global_r / n;
    report.last_epoch_global_r += f.last_global_r / n;
    report.fair_per_drug_r += f.fair_per_drug_r / n;
    report.snooped_per_drug_r += f.snooped_per_drug_r / n;
    report.last_epoch_per_drug_r += f.last_per_drug_r / n;
    report.best_fold_global_r = std::max(report.best_fold_global_r, f.snooped_global_r);
  }
  report.mean_fold_global_r = report.snooped_global_r;
  report.snoop_inflation = report.snooped_global_r - report.fair_global_r;
  report.per_drug_inflation = report.snooped_per_drug_r - report.fair_per_drug_r;
  report.best_fold_inflation = report.best_fold_global_r - report.mean_fold_global_r;
  return report;
}

namespace {

// Columns standardized on the rows listed in `fit`; constant columns are only centered.
Eigen::MatrixXd standardize_on(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& fit) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double mu = 0.0;
    for (auto r : fit) mu += m(r, j);
    mu /= static_cast<double>(fit.size());
    double ss = 0.0;
    for (auto r : fit) ss += (m(r, j) - mu) * (m(r, j) - mu);
    const double sd = std::sqrt(ss / static_cast<double>(fit.size()));
    out.col(j).array() -= mu;
    if (sd > 0.0) out.col(j) /= sd;
  }
  return out;
}

}  // namespace

LeakageReport simulate_leakage(const AlignedDataset& data, const LeakageSimConfig& config) {
  if (!data.drug_features) throw UsageError("leakage simulation needs drug features");
  if (!(config.val_fraction > 0.0 && config.val_fraction < 1.0)) {
    throw UsageError("validation fraction must lie in (0, 1)");
  }
  const auto& drugs = data.response.drugs();
  for (const auto& d : drugs) {
    if (!data.drug_features->contains(d)) throw DataError("drug '" + d + "' has no drug features");
  }
  const FoldSpec spec = make_folds(drugs, SplitScheme::kDrugBlind, config.folds, config.seed);

  std::vector<Eigen::Index> all_cells(static_cast<std::size_t>(data.cell_features.rows()));
  for (Eigen::Index i = 0; i < data.cell_features.rows(); ++i) all_cells[static_cast<std::size_t>(i)] = i;
  const Eigen::MatrixXd cells = standardize_on(data.cell_features.values(), all_cells);
  const Eigen::Index pc = cells.cols();
  const Eigen::Index pd = data.drug_features->cols();

  std::vector<EpochTrace> traces(static_cast<std::size_t>(spec.k));
  parallel_for(traces.size(), [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    std::vector<std::string> train_drugs;
    for (const auto& [d, fi] : spec.assignment) {
      if (fi != fold) train_drugs.push_back(d);
    }
    Rng rng = make_rng(config.seed, "leakage-val", fold);
    std::shuffle(train_drugs.begin(), train_drugs.end(), rng);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(config.val_fraction * static_cast<double>(train_drugs.size()))));
    if (n_val >= train_drugs.size()) throw DataError("too few training drugs for a validation split");
    const std::set<std::string> val_drugs(train_drugs.begin(), train_drugs.begin() + static_cast<std::ptrdiff_t>(n_val));

    std::vector<Eigen::Index> fit_rows;
    for (std::size_t i = n_val; i < train_drugs.size(); ++i) {
      fit_rows.push_back(*data.drug_features->row_of(train_drugs[i]));
    }
    const Eigen::MatrixXd drug_std = standardize_on(data.drug_features->values(), fit_rows);

    RecordSplit split[3];  // train, val, test
    std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> rows(3);
    for (const auto& r : data.response.records()) {
      const int s = spec.fold_of(r.drug) == fold ? 2 : (val_drugs.count(r.drug) ? 1 : 0);
      split[s].records.push_back(r);
      rows[static_cast<std::size_t>(s)].emplace_back(*data.cell_features.row_of(r.cell),
                                                     *data.drug_features->row_of(r.drug));
    }
    for (int s = 0; s < 3; ++s) {
      auto& x = split[s].x;
      x.resize(static_cast<Eigen::Index>(split[s].records.size()), pc + pd);
      for (std::size_t i = 0; i < rows[static_cast<std::size_t>(s)].size(); ++i) {
        const auto [c, d] = rows[static_cast<std::size_t>(s)][i];
        x.row(static_cast<Eigen::Index>(i)).head(pc) = cells.row(c);
        x.row(static_cast<Eigen::Index>(i)).tail(pd) = drug_std.row(d);
      }
    }
    traces[f] = iterative_learner_trace(split[0], split[1], split[2], config.learner);
  });
  return inflation_report(traces);
}

}  // namespace rankbench
