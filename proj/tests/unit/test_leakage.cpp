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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rankbench/error.hpp"
#include "rankbench/leakage.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/synth.hpp"

namespace rankbench {
namespace {

// Rows drug d{i}, cell c{j}; x ~ N(0,1), y = x.beta + noise.
RecordSplit make_split(const std::string& prefix, int n, const Eigen::VectorXd& beta, double noise,
                       std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RecordSplit s;
  s.x.resize(n, beta.size());
  for (int i = 0; i < n; ++i) {
    double y = 0.5;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      s.x(i, j) = nd(rng);
      y += beta(j) * s.x(i, j);
    }
    s.records.push_back({prefix + std::to_string(i % 3), "c" + std::to_string(i), y + noise * nd(rng)});
  }
  return s;
}

std::vector<double> values_of(const RecordSplit& s) {
  std::vector<double> y;
  for (const auto& r : s.records) y.push_back(r.value);
  return y;
}

// Centered normal equations, solved directly.
Eigen::VectorXd ridge_oracle(const RecordSplit& train, const RecordSplit& eval, double alpha) {
  const Eigen::Index n = train.x.rows();
  const Eigen::RowVectorXd xm = train.x.colwise().mean();
  const Eigen::MatrixXd xc = train.x.rowwise() - xm;
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = train.records[i].value;
  const double ym = y.mean();
  const Eigen::MatrixXd a =
      xc.transpose() * xc + alpha * Eigen::MatrixXd::Identity(train.x.cols(), train.x.cols());
  const Eigen::VectorXd w = a.ldlt().solve(xc.transpose() * (y.array() - ym).matrix());
  return ((eval.x.rowwise() - xm) * w).array() + ym;
}

TEST(Learner, ConvergesToClosedFormRidge) {
  std::mt19937_64 rng(11);
  Eigen::Vector3d beta(1.0, -2.0, 0.5);
  const auto train = make_split("tr", 30, beta, 0.3, rng);
  const auto val = make_split("va", 6, beta, 0.3, rng);
  const auto test = make_split("te", 9, beta, 0.3, rng);
  LearnerConfig cfg;
  cfg.lr = 0.2;
  cfg.epochs = 4000;
  cfg.alpha = 2.0;
  const auto trace = iterative_learner_trace(train, val, test, cfg);
  ASSERT_EQ(trace.epochs.size(), 4000u);
  const auto expect = ridge_oracle(train, test, cfg.alpha);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(trace.epochs.back().test[i], expect(i), 1e-4);
  const auto expect_val = ridge_oracle(train, val, cfg.alpha);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(trace.epochs.back().val[i], expect_val(i), 1e-4);
}

TEST(Learner, SingleEpochAndContiguity) {
  std::mt19937_64 rng(12);
  Eigen::Vector2d beta(1.0, 1.0);
  const auto train = make_split("tr", 10, beta, 0.1, rng);
  const auto val = make_split("va", 4, beta, 0.1, rng);
  const auto test = make_split("te", 4, beta, 0.1, rng);
  LearnerConfig cfg;
  cfg.epochs = 1;
  EXPECT_EQ(iterative_learner_trace(train, val, test, cfg).epochs.size(), 1u);
  cfg.epochs = 7;
  const auto trace = iterative_learner_trace(train, val, test, cfg);
  for (std::size_t i = 0; i < trace.epochs.size(); ++i) {
    EXPECT_EQ(trace.epochs[i].epoch, static_cast<int>(i) + 1);
    EXPECT_EQ(trace.test_predictions(i).size(), 4u);
    EXPECT_EQ(trace.val_predictions(i).size(), 4u);
  }
}

TEST(Learner, NoFeaturesTracksInterceptOnly) {
  std::mt19937_64 rng(13);
  auto train = make_split("tr", 8, Eigen::VectorXd(0), 1.0, rng);
  auto val = make_split("va", 3, Eigen::VectorXd(0), 1.0, rng);
  auto test = make_split("te", 3, Eigen::VectorXd(0), 1.0, rng);
  const auto y = values_of(train);
  double ybar = 0;
  for (double v : y) ybar += v / static_cast<double>(y.size());
  LearnerConfig cfg;
  cfg.lr = 0.3;
  cfg.epochs = 6;
  const auto trace = iterative_learner_trace(train, val, test, cfg);
  for (const auto& e : trace.epochs) {
    // b_t = ybar * (1 - (1 - lr)^t) from b_0 = 0.
    const double b = ybar * (1.0 - std::pow(1.0 - cfg.lr, e.epoch));
    for (double p : e.test) EXPECT_NEAR(p, b, 1e-12);
    for (double p : e.val) EXPECT_NEAR(p, b, 1e-12);
  }
}

TEST(Learner, Errors) {
  std::mt19937_64 rng(14);
  Eigen::Vector2d beta(1.0, 1.0);
  auto train = make_split("tr", 10, beta, 0.1, rng);
  const auto val = make_split("va", 4, beta, 0.1, rng);
  auto test = make_split("te", 4, beta, 0.1, rng);
  LearnerConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(iterative_learner_trace(train, val, test, cfg), UsageError);
  cfg.epochs = 5;
  auto overlap = test;
  overlap.records[0] = train.records[0];
  EXPECT_THROW(iterative_learner_trace(train, val, overlap, cfg), UsageError);

  auto big = train;
  big.x *= 1e3;
  cfg.lr = 10.0;
  cfg.epochs = 500;
  try {
    iterative_learner_trace(big, val, test, cfg);
    FAIL() << "expected divergence";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(SelectCheckpoint, RuleExamples) {
  using O = std::optional<double>;
  const std::vector<O> rising{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(select_checkpoint(rising), 4);
  const std::vector<O> tied{0.1, 0.5, 0.2, 0.5};
  EXPECT_EQ(select_checkpoint(tied), 2);
  const std::vector<O> holes{std::nullopt, 0.2, std::nullopt};
  EXPECT_EQ(select_checkpoint(holes), 2);
  const std::vector<O> none{std::nullopt, std::nullopt};
  EXPECT_THROW(select_checkpoint(none), DataError);
  EXPECT_THROW(select_checkpoint(std::vector<O>{}), UsageError);
}

// Test predictions are closest to truth at epoch 3, validation at epoch 7.
EpochTrace peaked_trace() {
  EpochTrace t;
  const std::vector<double> truth{1, 4, 2, 8, 5, 7};
  const std::vector<double> bump{3, -2, 4, -5, 1, 0};
  for (int i = 0; i < 6; ++i) {
    t.val_truth.push_back({"v" + std::to_string(i % 2), "c" + std::to_string(i), truth[i]});
    t.test_truth.push_back({"t" + std::to_string(i % 2), "c" + std::to_string(i), truth[i]});
  }
  for (int e = 1; e <= 10; ++e) {
    EpochRecord r;
    r.epoch = e;
    for (int i = 0; i < 6; ++i) {
      r.test.push_back(truth[i] + 0.3 * std::abs(e - 3) * bump[i]);
      r.val.push_back(truth[i] + 0.3 * std::abs(e - 7) * bump[i]);
    }
    t.epochs.push_back(r);
  }
  return t;
}

TEST(SelectCheckpoint, PoliciesOnConstructedTrace) {
  const auto t = peaked_trace();
  EXPECT_EQ(select_checkpoint(t, CheckpointPolicy::kTestMax), 3);
  EXPECT_EQ(select_checkpoint(t, CheckpointPolicy::kValidationMax), 7);
  EXPECT_EQ(select_checkpoint(t, CheckpointPolicy::kLast), 10);
  const auto r = global_r_by_epoch(t, true);
  ASSERT_EQ(r.size(), 10u);
  EXPECT_NEAR(*r[2], 1.0, 1e-12);
}

TEST(SelectCheckpoint, FairPolicyIgnoresTestSplit) {
  auto t = peaked_trace();
  const int before = select_checkpoint(t, CheckpointPolicy::kValidationMax);
  std::mt19937_64 rng(15);
  std::normal_distribution<double> n;
  for (auto& e : t.epochs) {
    for (auto& p : e.test) p = n(rng);
  }
  EXPECT_EQ(select_checkpoint(t, CheckpointPolicy::kValidationMax), before);
}

TEST(InflationReport, ConstructedFolds) {
  const auto a = peaked_trace();
  auto b = peaked_trace();
  const std::vector<EpochTrace> one{a};
  EXPECT_THROW(inflation_report(one), UsageError);
  b.epochs.pop_back();
  const std::vector<EpochTrace> ragged{a, b};
  EXPECT_THROW(inflation_report(ragged), UsageError);

  const std::vector<EpochTrace> two{a, peaked_trace()};
  const auto rep = inflation_report(two, 2);
  const auto r = global_r_by_epoch(a, true);
  EXPECT_NEAR(rep.snooped_global_r, *r[2], 1e-12);
  EXPECT_NEAR(rep.fair_global_r, *r[6], 1e-12);
  EXPECT_NEAR(rep.last_epoch_global_r, *r[9], 1e-12);
  EXPECT_NEAR(rep.snoop_inflation, *r[2] - *r[6], 1e-12);
  EXPECT_NEAR(rep.best_fold_inflation, 0.0, 1e-12);
  ASSERT_EQ(rep.folds.size(), 2u);
  EXPECT_EQ(rep.folds[0].snooped_epoch, 3);
  EXPECT_EQ(rep.folds[0].fair_epoch, 7);
  EXPECT_EQ(rep.folds[0].last_epoch, 10);
}

SynthConfig small_noisy(std::uint64_t seed) {
  auto c = synth_preset("noisy-leakage", seed);
  c.n_drugs = 40;
  c.n_cells = 60;
  return c;
}

TEST(SimulateLeakage, SnoopedDominatesOtherPoliciesPerFold) {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto data = generate(small_noisy(s));
    LeakageSimConfig cfg;
    cfg.folds = 5;
    cfg.learner.epochs = 30;
    cfg.seed = s;
    const auto rep = simulate_leakage(data.aligned(true), cfg);
    ASSERT_EQ(rep.folds.size(), 5u);
    double best = -1, mean = 0;
    for (const auto& f : rep.folds) {
      EXPECT_GE(f.snooped_global_r, f.fair_global_r);
      EXPECT_GE(f.snooped_global_r, f.last_global_r);
      best = std::max(best, f.snooped_global_r);
      mean += f.snooped_global_r / 5.0;
    }
    EXPECT_NEAR(rep.best_fold_global_r, best, 1e-12);
    EXPECT_NEAR(rep.mean_fold_global_r, mean, 1e-12);
    EXPECT_NEAR(rep.best_fold_inflation, best - mean, 1e-12);
    EXPECT_NEAR(rep.snoop_inflation, rep.snooped_global_r - rep.fair_global_r, 1e-12);
  }
}

TEST(SimulateLeakage, NoiselessHasNoInflation) {
  auto c = small_noisy(3);
  c.sigma_noise = 0.0;
  c.potency_noise = 0.0;
  c.n_distractor_features = 0;
  c.n_drug_distractors = 0;
  const auto data = generate(c);
  LeakageSimConfig cfg;
  cfg.folds = 5;
  const auto rep = simulate_leakage(data.aligned(true), cfg);
  EXPECT_LE(rep.snoop_inflation, 0.01);
}

TEST(SimulateLeakage, ExpectedInflationNonnegative) {
  double sum = 0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    const auto data = generate(small_noisy(200 + s));
    LeakageSimConfig cfg;
    cfg.folds = 5;
    cfg.learner.epochs = 30;
    cfg.seed = static_cast<std::uint64_t>(s);
    sum += simulate_leakage(data.aligned(true), cfg).snoop_inflation;
  }
  EXPECT_GE(sum / seeds, -0.005);
}

TEST(SimulateLeakage, Deterministic) {
  const auto data = generate(small_noisy(9));
  LeakageSimConfig cfg;
  cfg.folds = 4;
  cfg.learner.epochs = 10;
  const auto a = simulate_leakage(data.aligned(true), cfg);
  const auto b = simulate_leakage(data.aligned(true), cfg);
  EXPECT_EQ(a.snooped_global_r, b.snooped_global_r);
  EXPECT_EQ(a.fair_per_drug_r, b.fair_per_drug_r);
}

TEST(SimulateLeakage, Preconditions) {
  const auto data = generate(small_noisy(10));
  LeakageSimConfig cfg;
  EXPECT_THROW(simulate_leakage(data.aligned(false), cfg), UsageError);
  cfg.val_fraction = 1.0;
  EXPECT_THROW(simulate_leakage(data.aligned(true), cfg), UsageError);
}

}  // namespace
}  // namespace rankbench
