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
#include "rankbench/matching.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/models.hpp"
#include "rankbench/protocols.hpp"
#include "rankbench/synth.hpp"

namespace rankbench {
namespace {

using Vec = std::vector<double>;

std::string cell(int c) { return "c" + std::to_string(10 + c); }

void add_profile(std::vector<Observation>& out, const std::string& drug, const Vec& v) {
  for (std::size_t c = 0; c < v.size(); ++c) out.push_back({drug, cell(static_cast<int>(c)), v[c]});
}

std::pair<ResponseTable, ResponseTable> split(const ResponseTable& all, std::uint64_t seed) {
  const auto folds = make_folds(all.drugs(), SplitScheme::kDrugBlind, 5, seed);
  std::vector<Observation> train, test;
  for (const auto& r : all.records()) (folds.fold_of(r.drug) == 0 ? test : train).push_back(r);
  return {ResponseTable(train), ResponseTable(test)};
}

KShotTask task_from(const std::string& drug, const Vec& profile, int k) {
  KShotTask t;
  t.test_drug = drug;
  for (int c = 0; c < static_cast<int>(profile.size()); ++c) {
    if (c < k) {
      t.observed_cells.push_back(cell(c));
      t.observed_values.push_back(profile[c]);
    } else {
      t.eval_cells.push_back(cell(c));
    }
  }
  return t;
}

TEST(MatchPredict, ExactCopyRecovered) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Vec target(30);
  for (auto& x : target) x = n(rng);
  std::vector<Observation> train;
  add_profile(train, "copy", target);
  for (int d = 0; d < 6; ++d) {
    // Anti-correlated decoys rank high by magnitude but carry zero weight.
    Vec other(30);
    for (int c = 0; c < 30; ++c) other[c] = -target[c] + 0.3 * n(rng);
    add_profile(train, "anti" + std::to_string(d), other);
  }
  const auto res = match_predict(ResponseTable(train), task_from("t", target, 10));
  EXPECT_EQ(res.matches.matched.front().drug, "copy");
  EXPECT_NEAR(res.matches.matched.front().correlation, 1.0, 1e-12);
  std::vector<Observation> truth;
  for (int c = 10; c < 30; ++c) truth.push_back({"t", cell(c), target[c]});
  const ResponseTable tt(truth);
  EXPECT_NEAR(per_drug_r(res.predictions, tt).per_drug_r_mean, 1.0, 1e-12);
  EXPECT_EQ(res.predictions.size(), 20u);
  EXPECT_EQ(res.fallback_cells, 0u);
}

TEST(MatchPredict, HandBuiltThreeDrugs) {
  // Observed cells 0..3 carry (1,2,3,4); A correlates +1, B -1, C 0.
  std::vector<Observation> train;
  add_profile(train, "A", {1, 2, 3, 4, 10, 20});
  add_profile(train, "B", {4, 3, 2, 1, 7, 3});
  add_profile(train, "C", {1, -1, -1, 1, 5, 5});
  const auto res = match_predict(ResponseTable(train), task_from("t", {1, 2, 3, 4, 0, 0}, 4));
  const auto& m = res.matches.matched;
  ASSERT_GE(m.size(), 2u);
  EXPECT_EQ(m[0].drug, "A");
  EXPECT_EQ(m[1].drug, "B");
  EXPECT_NEAR(m[0].correlation, 1.0, 1e-14);
  EXPECT_NEAR(m[1].correlation, -1.0, 1e-14);
  EXPECT_EQ(m[1].weight, 0.0);
  for (const auto& x : m) EXPECT_GE(x.weight, 0.0);
  EXPECT_NEAR(*res.predictions.find("t", cell(4)), 10.0, 1e-14);
  EXPECT_NEAR(*res.predictions.find("t", cell(5)), 20.0, 1e-14);
}

TEST(MatchPredict, ConstantTrainingFallsBackToPrior) {
  std::vector<Observation> train;
  add_profile(train, "A", {2, 2, 2, 2, 5, 6});
  add_profile(train, "B", {1, 1, 1, 1, 3, 3});
  const ResponseTable t(train);
  const auto res = match_predict(t, task_from("x", {1, 2, 3, 4, 0, 0}, 4));
  EXPECT_TRUE(res.matches.empty);
  EXPECT_EQ(res.fallback_cells, 2u);
  const auto prior = cell_mean_predictor(t);
  EXPECT_DOUBLE_EQ(*res.predictions.find("x", cell(4)), prior.predict("x", cell(4)));
}

TEST(MatchPredict, TooFewObservationsIsDataError) {
  std::vector<Observation> train;
  add_profile(train, "A", {1, 2, 3});
  EXPECT_THROW(match_predict(ResponseTable(train), task_from("x", {1, 2, 3}, 1)), DataError);
}

TEST(MatchPredict, RankingTieBreakByDrugId) {
  std::vector<Observation> train;
  add_profile(train, "b", {1, 2, 3, 9});
  add_profile(train, "a", {1, 2, 3, 8});
  add_profile(train, "c", {3, 2, 1, 7});
  const auto res = match_predict(ResponseTable(train), task_from("x", {1, 2, 3, 0}, 3));
  ASSERT_EQ(res.matches.matched.size(), 3u);
  EXPECT_EQ(res.matches.matched[0].drug, "a");
  EXPECT_EQ(res.matches.matched[1].drug, "b");
  EXPECT_EQ(res.matches.matched[2].drug, "c");
}

PredictionTable table_of(const std::string& drug, const Vec& v) {
  std::vector<Observation> out;
  add_profile(out, drug, v);
  return PredictionTable(out);
}

TEST(Blend, Endpoints) {
  const auto prior = table_of("t", {1, 5, 2, 8, 3});
  const auto matched = table_of("t", {2, 1, 4, 3, 9});
  const ResponseTable truth(std::vector<Observation>{
      {"t", cell(0), 0.5}, {"t", cell(1), 2.0}, {"t", cell(2), 1.0}, {"t", cell(3), 4.0}, {"t", cell(4), 8.0}});
  const double r_prior = per_drug_r(prior, truth).per_drug_r_mean;
  const double r_matched = per_drug_r(matched, truth).per_drug_r_mean;
  EXPECT_NEAR(per_drug_r(blend(prior, matched, 0.0), truth).per_drug_r_mean, r_prior, 1e-14);
  EXPECT_NEAR(per_drug_r(blend(prior, matched, 1.0), truth).per_drug_r_mean, r_matched, 1e-14);
  for (double w : {0.0, 0.3, 0.8}) {
    EXPECT_NEAR(per_drug_r(blend(prior, prior, w), truth).per_drug_r_mean, r_prior, 1e-14);
  }
  EXPECT_THROW(blend(prior, table_of("u", {1, 2, 3, 4, 5}), 0.5), UsageError);
}

TEST(Blend, ContinuousInWeight) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    Vec p(25), m(25), t(25);
    for (int c = 0; c < 25; ++c) {
      t[c] = n(rng);
      p[c] = 0.5 * t[c] + n(rng);
      m[c] = -0.3 * t[c] + n(rng);
    }
    std::vector<Observation> tr;
    add_profile(tr, "t", t);
    const ResponseTable truth(tr);
    const auto prior = table_of("t", p), matched = table_of("t", m);
    double prev = per_drug_r(blend(prior, matched, 0.0), truth).per_drug_r_mean;
    for (int i = 1; i <= 100; ++i) {
      const double cur = per_drug_r(blend(prior, matched, i / 100.0), truth).per_drug_r_mean;
      ASSERT_LE(std::abs(cur - prev), 0.05);
      prev = cur;
    }
  }
}

TEST(SelectBlendWeight, NoiseCollapsesToPrior) {
  KShotOptions opt;
  opt.inner_trials = 5;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::vector<Observation> train;
    Vec shared(100);
    for (auto& x : shared) x = n(rng);
    for (int d = 0; d < 30; ++d) {
      Vec v(100);
      // A common cell effect plus independent noise: the prior is informative,
      // matched neighbours add nothing beyond it.
      for (int c = 0; c < 100; ++c) v[c] = shared[c] + n(rng);
      add_profile(train, "d" + std::to_string(d), v);
    }
    opt.seed = seed;
    EXPECT_EQ(select_blend_weight(ResponseTable(train), 10, opt), 0.0) << "seed " << seed;
  }
}

TEST(SelectBlendWeight, NearCopiesPreferMatching) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<Observation> train;
  Vec base(120), offset(120);
  for (auto& x : base) x = n(rng);
  for (auto& x : offset) x = n(rng);
  for (int d = 0; d < 10; ++d) {
    Vec v(120);
    // Half the drugs share the profile with a sign flip, so the cell mean prior
    // cancels it while top-N matching recovers it.
    const double sign = d % 2 ? 1.0 : -1.0;
    for (int c = 0; c < 120; ++c) v[c] = sign * base[c] + 0.1 * n(rng);
    add_profile(train, "d" + std::to_string(d), v);
  }
  KShotOptions opt;
  EXPECT_GE(select_blend_weight(ResponseTable(train), 50, opt), 0.5);
  opt.grid = {0.3};
  EXPECT_EQ(select_blend_weight(ResponseTable(train), 50, opt), 0.3);
  opt.grid = {};
  EXPECT_THROW(select_blend_weight(ResponseTable(train), 50, opt), UsageError);
}

TEST(KShotCurve, KZeroIsCellMeanPrior) {
  const auto data = generate(synth_preset("two-cluster", 5));
  const auto [train, test] = split(data.response, 5);
  KShotOptions opt;
  opt.k_list = {0};
  const auto curve = kshot_curve(train, test, opt);
  const auto prior = per_drug_r(cell_mean_predictor(train).predict(test), test);
  EXPECT_NEAR(curve.at(0)->per_drug_r_mean, prior.per_drug_r_mean, 1e-12);
  EXPECT_EQ(curve.at(0)->selected_w, 0.0);
}

TEST(KShotCurve, AnalogsHelpAndNoAnalogsCollapse) {
  KShotOptions opt;
  opt.k_list = {0, 3, 50};
  {
    const auto data = generate(synth_preset("two-cluster", 6));
    const auto [train, test] = split(data.response, 6);
    const auto curve = kshot_curve(train, test, opt);
    EXPECT_GE(curve.at(50)->per_drug_r_mean - curve.at(0)->per_drug_r_mean, 0.04);
    const auto control = permuted_pairing_control(train, test, 50, opt);
    EXPECT_LT(control.per_drug_r_mean, curve.at(50)->per_drug_r_mean);
    EXPECT_LE(control.per_drug_r_mean, curve.at(0)->per_drug_r_mean + 0.01);
    const auto again = permuted_pairing_control(train, test, 50, opt);
    EXPECT_EQ(again.per_drug_r_mean, control.per_drug_r_mean);
  }
  {
    const auto data = generate(synth_preset("no-analog", 6));
    const auto [train, test] = split(data.response, 6);
    const auto curve = kshot_curve(train, test, opt);
    EXPECT_LE(curve.at(3)->per_drug_r_mean, curve.at(0)->per_drug_r_mean + 0.01);
    EXPECT_LE(curve.at(50)->per_drug_r_mean, curve.at(0)->per_drug_r_mean + 0.01);
  }
}

TEST(KShotCurve, DuplicateInTrainNeverWorseThanPrior) {
  SynthConfig c = synth_preset("two-cluster", 7);
  c.n_drugs = 30;
  c.n_cells = 80;
  const auto data = generate(c);
  const auto [train, test] = split(data.response, 7);
  std::vector<Observation> with_copy(train.records().begin(), train.records().end());
  for (const auto& o : test.records()) with_copy.push_back({"copy_" + o.drug, o.cell, o.value});
  KShotOptions opt;
  const int k = 80 - static_cast<int>(opt.min_obs);
  opt.k_list = {0, k};
  const auto curve = kshot_curve(ResponseTable(with_copy), test, opt);
  EXPECT_GE(curve.at(k)->per_drug_r_mean, curve.at(0)->per_drug_r_mean);
}

TEST(KShotCurve, SkipsShortDrugsAndCountsThem) {
  const auto data = generate(synth_preset("two-cluster", 8));
  auto [train, test] = split(data.response, 8);
  std::vector<Observation> trimmed;
  const std::string short_drug = test.drugs().front();
  for (const auto& o : test.records()) {
    if (o.drug != short_drug || trimmed.size() < 20 || o.cell < "C010") trimmed.push_back(o);
  }
  KShotOptions opt;
  opt.k_list = {0, 50};
  const auto curve = kshot_curve(train, ResponseTable(trimmed), opt);
  EXPECT_EQ(curve.at(50)->n_skipped, 1u);
  EXPECT_EQ(curve.at(50)->n_drugs + 1, test.drugs().size());
}

TEST(Control, IdenticalProfilesEqualUnpermuted) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  Vec prof(40);
  for (auto& x : prof) x = n(rng);
  std::vector<Observation> train, test;
  for (int d = 0; d < 8; ++d) {
    Vec v(40);
    for (int c = 0; c < 40; ++c) v[c] = prof[c] * (d % 2 ? 1 : -1) + n(rng);
    add_profile(train, "tr" + std::to_string(d), v);
  }
  add_profile(test, "x", prof);
  add_profile(test, "y", prof);
  KShotOptions opt;
  opt.k_list = {10};
  const auto curve = kshot_curve(ResponseTable(train), ResponseTable(test), opt);
  const auto control = permuted_pairing_control(ResponseTable(train), ResponseTable(test), 10, opt);
  EXPECT_NEAR(control.per_drug_r_mean, curve.at(10)->per_drug_r_mean, 1e-12);
  std::vector<Observation> one;
  add_profile(one, "x", prof);
  EXPECT_THROW(permuted_pairing_control(ResponseTable(train), ResponseTable(one), 10, opt), DataError);
}

TEST(KShotCurve, MonotoneInformation) {
  KShotOptions opt;
  opt.k_list = {0, 10, 50};
  std::vector<double> d50_10, d10_0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    opt.seed = s;
    SynthConfig c = synth_preset("two-cluster", 100 + s);
    const auto data = generate(c);
    const auto [train, test] = split(data.response, s);
    const auto curve = kshot_curve(train, test, opt);
    d50_10.push_back(curve.at(50)->per_drug_r_mean - curve.at(10)->per_drug_r_mean);
    d10_0.push_back(curve.at(10)->per_drug_r_mean - curve.at(0)->per_drug_r_mean);
  }
  for (const auto* d : {&d50_10, &d10_0}) {
    const double se = sample_sd(*d) / std::sqrt(static_cast<double>(d->size()));
    EXPECT_GT(mean(*d), 2.0 * se);
  }
}

}  // namespace
}  // namespace rankbench
