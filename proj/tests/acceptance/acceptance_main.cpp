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

// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rankbench/dataio.hpp"
#include "rankbench/error.hpp"
#include "rankbench/leakage.hpp"
#include "rankbench/matching.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/models.hpp"
#include "rankbench/protocols.hpp"
#include "rankbench/random.hpp"
#include "rankbench/stats.hpp"
#include "rankbench/synth.hpp"
#include "support/oracles.hpp"

namespace rb = rankbench;

namespace {

struct Outcome {
  enum Status { kPass, kFail, kSkip } status = kFail;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Outcome::kPass : Outcome::kFail, std::move(detail)};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double uniform(rb::Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(rb::Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::string id(char p, int i) { return p + std::to_string(1000 + i); }

// Random truth and prediction tables on a full drugs x cells grid.
std::pair<rb::ResponseTable, rb::PredictionTable> random_instance(rb::Rng& rng, int nd, int nc) {
  std::normal_distribution<double> normal;
  std::vector<rb::Observation> truth, pred;
  for (int d = 0; d < nd; ++d) {
    const double mt = 3.0 * normal(rng), mp = 2.0 * normal(rng);
    for (int c = 0; c < nc; ++c) {
      const double y = mt + normal(rng);
      truth.push_back({id('D', d), id('C', c), y});
      pred.push_back({id('D', d), id('C', c), mp + 0.5 * y + normal(rng)});
    }
  }
  return {rb::ResponseTable(truth), rb::PredictionTable(pred)};
}

std::vector<double> values_of(const rb::KeyedTable& t) {
  std::vector<double> v;
  for (const auto& r : t.records()) v.push_back(r.value);
  return v;
}

// ---------------------------------------------------------------- 1
Outcome decomposition_exactness() {
  rb::Rng rng(20261016);
  double worst_sum = 0, worst_r = 0;
  for (int t = 0; t < 100; ++t) {
    const int nd = uniform_int(rng, 2, 20), nc = uniform_int(rng, 2, 30);
    const auto [truth, pred] = random_instance(rng, nd, nc);
    const auto rep = rb::decompose_global_r(pred, truth);
    const auto y = values_of(truth), p = values_of(pred);
    const double total = rb::oracle::pairwise_cov(y, p);
    const double sum = rep.cov_between + rep.cov_within + rep.cov_cross_1 + rep.cov_cross_2;
    const double scale = std::max(std::abs(total), rep.sigma_y * rep.sigma_pred);
    worst_sum = std::max(worst_sum, std::abs(sum - total) / scale);
    worst_r = std::max(worst_r, std::abs(rep.global_r_exact.value_or(99) - rb::oracle::pearson(p, y)));
  }
  return pass_if(worst_sum <= 1e-9 && worst_r <= 1e-10,
                 fmt("max rel four-term error %.2e, max |r_exact - oracle| %.2e", worst_sum, worst_r));
}

// ---------------------------------------------------------------- 2
Outcome trivial_predictor() {
  const auto data = rb::generate(rb::synth_preset("dominance", 42));
  const auto predictor = rb::drug_mean_predictor(data.response);
  const auto pred = predictor.predict(data.response);
  const auto rep = rb::per_drug_r(pred, data.response);
  const double g = rep.global_r.value_or(0);
  return pass_if(g > 0.9 && rep.per_drug_r_mean == 0.0,
                 fmt("global r %.4f, per-drug r mean %.17g", g, rep.per_drug_r_mean));
}

// ---------------------------------------------------------------- 3
Outcome metric_invariance() {
  rb::Rng rng(7);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const auto [truth, pred] = random_instance(rng, uniform_int(rng, 2, 12), uniform_int(rng, 5, 40));
    const auto base = rb::per_drug_r(pred, truth);
    std::map<std::string, std::pair<double, double>> maps;
    for (const auto& d : truth.drugs()) maps[d] = {uniform(rng, -10, 10), uniform(rng, 0.01, 20)};
    const double ga = uniform(rng, -10, 10), gb = uniform(rng, 0.01, 20);
    std::vector<rb::Observation> t2, p2;
    for (const auto& r : truth.records()) {
      const auto [a, b] = maps[r.drug];
      t2.push_back({r.drug, r.cell, a + b * r.value});
    }
    for (const auto& r : pred.records()) p2.push_back({r.drug, r.cell, ga + gb * r.value});
    const auto moved = rb::per_drug_r(rb::PredictionTable(p2), rb::ResponseTable(t2));
    for (const auto& [d, v] : base.per_drug_values) {
      worst = std::max(worst, std::abs(v - moved.per_drug_values.at(d)));
    }
  }
  return pass_if(worst <= 1e-12, fmt("max per-drug r change %.2e over 50 trials", worst));
}

// ---------------------------------------------------------------- 4
Outcome zscore_dissociation() {
  double worst_drop = 1e9, worst_change = 0;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = rb::generate(rb::synth_preset("dominance", seed));
    const auto aligned = data.aligned(true);
    rb::CvConfig cfg;
    cfg.seed = seed;
    cfg.drug_features.mode = rb::DrugFeatureMode::kMatrix;
    const auto raw = rb::run_cv(aligned, cfg);
    cfg.target_mode = rb::TargetMode::kZScorePerDrug;
    const auto z = rb::run_cv(aligned, cfg);
    const double drop = raw.pooled.global_r.value_or(0) - z.pooled.global_r.value_or(0);
    const double change = std::abs(raw.pooled.per_drug_r_mean - z.pooled.per_drug_r_mean);
    worst_drop = std::min(worst_drop, drop);
    worst_change = std::max(worst_change, change);
    ok = ok && drop >= 0.3 && change <= 0.02;
  }
  return pass_if(ok, fmt("min global r drop %.4f, max |per-drug r change| %.4f (5 seeds)", worst_drop,
                         worst_change));
}

// ---------------------------------------------------------------- 5
Outcome moa_dissociation() {
  bool ok = true;
  double max_a = 0, min_b = 1e9, min_c = 1e9, max_d = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = rb::generate(rb::synth_preset("two-cluster", seed));
    const auto aligned = data.aligned(false);
    rb::CvConfig cfg;
    cfg.seed = seed;
    const auto base = rb::run_cv(aligned, cfg);

    rb::CvConfig onehot = cfg;
    onehot.drug_features.mode = rb::DrugFeatureMode::kMoaOneHot;
    const double a = std::abs(rb::run_cv(aligned, onehot).pooled.per_drug_r_mean - base.pooled.per_drug_r_mean);

    onehot.drug_features.moa_override = rb::permute_moa(data.moa, 42);
    const double d = std::abs(rb::run_cv(aligned, onehot).pooled.per_drug_r_mean - base.pooled.per_drug_r_mean);

    for (const auto& cls : data.moa.classes()) {
      const auto members = data.moa.members(cls);
      const double all_drug = rb::mean_over(base.pooled, members).value_or(0);
      const double within = rb::run_within_moa_loo(aligned, data.moa, cls, cfg).pooled.per_drug_r_mean;
      const auto weighted = rb::run_moa_weighted(aligned, data.moa, cls, rb::kDefaultMoaWeightGrid, cfg);
      const double gain = within - all_drug;
      const double recovered = gain > 0 ? weighted.delta / gain : 0.0;
      min_b = std::min(min_b, gain);
      min_c = std::min(min_c, recovered);
      ok = ok && gain >= 0.2 && recovered >= 0.5;
    }
    max_a = std::max(max_a, a);
    max_d = std::max(max_d, d);
    ok = ok && a <= 0.02 && d <= 0.02;
  }
  return pass_if(ok, fmt("(a) max |d| %.4f (b) min within gain %.4f (c) min recovered %.2f (d) max |d| %.4f",
                         max_a, min_b, min_c, max_d));
}

// ---------------------------------------------------------------- 6
Outcome ridge_pca_oracles() {
  rb::Rng rng(99);
  std::normal_distribution<double> normal;
  double worst_ridge = 0, worst_ortho = 0;
  bool monotone = true;
  for (int t = 0; t < 50; ++t) {
    const int n = uniform_int(rng, 3, 40), p = uniform_int(rng, 1, 15);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) x(i, j) = normal(rng) * (1 + j);
    std::vector<double> y(n), w(n);
    for (int i = 0; i < n; ++i) {
      y[i] = normal(rng);
      w[i] = uniform(rng, 0.1, 5);
    }
    const double alpha = uniform(rng, 0.01, 10);
    const auto model = rb::ridge_fit(x, y, alpha, w);

    // Augmented normal equations with an unpenalized intercept column.
    Eigen::MatrixXd xa(n, p + 1);
    xa.col(0).setOnes();
    xa.rightCols(p) = x;
    Eigen::MatrixXd a = xa.transpose() * Eigen::Map<Eigen::VectorXd>(w.data(), n).asDiagonal() * xa;
    for (int j = 1; j <= p; ++j) a(j, j) += alpha;
    Eigen::VectorXd wy = Eigen::Map<Eigen::VectorXd>(w.data(), n).cwiseProduct(Eigen::Map<Eigen::VectorXd>(y.data(), n));
    const Eigen::VectorXd beta = a.fullPivLu().solve(xa.transpose() * wy);
    const double scale = std::max(1.0, beta.cwiseAbs().maxCoeff());
    worst_ridge = std::max(worst_ridge, std::abs(model.intercept - beta(0)) / scale);
    worst_ridge = std::max(worst_ridge, (model.weights - beta.tail(p)).cwiseAbs().maxCoeff() / scale);

    std::vector<std::string> ids, names;
    for (int i = 0; i < n; ++i) ids.push_back(id('C', i));
    for (int j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
    const rb::FeatureMatrix fm(ids, names, x, rb::EntityKind::kCell);
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= std::min(n, p); ++k) {
      const auto pca = rb::pca_fit(fm, k);
      const Eigen::MatrixXd gram = pca.components * pca.components.transpose();
      worst_ortho = std::max(worst_ortho, (gram - Eigen::MatrixXd::Identity(pca.k(), pca.k())).cwiseAbs().maxCoeff());
      const Eigen::MatrixXd recon = rb::pca_reconstruct(pca, rb::pca_transform(pca, x));
      const double err = (recon - x).squaredNorm();
      if (err > previous * (1 + 1e-12) + 1e-12) monotone = false;
      previous = err;
    }
  }
  return pass_if(worst_ridge <= 1e-9 && worst_ortho <= 1e-8 && monotone,
                 fmt("ridge max rel diff %.2e, PCA orthonormality %.2e, recon monotone %g", worst_ridge,
                     worst_ortho, monotone ? 1.0 : 0.0));
}

// ---------------------------------------------------------------- 7
std::pair<rb::ResponseTable, rb::ResponseTable> split_drugs(const rb::ResponseTable& all, std::uint64_t seed) {
  const auto folds = rb::make_folds(all.drugs(), rb::SplitScheme::kDrugBlind, 5, seed);
  std::vector<rb::Observation> train, test;
  for (const auto& r : all.records()) (folds.fold_of(r.drug) == 0 ? test : train).push_back(r);
  return {rb::ResponseTable(train), rb::ResponseTable(test)};
}

Outcome kshot_behaviour() {
  rb::KShotOptions opt;
  int c50_20 = 0, c20_0 = 0, ctrl = 0;
  double gain = 0;
  std::vector<int> collapse(opt.k_list.size(), 0);
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    opt.seed = static_cast<std::uint64_t>(s);
    {
      const auto data = rb::generate(rb::synth_preset("two-cluster", opt.seed));
      const auto [train, test] = split_drugs(data.response, opt.seed);
      const auto curve = rb::kshot_curve(train, test, opt);
      const double r0 = curve.at(0)->per_drug_r_mean, r20 = curve.at(20)->per_drug_r_mean,
                   r50 = curve.at(50)->per_drug_r_mean;
      const auto control = rb::permuted_pairing_control(train, test, 50, opt);
      c50_20 += r50 > r20;
      c20_0 += r20 > r0;
      ctrl += control.per_drug_r_mean <= r0 + 0.01;
      gain += (r50 - r0) / seeds;
    }
    {
      const auto data = rb::generate(rb::synth_preset("no-analog", opt.seed));
      const auto [train, test] = split_drugs(data.response, opt.seed);
      const auto curve = rb::kshot_curve(train, test, opt);
      const double r0 = curve.at(0)->per_drug_r_mean;
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        collapse[i] += curve.points[i].per_drug_r_mean <= r0 + 0.01;
      }
    }
  }
  auto significant = [&](int k) { return k > seeds / 2 && rb::oracle::sign_test_p(k, seeds) < 0.05; };
  bool ok = significant(c50_20) && significant(c20_0) && significant(ctrl) && gain >= 0.04;
  int worst_collapse = seeds;
  for (std::size_t i = 0; i < opt.k_list.size(); ++i) {
    if (opt.k_list[i] < 3) continue;
    worst_collapse = std::min(worst_collapse, collapse[i]);
    ok = ok && significant(collapse[i]);
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "r50>r20 %d/20, r20>r0 %d/20, control<=r0+0.01 %d/20, mean r50-r0 %.4f, "
                "no-analog collapse min %d/20",
                c50_20, c20_0, ctrl, gain, worst_collapse);
  return pass_if(ok, buf);
}

// ---------------------------------------------------------------- 8
Outcome leakage_inflation() {
  int positive = 0, best_beats = 0;
  double per_drug = 0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    const auto data = rb::generate(rb::synth_preset("noisy-leakage", static_cast<std::uint64_t>(s)));
    rb::LeakageSimConfig cfg;
    cfg.folds = 10;
    cfg.learner.epochs = 50;
    cfg.learner.lr = 0.05;
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto rep = rb::simulate_leakage(data.aligned(true), cfg);
    positive += rep.snoop_inflation > 0;
    best_beats += rep.best_fold_inflation > rep.snoop_inflation;
    per_drug += rep.per_drug_inflation / seeds;
  }
  return pass_if(positive >= 18 && best_beats >= 18 && std::abs(per_drug) <= 0.01,
                 fmt("snoop > 0 in %g/20, best-fold > snoop in %g/20, mean per-drug inflation %.4f", positive,
                     best_beats, per_drug));
}

// ---------------------------------------------------------------- 9
Outcome exact_statistics() {
  rb::Rng rng(5150);
  double worst = 0;
  const rb::Alternative alts[] = {rb::Alternative::kLess, rb::Alternative::kGreater, rb::Alternative::kTwoSided};
  auto expected = [](const rb::oracle::TailProbabilities& t, rb::Alternative a) {
    if (a == rb::Alternative::kLess) return t.le;
    if (a == rb::Alternative::kGreater) return t.ge;
    return std::min(1.0, 2 * std::min(t.le, t.ge));
  };
  int checked = 0;
  for (int t = 0; t < 500; ++t) {
    const auto alt = alts[t % 3];
    if (t % 2 == 0) {
      const int n = uniform_int(rng, 2, rb::kMannWhitneyExactMaxN);
      const int n1 = uniform_int(rng, 1, n - 1);
      std::vector<double> a, b;
      for (int i = 0; i < n; ++i) (i < n1 ? a : b).push_back(uniform(rng, -3, 3));
      const auto res = rb::mann_whitney_u(a, b, alt);
      if (!res.exact) return pass_if(false, "Mann-Whitney left the exact path inside its regime");
      worst = std::max(worst, std::abs(res.p_value - expected(rb::oracle::mann_whitney_enumeration(a, b), alt)));
    } else {
      const int n = uniform_int(rng, 1, rb::kWilcoxonExactMaxN);
      std::vector<double> d;
      for (int i = 0; i < n; ++i) d.push_back(static_cast<double>(uniform_int(rng, -6, 6)));
      if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) d[0] = 1.0;
      const auto res = rb::wilcoxon_signed_rank(d, alt);
      if (!res.exact) return pass_if(false, "Wilcoxon left the exact path inside its regime");
      worst = std::max(worst, std::abs(res.p_value - expected(rb::oracle::wilcoxon_enumeration(d), alt)));
    }
    ++checked;
  }
  return pass_if(worst <= 1e-12, fmt("%g samples, max |p - enumeration| %.2e", checked, worst));
}

// ---------------------------------------------------------------- 10
Outcome real_data() {
  const char* dir = std::getenv("RANKBENCH_GDSC2_DIR");
  if (!dir || !*dir) return {Outcome::kSkip, "RANKBENCH_GDSC2_DIR not set"};
  namespace fs = std::filesystem;
  const fs::path root(dir);
  for (const char* f : {"responses.csv", "rna.csv", "mut.csv", "fingerprints.csv"}) {
    if (!fs::exists(root / f)) return {Outcome::kSkip, std::string("missing ") + f};
  }
  const auto response = rb::load_response_table((root / "responses.csv").string());
  const auto rna = rb::load_feature_matrix((root / "rna.csv").string(), rb::EntityKind::kCell, "rna");
  const auto mut = rb::load_feature_matrix((root / "mut.csv").string(), rb::EntityKind::kCell, "mut");
  const auto fp = rb::load_feature_matrix((root / "fingerprints.csv").string(), rb::EntityKind::kDrug, "drug");
  const std::vector<rb::FeatureMatrix> common_rows = [&] {
    std::vector<std::string> ids;
    for (const auto& c : rna.entity_ids())
      if (mut.contains(c)) ids.push_back(c);
    std::sort(ids.begin(), ids.end());
    return std::vector<rb::FeatureMatrix>{rna.select_rows(ids), mut.select_rows(ids)};
  }();
  const auto cells = rb::FeatureMatrix::hconcat(common_rows);

  rb::CvConfig cfg;
  cfg.cell_pipeline.steps = {{"rna", 550}, {"mut", 200}};
  const auto none = rb::run_cv(rb::align(response, cells), cfg);
  const auto with_fp_data = rb::align(response, cells, fp);
  const auto none_subset = rb::run_cv(with_fp_data, cfg);
  cfg.drug_features.mode = rb::DrugFeatureMode::kMatrix;
  const auto morgan = rb::run_cv(with_fp_data, cfg);
  const auto oracle_pred = rb::drug_mean_predictor(response).predict(response);
  const double oracle_global = rb::global_r(oracle_pred, response).value_or(0);

  const double r0 = none.pooled.per_drug_r_mean;
  const double delta = morgan.pooled.per_drug_r_mean - none_subset.pooled.per_drug_r_mean;
  return pass_if(std::abs(r0 - 0.645) <= 0.02 && std::abs(delta - 0.001) <= 0.01 &&
                     std::abs(oracle_global - 0.837) <= 0.02,
                 fmt("baseline per-drug r %.4f, morgan delta %.4f, drug-mean global r %.4f", r0, delta,
                     oracle_global));
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int number;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "decomposition exactness", 5, decomposition_exactness},
      {2, "trivial predictor reproduction", 10, trivial_predictor},
      {3, "metric invariance", 1e9, metric_invariance},
      {4, "z-score dissociation", 60, zscore_dissociation},
      {5, "representation vs distribution", 180, moa_dissociation},
      {6, "ridge and PCA oracles", 1e9, ridge_pca_oracles},
      {7, "k-shot behaviour", 300, kshot_behaviour},
      {8, "leakage inflation", 180, leakage_inflation},
      {9, "exact statistics", 30, exact_statistics},
      {10, "real-data check", 1e9, real_data},
  };
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (const auto& c : criteria) {
    if (only && c.number != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status == Outcome::kPass && secs > c.budget_s) {
      o.status = Outcome::kFail;
      o.detail += " (over time budget)";
    }
    const char* tag = o.status == Outcome::kPass ? "PASS" : o.status == Outcome::kSkip ? "SKIP" : "FAIL";
    std::printf("[%s] criterion %2d %-32s %7.2fs  %s\n", tag, c.number, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
    failures += o.status == Outcome::kFail;
  }
  return failures == 0 ? 0 : 1;
}
