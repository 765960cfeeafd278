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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "common.hpp"
#include "rankbench/error.hpp"
#include "rankbench/leakage.hpp"
#include "rankbench/matching.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/models.hpp"
#include "rankbench/stats.hpp"
#include "rankbench/synth.hpp"

namespace rankbench::cli {

namespace {

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : ""; }
std::string csv_number(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

std::string per_drug_csv(const MetricReport& r) {
  std::ostringstream out;
  out << "drug_id,per_drug_r\n";
  for (const auto& [d, v] : r.per_drug_values) out << d << ',' << csv_number(v) << '\n';
  return out.str();
}

MoaMap load_moa(Context& ctx, const std::string& path) {
  record_input(ctx, "moa", path);
  return load_label_map(path, "moa_class");
}

// Classes with at least two drugs in the response table, or the requested one.
std::vector<std::string> classes_for(const MoaMap& moa, const ResponseTable& response,
                                     const std::string& requested) {
  const auto restricted = moa.restricted_to(response.drugs());
  if (!requested.empty()) {
    if (restricted.members(requested).empty()) {
      throw DataError("class '" + requested + "' has no drugs in the response table");
    }
    return {requested};
  }
  std::vector<std::string> out;
  for (const auto& [cls, n] : restricted.census()) {
    if (n >= 2) out.push_back(cls);
  }
  if (out.empty()) throw DataError("no MoA class has at least 2 drugs");
  return out;
}

// ---------------------------------------------------------------- eval

class EvalCommand : public Command {
 public:
  std::string name() const override { return "eval"; }
  std::string description() const override { return "Cross-validated ridge evaluation"; }

  void add_options(CLI::App& app) override {
    responses_.add(app, "--responses", "Response CSV (drug_id,cell_id,value)", true);
    cells_.add(app);
    metric_.add(app);
    app.add_option("--scheme", scheme_, "drug-blind|cell-blind|scaffold|mixed");
    app.add_option("--k", k_, "Number of folds");
    app.add_option("--seed", seed_, "Fold seed");
    app.add_option("--drug-features", drug_features_, "none|<path>|moa-onehot|random:<dim>:<seed>");
    app.add_option("--pca-drug", pca_drug_, "PCA dims for a drug feature matrix (0 = raw)");
    app.add_option("--targets", targets_, "raw|zscore");
    app.add_option("--moa", moa_, "MoA CSV (drug_id,moa_class)");
    app.add_option("--scaffold", scaffold_, "Scaffold CSV (drug_id,scaffold_id)");
    app.add_option("--moa-weight-grid", weight_grid_, "Run class-weighted training over this grid");
    app.add_option("--moa-class", moa_class_, "Target class for --moa-weight-grid");
    app.add_option("--alpha", alpha_, "Ridge penalty");
    app.add_option("--predictions", predictions_, "Write pooled predictions to this CSV");
  }

  Json run(Context& ctx) override {
    LoadReport load;
    const auto response = responses_.load(ctx, "responses", &load);
    CvConfig cfg;
    const auto cells = cells_.load(ctx, &cfg.cell_pipeline);
    cfg.scheme = split_scheme_from_string(scheme_);
    cfg.k = k_;
    cfg.seed = seed_;
    cfg.alpha = alpha_;
    cfg.target_mode = target_mode_from_string(targets_);
    cfg.metric = metric_.options();
    if (!(alpha_ > 0.0)) throw UsageError("--alpha must be positive");
    std::string drug_path;
    cfg.drug_features = parse_drug_feature_spec(drug_features_, &drug_path);
    cfg.drug_features.pca_dims = pca_drug_;
    std::optional<FeatureMatrix> drug_matrix;
    if (cfg.drug_features.mode == DrugFeatureMode::kMatrix) {
      record_input(ctx, "drug_features", drug_path);
      drug_matrix = load_feature_matrix(drug_path, EntityKind::kDrug, "drug");
    }
    std::optional<MoaMap> moa;
    if (!moa_.empty()) moa = load_moa(ctx, moa_);
    std::optional<ScaffoldMap> scaffold;
    if (!scaffold_.empty()) {
      record_input(ctx, "scaffold", scaffold_);
      scaffold = load_label_map(scaffold_, "scaffold_id");
    }
    if (cfg.scheme == SplitScheme::kScaffold && !scaffold) throw UsageError("--scheme scaffold needs --scaffold");
    if (cfg.scheme == SplitScheme::kWithinMoaLoo) throw UsageError("use `moa --mode within` for within-MoA LOO");
    if (cfg.drug_features.mode == DrugFeatureMode::kMoaOneHot && !moa) {
      throw UsageError("--drug-features moa-onehot needs --moa");
    }
    if (moa_class_.empty() != weight_grid_.empty()) {
      throw UsageError("--moa-weight-grid and --moa-class must be given together");
    }

    AlignmentReport arep;
    const auto data = align(response, cells, drug_matrix, moa, scaffold, &arep);
    ctx.manifest.seeds = {seed_};
    Json result{{"alignment", to_json(arep)},
                {"load", Json{{"rows_read", load.rows_read},
                              {"duplicate_rows_averaged", load.duplicate_rows_averaged},
                              {"dropped_rows", load.dropped_rows}}}};

    if (!weight_grid_.empty()) {
      if (!moa) throw UsageError("--moa-weight-grid needs --moa");
      if (cfg.scheme != SplitScheme::kDrugBlind) throw UsageError("--moa-weight-grid needs --scheme drug-blind");
      const auto grid = parse_double_list(weight_grid_, "--moa-weight-grid");
      const auto r = run_moa_weighted(data, *moa, moa_class_, grid, cfg);
      result["moa_weighted"] = to_json(r);
      write_csv(ctx, per_drug_csv(r.weighted.pooled));
      write_predictions(r.weighted.predictions);
      return result;
    }
    const auto r = run_cv(data, cfg);
    result["cv"] = to_json(r, cfg.scheme != SplitScheme::kMixed);
    write_csv(ctx, per_drug_csv(r.pooled));
    write_predictions(r.predictions);
    return result;
  }

 private:
  void write_predictions(const PredictionTable& p) const {
    if (predictions_.empty()) return;
    std::ostringstream out;
    write_response_table(out, p, "predicted");
    save_text(predictions_, out.str());
  }

  ResponseInput responses_;
  CellInput cells_;
  MetricInput metric_;
  std::string scheme_ = "drug-blind";
  int k_ = 5;
  std::uint64_t seed_ = 42;
  std::string drug_features_ = "none";
  int pca_drug_ = 0;
  std::string targets_ = "raw";
  std::string moa_;
  std::string scaffold_;
  std::string weight_grid_;
  std::string moa_class_;
  double alpha_ = 1.0;
  std::string predictions_;
};

// ---------------------------------------------------------------- decompose

class DecomposeCommand : public Command {
 public:
  std::string name() const override { return "decompose"; }
  std::string description() const override {
    return "Global vs per-drug r and the between/within covariance decomposition";
  }

  void add_options(CLI::App& app) override {
    truth_.add(app, "--responses", "Truth CSV", true);
    metric_.add(app);
    app.add_option("--predictions", predictions_, "Prediction CSV (drug_id,cell_id,<pred column>)");
    app.add_option("--pred-col-value", pred_col_, "Value column of the prediction CSV");
    app.add_option("--predictor", predictor_, "Reference predictor fitted on the truth: drug-mean|cell-mean");
  }

  Json run(Context& ctx) override {
    if (predictions_.empty() == predictor_.empty()) {
      throw UsageError("give exactly one of --predictions and --predictor");
    }
    const auto truth = truth_.load(ctx, "responses");
    PredictionTable pred;
    std::string source;
    if (!predictions_.empty()) {
      record_input(ctx, "predictions", predictions_);
      ColumnMapping m;
      m.drug = truth_.col_drug;
      m.cell = truth_.col_cell;
      m.value = pred_col_;
      const auto loaded = load_response_table(predictions_, m);
      pred = PredictionTable(std::vector<Observation>(loaded.records().begin(), loaded.records().end()));
      source = "file";
    } else if (predictor_ == "drug-mean") {
      pred = drug_mean_predictor(truth).predict(truth);
      source = "drug_mean";
    } else if (predictor_ == "cell-mean") {
      pred = cell_mean_predictor(truth).predict(truth);
      source = "cell_mean";
    } else {
      throw UsageError("unknown predictor '" + predictor_ + "' (drug-mean|cell-mean)");
    }
    const auto metrics = per_drug_r(pred, truth, metric_.options());
    const auto dec = decompose_global_r(pred, truth);

    const auto paired = pair_with_truth(pred, truth);
    std::ostringstream csv;
    csv << "drug_id,n_cells,truth_mean,pred_mean,per_drug_r\n";
    for (std::size_t d = 0; d < paired.drugs.size(); ++d) {
      const auto it = metrics.per_drug_values.find(paired.drugs[d]);
      csv << paired.drugs[d] << ',' << paired.drug_truth(d).size() << ','
          << csv_number(mean(paired.drug_truth(d))) << ',' << csv_number(mean(paired.drug_pred(d))) << ','
          << (it == metrics.per_drug_values.end() ? "" : csv_number(it->second)) << '\n';
    }
    write_csv(ctx, csv.str());
    return Json{{"predictions", source}, {"metrics", to_json(metrics)}, {"decomposition", to_json(dec)}};
  }

 private:
  ResponseInput truth_;
  MetricInput metric_;
  std::string predictions_;
  std::string pred_col_ = "value";
  std::string predictor_;
};

// ---------------------------------------------------------------- kshot

class KShotCommand : public Command {
 public:
  std::string name() const override { return "kshot"; }
  std::string description() const override { return "K-shot response-profile matching curve"; }

  void add_options(CLI::App& app) override {
    train_.add(app, "--train", "Training response CSV", true);
    app.add_option("--test", test_path_, "Test response CSV (drugs absent from --train)")->required();
    app.add_option("--k-list", k_list_, "Comma-separated K values");
    app.add_option("--n", n_, "Top-N matched drugs");
    app.add_option("--grid", grid_, "Blend weights: lo:hi:step or a comma list");
    app.add_option("--trials", trials_, "Sampled observation subsets per (drug, K)");
    app.add_option("--inner-trials", inner_trials_, "Subsets per training drug during blend selection");
    app.add_option("--seed", seed_, "Sampling seed");
    app.add_option("--control", control_, "none|permuted");
    app.add_option("--control-k", control_k_, "K for the permuted-pairing control");
    app.add_option("--min-obs", min_obs_, "Minimum evaluation cells per drug");
    app.add_option("--min-overlap", min_overlap_, "Minimum shared cells for a match correlation");
    app.add_flag("--raw-blend", raw_blend_, "Blend unstandardized components");
  }

  Json run(Context& ctx) override {
    const auto train = train_.load(ctx, "train");
    ResponseInput test_input = train_;
    test_input.path = test_path_;
    const auto test = test_input.load(ctx, "test");
    KShotOptions opt;
    opt.k_list = parse_int_list(k_list_, "--k-list");
    opt.n = n_;
    opt.grid = parse_grid(grid_, "--grid");
    opt.trials = trials_;
    opt.inner_trials = inner_trials_;
    opt.seed = seed_;
    if (min_obs_ < 2) throw UsageError("--min-obs must be >= 2");
    opt.min_obs = static_cast<std::size_t>(min_obs_);
    opt.min_overlap = min_overlap_;
    opt.standardize = !raw_blend_;
    if (control_ != "none" && control_ != "permuted") throw UsageError("--control must be none|permuted");
    ctx.manifest.seeds = {seed_};

    const auto curve = kshot_curve(train, test, opt);
    std::optional<CurvePoint> control;
    if (control_ == "permuted") control = permuted_pairing_control(train, test, control_k_, opt);

    std::ostringstream csv;
    csv << "series,k,selected_w,per_drug_r_mean,per_drug_r_sd,n_drugs,n_skipped,n_tasks,n_fallback_cells,"
           "n_empty_matches\n";
    auto row = [&](const char* series, const CurvePoint& p) {
      csv << series << ',' << p.k << ',' << csv_number(p.selected_w) << ',' << csv_number(p.per_drug_r_mean) << ','
          << csv_number(p.per_drug_r_sd) << ',' << p.n_drugs << ',' << p.n_skipped << ',' << p.n_tasks << ','
          << p.n_fallback_cells << ',' << p.n_empty_matches << '\n';
    };
    for (const auto& p : curve.points) row("matched", p);
    if (control) row("permuted", *control);
    write_csv(ctx, csv.str());
    return Json{{"curve", to_json(curve)}, {"control", control ? to_json(*control) : Json(nullptr)}};
  }

 private:
  ResponseInput train_;
  std::string test_path_;
  std::string k_list_ = "0,1,3,5,10,20,50";
  int n_ = 5;
  std::string grid_ = "0:1:0.1";
  int trials_ = 5;
  int inner_trials_ = 2;
  std::uint64_t seed_ = 42;
  std::string control_ = "none";
  int control_k_ = 50;
  int min_obs_ = 5;
  int min_overlap_ = 2;
  bool raw_blend_ = false;
};

// ---------------------------------------------------------------- moa

class MoaCommand : public Command {
 public:
  std::string name() const override { return "moa"; }
  std::string description() const override { return "MoA one-hot, weighted and within-class protocols"; }

  void add_options(CLI::App& app) override {
    responses_.add(app, "--responses", "Response CSV", true);
    cells_.add(app);
    metric_.add(app);
    app.add_option("--moa", moa_, "MoA CSV (drug_id,moa_class)")->required();
    app.add_option("--mode", mode_, "onehot|weighted|within");
    app.add_option("--class", class_, "Target class (default: every class with >= 2 drugs)");
    app.add_option("--permute-seed", permute_seed_, "Shuffle MoA labels with this seed (control)");
    app.add_option("--moa-weight-grid", grid_, "Class weight grid for --mode weighted");
    app.add_option("--k", k_, "Number of folds");
    app.add_option("--seed", seed_, "Fold seed");
    app.add_option("--alpha", alpha_, "Ridge penalty");
    app.add_option("--targets", targets_, "raw|zscore");
  }

  Json run(Context& ctx) override {
    const auto response = responses_.load(ctx, "responses");
    CvConfig cfg;
    const auto cells = cells_.load(ctx, &cfg.cell_pipeline);
    cfg.k = k_;
    cfg.seed = seed_;
    cfg.alpha = alpha_;
    cfg.metric = metric_.options();
    cfg.target_mode = target_mode_from_string(targets_);
    MoaMap moa = load_moa(ctx, moa_);
    ctx.manifest.seeds = {seed_};
    if (permute_seed_) {
      moa = permute_moa(moa, *permute_seed_);
      ctx.manifest.seeds.push_back(*permute_seed_);
    }
    AlignmentReport arep;
    const auto data = align(response, cells, std::nullopt, moa, std::nullopt, &arep);
    Json result{{"mode", mode_},
                {"permuted", permute_seed_.has_value()},
                {"alignment", to_json(arep)}};
    std::ostringstream csv;

    if (mode_ == "onehot") {
      const auto base = run_cv(data, cfg);
      CvConfig onehot = cfg;
      onehot.drug_features.mode = DrugFeatureMode::kMoaOneHot;
      const auto with = run_cv(data, onehot);
      result["baseline"] = to_json(base, false);
      result["onehot"] = to_json(with, false);
      result["delta_per_drug_r"] = with.pooled.per_drug_r_mean - base.pooled.per_drug_r_mean;
      result["delta_global_r"] = with.pooled.global_r.value_or(0) - base.pooled.global_r.value_or(0);
      csv << "moa_class,n_drugs,baseline_r,onehot_r\n";
      for (const auto& cls : data.moa->classes()) {
        const auto members = data.moa->members(cls);
        csv << cls << ',' << members.size() << ',' << csv_number(mean_over(base.pooled, members)) << ','
            << csv_number(mean_over(with.pooled, members)) << '\n';
      }
    } else if (mode_ == "within") {
      const auto classes = classes_for(moa, response, class_);
      const auto base = run_cv(data, cfg);
      result["baseline"] = to_json(base, false);
      Json rows = Json::array();
      csv << "moa_class,n_drugs,all_drug_r,within_r,delta\n";
      for (const auto& cls : classes) {
        const auto members = data.moa->members(cls);
        const double all_drug = mean_over(base.pooled, members).value_or(0);
        Json row{{"moa_class", cls}, {"n_drugs", members.size()}, {"all_drug_r", all_drug}};
        try {
          const auto within = run_within_moa_loo(data, *data.moa, cls, cfg);
          row["within_r"] = within.pooled.per_drug_r_mean;
          row["delta"] = within.pooled.per_drug_r_mean - all_drug;
          row["within"] = to_json(within.pooled);
          csv << cls << ',' << members.size() << ',' << csv_number(all_drug) << ','
              << csv_number(within.pooled.per_drug_r_mean) << ','
              << csv_number(within.pooled.per_drug_r_mean - all_drug) << '\n';
        } catch (const DataError& e) {
          if (!class_.empty()) throw;
          row["within_r"] = nullptr;
          row["delta"] = nullptr;
          row["skipped"] = e.what();
        }
        rows.push_back(row);
      }
      result["classes"] = rows;
    } else if (mode_ == "weighted") {
      const auto classes = classes_for(moa, response, class_);
      const auto grid = parse_double_list(grid_, "--moa-weight-grid");
      Json rows = Json::array();
      csv << "moa_class,n_drugs,uniform_r,weighted_r,delta,selected_weights\n";
      for (const auto& cls : classes) {
        const auto r = run_moa_weighted(data, *data.moa, cls, grid, cfg);
        rows.push_back(to_json(r));
        std::string weights;
        for (double w : r.selected_weights) weights += (weights.empty() ? "" : ";") + csv_number(w);
        csv << cls << ',' << r.class_drugs.size() << ',' << csv_number(r.class_r_uniform) << ','
            << csv_number(r.class_r_weighted) << ',' << csv_number(r.delta) << ',' << weights << '\n';
      }
      result["classes"] = rows;
    } else {
      throw UsageError("unknown --mode '" + mode_ + "' (onehot|weighted|within)");
    }
    write_csv(ctx, csv.str());
    return result;
  }

 private:
  ResponseInput responses_;
  CellInput cells_;
  MetricInput metric_;
  std::string moa_;
  std::string mode_ = "onehot";
  std::string class_;
  std::optional<std::uint64_t> permute_seed_;
  std::string grid_ = "1,2,5,10,20";
  int k_ = 5;
  std::uint64_t seed_ = 42;
  double alpha_ = 1.0;
  std::string targets_ = "raw";
};

// ---------------------------------------------------------------- leakage

class LeakageCommand : public Command {
 public:
  std::string name() const override { return "leakage"; }
  std::string description() const override { return "Checkpoint-selection and best-fold inflation audit"; }

  void add_options(CLI::App& app) override {
    app.add_option("--epochs", epochs_, "Gradient-descent epochs");
    app.add_option("--lr", lr_, "Learning rate");
    app.add_option("--folds", folds_, "Drug-blind folds");
    app.add_option("--noise", noise_, "Response noise sd of the synthetic data");
    app.add_option("--seed", seed_, "Seed for data, folds and validation split");
    app.add_option("--alpha", alpha_, "Ridge penalty of the learner objective");
    app.add_option("--val-fraction", val_fraction_, "Validation share of training drugs");
    app.add_option("--preset", preset_, "Synthetic preset");
    responses_.add(app, "--responses", "Response CSV (instead of synthetic data)", false);
    app.add_option("--cell-features", cell_path_, "Cell feature CSV for --responses");
    app.add_option("--drug-features", drug_path_, "Drug feature CSV for --responses");
  }

  Json run(Context& ctx) override {
    LeakageSimConfig cfg;
    cfg.folds = folds_;
    cfg.val_fraction = val_fraction_;
    cfg.learner.epochs = epochs_;
    cfg.learner.lr = lr_;
    cfg.learner.alpha = alpha_;
    cfg.seed = seed_;
    ctx.manifest.seeds = {seed_};
    Json result = Json::object();
    AlignedDataset data;
    if (!responses_.path.empty()) {
      if (noise_ || preset_ != "noisy-leakage") throw UsageError("--noise/--preset conflict with --responses");
      if (cell_path_.empty() || drug_path_.empty()) {
        throw UsageError("--responses needs --cell-features and --drug-features");
      }
      const auto response = responses_.load(ctx, "responses");
      record_input(ctx, "cell_features", cell_path_);
      record_input(ctx, "drug_features", drug_path_);
      const auto cells = load_feature_matrix(cell_path_, EntityKind::kCell);
      const auto drugs = load_feature_matrix(drug_path_, EntityKind::kDrug);
      AlignmentReport arep;
      data = align(response, cells, drugs, std::nullopt, std::nullopt, &arep);
      result["data"] = "supplied";
      result["alignment"] = to_json(arep);
    } else {
      if (!cell_path_.empty() || !drug_path_.empty()) throw UsageError("feature files need --responses");
      SynthConfig sc = synth_preset(preset_, seed_);
      if (noise_) sc.sigma_noise = *noise_;
      data = generate(sc).aligned(true);
      result["data"] = "synthetic";
      result["synth_config"] = to_json(sc);
    }
    const auto report = simulate_leakage(data, cfg);
    result["report"] = to_json(report);

    std::ostringstream csv;
    csv << "fold,fair_epoch,snooped_epoch,last_epoch,fair_global_r,snooped_global_r,last_global_r,"
           "fair_per_drug_r,snooped_per_drug_r,last_per_drug_r\n";
    for (std::size_t i = 0; i < report.folds.size(); ++i) {
      const auto& f = report.folds[i];
      csv << i << ',' << f.fair_epoch << ',' << f.snooped_epoch << ',' << f.last_epoch << ','
          << csv_number(f.fair_global_r) << ',' << csv_number(f.snooped_global_r) << ','
          << csv_number(f.last_global_r) << ',' << csv_number(f.fair_per_drug_r) << ','
          << csv_number(f.snooped_per_drug_r) << ',' << csv_number(f.last_per_drug_r) << '\n';
    }
    write_csv(ctx, csv.str());
    return result;
  }

 private:
  int epochs_ = 50;
  double lr_ = 0.05;
  int folds_ = 10;
  std::optional<double> noise_;
  std::uint64_t seed_ = 42;
  double alpha_ = 1.0;
  double val_fraction_ = 0.1;
  std::string preset_ = "noisy-leakage";
  ResponseInput responses_;
  std::string cell_path_;
  std::string drug_path_;
};

// ---------------------------------------------------------------- biomarker

class BiomarkerCommand : public Command {
 public:
  std::string name() const override { return "biomarker"; }
  std::string description() const override { return "Mutant vs wild-type response test for one drug"; }

  void add_options(CLI::App& app) override {
    responses_.add(app, "--responses", "Response CSV", true);
    app.add_option("--mutations", mutations_, "Mutation status CSV (cell_id,mutant)")->required();
    app.add_option("--drug", drug_, "Drug id")->required();
    app.add_option("--alternative", alternative_, "less|greater|two-sided (mutant vs wild type)");
  }

  Json run(Context& ctx) override {
    const auto response = responses_.load(ctx, "responses");
    record_input(ctx, "mutations", mutations_);
    const auto status = load_mutation_status(mutations_);
    const auto r = biomarker_stratify(response, status, drug_, alternative_from_string(alternative_));
    std::ostringstream csv;
    csv << "cell_id,mutant,value\n";
    for (const auto& rec : response.drug_records(std::string_view(drug_))) {
      const auto it = status.find(rec.cell);
      if (it != status.end()) csv << rec.cell << ',' << it->second << ',' << csv_number(rec.value) << '\n';
    }
    write_csv(ctx, csv.str());
    Json out = to_json(r);
    out["drug_id"] = drug_;
    return out;
  }

 private:
  ResponseInput responses_;
  std::string mutations_;
  std::string drug_;
  std::string alternative_ = "less";
};

// ---------------------------------------------------------------- concordance

class ConcordanceCommand : public Command {
 public:
  std::string name() const override { return "concordance"; }
  std::string description() const override { return "Replicate and within-class profile concordance"; }

  void add_options(CLI::App& app) override {
    responses_.add(app, "--responses", "Response CSV", true);
    app.add_option("--mode", mode_, "replicate|profile");
    app.add_option("--replicate", replicate_, "Second assay CSV for --mode replicate");
    app.add_option("--anchors", anchors_, "Comma-separated anchor drugs (default: drugs in both)");
    app.add_option("--moa", moa_, "MoA CSV for --mode profile");
    app.add_option("--class", class_, "Class for --mode profile (default: every class)");
    app.add_option("--min-obs", min_obs_, "Minimum shared cells");
  }

  Json run(Context& ctx) override {
    const auto a = responses_.load(ctx, "responses");
    std::ostringstream csv;
    Json result{{"mode", mode_}};
    if (mode_ == "replicate") {
      if (replicate_.empty()) throw UsageError("--mode replicate needs --replicate");
      if (!moa_.empty() || !class_.empty()) throw UsageError("--moa/--class apply to --mode profile");
      ResponseInput second = responses_;
      second.path = replicate_;
      const auto b = second.load(ctx, "replicate");
      std::vector<std::string> anchors;
      if (anchors_.empty()) {
        std::set_intersection(a.drugs().begin(), a.drugs().end(), b.drugs().begin(), b.drugs().end(),
                              std::back_inserter(anchors));
      } else {
        std::stringstream ss(anchors_);
        for (std::string d; std::getline(ss, d, ',');) {
          if (!trim_id(d).empty()) anchors.push_back(trim_id(d));
        }
      }
      const auto r = replicate_concordance(a, b, anchors, min_obs_);
      result["report"] = to_json(r);
      csv << "drug_id,replicate_r\n";
      for (const auto& [d, v] : r.per_drug_values) csv << d << ',' << csv_number(v) << '\n';
    } else if (mode_ == "profile") {
      if (moa_.empty()) throw UsageError("--mode profile needs --moa");
      if (!replicate_.empty() || !anchors_.empty()) throw UsageError("--replicate/--anchors apply to --mode replicate");
      const MoaMap moa = load_moa(ctx, moa_);
      const auto classes = classes_for(moa, a, class_);
      Json rows = Json::array();
      csv << "moa_class,mean,sd,n_pairs\n";
      for (const auto& cls : classes) {
        Json row{{"moa_class", cls}};
        try {
          const auto pc = profile_concordance(a, moa, cls, min_obs_);
          row.update(to_json(pc));
          csv << cls << ',' << csv_number(pc.mean) << ',' << csv_number(pc.sd) << ',' << pc.n_pairs << '\n';
        } catch (const DataError& e) {
          if (!class_.empty()) throw;
          row["skipped"] = e.what();
        }
        rows.push_back(row);
      }
      result["classes"] = rows;
    } else {
      throw UsageError("unknown --mode '" + mode_ + "' (replicate|profile)");
    }
    write_csv(ctx, csv.str());
    return result;
  }

 private:
  ResponseInput responses_;
  std::string mode_ = "replicate";
  std::string replicate_;
  std::string anchors_;
  std::string moa_;
  std::string class_;
  int min_obs_ = 5;
};

// ---------------------------------------------------------------- synth

class SynthCommand : public Command {
 public:
  std::string name() const override { return "synth"; }
  std::string description() const override { return "Generate a synthetic dataset with known structure"; }

  void add_options(CLI::App& app) override {
    app.add_option("--preset", preset_, "dominance|two-cluster|no-analog|noisy-leakage");
    app.add_option("--seed", seed_, "Generator seed");
    app.add_option("--out", out_, "Output directory")->required();
    app.add_option("--n-drugs", n_drugs_, "Override the number of drugs");
    app.add_option("--n-cells", n_cells_, "Override the number of cells");
    app.add_option("--latent-dim", latent_dim_, "Override the latent dimension");
    app.add_option("--sigma-between", sigma_between_, "Override the sd of drug means");
    app.add_option("--noise", noise_, "Override the response noise sd");
    app.add_option("--clusters", clusters_, "Override the number of clusters");
    app.add_option("--angle", angle_, "Override the within-cluster angle (degrees)");
    app.add_option("--distractors", distractors_, "Override the number of distractor cell features");
  }

  Json run(Context& ctx) override {
    SynthConfig c = synth_preset(preset_, seed_);
    if (n_drugs_) c.n_drugs = *n_drugs_;
    if (n_cells_) c.n_cells = *n_cells_;
    if (latent_dim_) c.latent_dim = *latent_dim_;
    if (sigma_between_) c.sigma_between = *sigma_between_;
    if (noise_) c.sigma_noise = *noise_;
    if (clusters_) c.n_clusters = *clusters_;
    if (angle_) c.within_cluster_angle_deg = *angle_;
    if (distractors_) c.n_distractor_features = *distractors_;
    ctx.manifest.seeds = {seed_};
    const SynthDataset data = generate(c);

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw DataError("cannot create '" + out_ + "': " + ec.message());
    const fs::path dir(out_);
    std::ostringstream responses, cells, drugs, moa;
    write_response_table(responses, data.response);
    write_feature_matrix(cells, data.cell_features);
    write_feature_matrix(drugs, data.drug_features);
    write_label_map(moa, data.moa, "moa_class");
    save_text((dir / "responses.csv").string(), responses.str());
    save_text((dir / "cell_features.csv").string(), cells.str());
    save_text((dir / "drug_features.csv").string(), drugs.str());
    save_text((dir / "moa.csv").string(), moa.str());
    Json truth{{"config", to_json(c)}};
    truth.update(to_json(data.truth, data.moa));
    save_text((dir / "ground_truth.json").string(), dump(truth));

    std::ostringstream csv;
    csv << "drug_id,moa_class,mu,scale,ceiling\n";
    for (std::size_t d = 0; d < data.truth.drugs.size(); ++d) {
      const auto i = static_cast<Eigen::Index>(d);
      csv << data.truth.drugs[d] << ',' << data.moa.label_of(data.truth.drugs[d]).value_or("") << ','
          << csv_number(data.truth.mu(i)) << ',' << csv_number(data.truth.scale(i)) << ','
          << csv_number(data.truth.ceiling(i)) << '\n';
    }
    write_csv(ctx, csv.str());
    return Json{{"config", to_json(c)},
                {"n_records", data.response.size()},
                {"files", Json::array({"responses.csv", "cell_features.csv", "drug_features.csv", "moa.csv",
                                       "ground_truth.json"})}};
  }

 private:
  std::string preset_ = "dominance";
  std::uint64_t seed_ = 42;
  std::string out_;
  std::optional<int> n_drugs_, n_cells_, latent_dim_, clusters_, distractors_;
  std::optional<double> sigma_between_, noise_, angle_;
};

}  // namespace

std::vector<std::unique_ptr<Command>> make_commands() {
  std::vector<std::unique_ptr<Command>> out;
  out.push_back(std::make_unique<EvalCommand>());
  out.push_back(std::make_unique<DecomposeCommand>());
  out.push_back(std::make_unique<KShotCommand>());
  out.push_back(std::make_unique<MoaCommand>());
  out.push_back(std::make_unique<LeakageCommand>());
  out.push_back(std::make_unique<BiomarkerCommand>());
  out.push_back(std::make_unique<ConcordanceCommand>());
  out.push_back(std::make_unique<SynthCommand>());
  return out;
}

}  // namespace rankbench::cli
