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

#include "rankbench/protocols.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "rankbench/error.hpp"
#include "rankbench/models.hpp"
#include "rankbench/parallel.hpp"
#include "rankbench/random.hpp"

namespace rankbench {

const char* to_string(SplitScheme s) {
  switch (s) {
    case SplitScheme::kDrugBlind: return "drug-blind";
    case SplitScheme::kCellBlind: return "cell-blind";
    case SplitScheme::kScaffold: return "scaffold";
    case SplitScheme::kWithinMoaLoo: return "within-moa-loo";
    case SplitScheme::kMixed: return "mixed";
  }
  return "drug-blind";
}

SplitScheme split_scheme_from_string(std::string_view s) {
  if (s == "drug-blind" || s == "drug_blind") return SplitScheme::kDrugBlind;
  if (s == "cell-blind" || s == "cell_blind") return SplitScheme::kCellBlind;
  if (s == "scaffold") return SplitScheme::kScaffold;
  if (s == "within-moa-loo" || s == "within_moa_loo") return SplitScheme::kWithinMoaLoo;
  if (s == "mixed") return SplitScheme::kMixed;
  throw UsageError("unknown scheme '" + std::string(s) +
                   "' (drug-blind|cell-blind|scaffold|mixed)");
}

const char* to_string(TargetMode m) { return m == TargetMode::kRaw ? "raw" : "zscore"; }

TargetMode target_mode_from_string(std::string_view s) {
  if (s == "raw") return TargetMode::kRaw;
  if (s == "zscore") return TargetMode::kZScorePerDrug;
  throw UsageError("unknown target mode '" + std::string(s) + "' (raw|zscore)");
}

std::string record_key(std::string_view drug, std::string_view cell) {
  std::string key(drug);
  key.push_back('\x1f');
  key.append(cell);
  return key;
}

std::vector<std::string> FoldSpec::members(int fold) const {
  std::vector<std::string> out;
  for (const auto& [e, f] : assignment) {
    if (f == fold) out.push_back(e);
  }
  return out;
}

int FoldSpec::fold_of(const std::string& entity) const {
  const auto it = assignment.find(entity);
  return it == assignment.end() ? -1 : it->second;
}

FoldSpec make_folds(std::vector<std::string> entities, SplitScheme scheme, int k,
                    std::uint64_t seed, const ScaffoldMap* scaffold) {
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());

  FoldSpec spec;
  spec.scheme = scheme;
  spec.seed = seed;

  if (scheme == SplitScheme::kWithinMoaLoo) {
    if (entities.size() < 2) throw DataError("leave-one-out needs at least 2 entities");
    spec.k = static_cast<int>(entities.size());
    for (std::size_t i = 0; i < entities.size(); ++i) {
      spec.assignment[entities[i]] = static_cast<int>(i);
    }
    return spec;
  }

  if (k < 2) throw UsageError("k must be >= 2");
  if (entities.size() < static_cast<std::size_t>(k)) {
    throw DataError("cannot split " + std::to_string(entities.size()) + " entities into " +
                    std::to_string(k) + " folds");
  }
  spec.k = k;

  if (scheme == SplitScheme::kScaffold) {
    if (!scaffold) throw UsageError("scaffold scheme requires a scaffold map");
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& e : entities) {
      const auto label = scaffold->label_of(e);
      if (!label) throw DataError("drug '" + e + "' has no scaffold label");
      groups[*label].push_back(e);
    }
    if (groups.size() < static_cast<std::size_t>(k)) {
      throw DataError("only " + std::to_string(groups.size()) + " scaffold groups for " +
                      std::to_string(k) + " folds");
    }
    std::vector<std::pair<std::string, std::vector<std::string>>> ordered(groups.begin(),
                                                                         groups.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      return a.second.size() > b.second.size();
    });
    std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
    for (const auto& [label, members] : ordered) {
      const auto target = static_cast<int>(std::min_element(load.begin(), load.end()) - load.begin());
      for (const auto& m : members) spec.assignment[m] = target;
      load[static_cast<std::size_t>(target)] += members.size();
    }
    return spec;
  }

  Rng rng = make_rng(seed, "folds", to_string(scheme));
  std::shuffle(entities.begin(), entities.end(), rng);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    spec.assignment[entities[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return spec;
}

DrugFeatureSpec parse_drug_feature_spec(std::string_view text, std::string* path) {
  DrugFeatureSpec spec;
  if (text.empty() || text == "none") return spec;
  if (text == "moa-onehot" || text == "moa_onehot") {
    spec.mode = DrugFeatureMode::kMoaOneHot;
    return spec;
  }
  if (text.rfind("random:", 0) == 0) {
    const std::string rest(text.substr(7));
    const auto colon = rest.find(':');
    if (colon == std::string::npos) {
      throw UsageError("random drug features need 'random:<dim>:<seed>'");
    }
    try {
      spec.random_dim = std::stoi(rest.substr(0, colon));
      spec.random_seed = std::stoull(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("malformed random drug feature spec '" + std::string(text) + "'");
    }
    if (spec.random_dim < 1) throw UsageError("random drug feature dimension must be >= 1");
    spec.mode = DrugFeatureMode::kRandomVector;
    return spec;
  }
  spec.mode = DrugFeatureMode::kMatrix;
  if (path) *path = std::string(text);
  return spec;
}

std::optional<double> mean_over(const MetricReport& report, const std::vector<std::string>& drugs) {
  std::vector<double> v;
  for (const auto& d : drugs) {
    if (const auto it = report.per_drug_values.find(d); it != report.per_drug_values.end()) {
      v.push_back(it->second);
    }
  }
  if (v.empty()) return std::nullopt;
  return mean(v);
}

MoaMap permute_moa(const MoaMap& moa, std::uint64_t seed) {
  std::vector<std::string> drugs;
  std::vector<std::string> labels;
  for (const auto& [d, l] : moa.labels()) {
    drugs.push_back(d);
    labels.push_back(l);
  }
  Rng rng = make_rng(seed, "permute-moa");
  std::shuffle(drugs.begin(), drugs.end(), rng);
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < drugs.size(); ++i) out.emplace(drugs[i], labels[i]);
  return MoaMap(std::move(out));
}

namespace {

Eigen::MatrixXd build_cell_block(const FeatureMatrix& cells, const CellPipeline& pipeline,
                                 const std::vector<std::string>& fit_cells) {
  std::vector<Eigen::Index> fit_rows;
  fit_rows.reserve(fit_cells.size());
  for (const auto& c : fit_cells) fit_rows.push_back(*cells.row_of(c));

  std::vector<Eigen::MatrixXd> parts;
  if (pipeline.steps.empty()) {
    parts.push_back(cells.values());
  } else {
    for (const auto& step : pipeline.steps) {
      const FeatureMatrix group = cells.select_group(step.group);
      if (group.cols() == 0) {
        throw DataError("cell feature modality '" + step.group + "' has no columns");
      }
      if (step.pca_dims <= 0) {
        parts.push_back(group.values());
        continue;
      }
      Eigen::MatrixXd fit_values(static_cast<Eigen::Index>(fit_rows.size()), group.cols());
      for (std::size_t i = 0; i < fit_rows.size(); ++i) {
        fit_values.row(static_cast<Eigen::Index>(i)) = group.values().row(fit_rows[i]);
      }
      const std::vector<std::string> fit_ids(fit_cells.begin(), fit_cells.end());
      const PcaModel pca = pca_fit(
          FeatureMatrix(fit_ids, group.feature_names(), std::move(fit_values), EntityKind::kCell),
          step.pca_dims);
      parts.push_back(pca_transform(pca, group.values()));
    }
  }

  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.cols();
  Eigen::MatrixXd block(cells.rows(), total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    block.middleCols(at, p.cols()) = p;
    at += p.cols();
  }

  if (pipeline.standardize && block.cols() > 0) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      double mu = 0.0;
      for (auto r : fit_rows) mu += block(r, j);
      mu /= static_cast<double>(fit_rows.size());
      double ss = 0.0;
      for (auto r : fit_rows) ss += (block(r, j) - mu) * (block(r, j) - mu);
      const double sd = std::sqrt(ss / static_cast<double>(fit_rows.size()));
      block.col(j).array() -= mu;
      if (sd > 0.0) block.col(j) /= sd;
    }
  }
  return block;
}

struct FoldOutput {
  std::vector<Observation> predictions;
  FoldResult result;
};

// Shared state for all folds of one experiment.
class CvEngine {
 public:
  CvEngine(const AlignedDataset& dataset, const CvConfig& config)
      : data_(dataset), config_(config) {
    const auto& drugs = data_.response.drugs();
    for (std::size_t d = 0; d < drugs.size(); ++d) {
      drug_row_[drugs[d]] = static_cast<Eigen::Index>(d);
    }
    const auto& cells = data_.cell_features.entity_ids();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      cell_row_[cells[c]] = static_cast<Eigen::Index>(c);
    }
    for (const auto& r : data_.response.records()) {
      if (!cell_row_.count(r.cell)) {
        throw DataError("cell '" + r.cell + "' has no feature row; align the dataset first");
      }
    }

    dropped_.assign(drugs.size(), false);
    if (config_.drug_features.mode == DrugFeatureMode::kMatrix) {
      if (!data_.drug_features) throw UsageError("matrix drug features requested but none loaded");
      for (std::size_t d = 0; d < drugs.size(); ++d) {
        if (!data_.drug_features->contains(drugs[d])) {
          dropped_[d] = true;
          ++n_dropped_;
        }
      }
    }
    if (config_.drug_features.mode == DrugFeatureMode::kMoaOneHot) {
      const MoaMap* moa = config_.drug_features.moa_override ? &*config_.drug_features.moa_override
                                                             : (data_.moa ? &*data_.moa : nullptr);
      if (!moa) throw UsageError("moa-onehot drug features need a MoA map");
      const auto classes = moa->classes();
      fixed_drug_block_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(drugs.size()),
                                                static_cast<Eigen::Index>(classes.size()));
      for (std::size_t d = 0; d < drugs.size(); ++d) {
        if (const auto label = moa->label_of(drugs[d])) {
          const auto j = std::lower_bound(classes.begin(), classes.end(), *label) - classes.begin();
          fixed_drug_block_(static_cast<Eigen::Index>(d), j) = 1.0;
        }
      }
    }
    if (config_.drug_features.mode == DrugFeatureMode::kRandomVector) {
      const int dim = config_.drug_features.random_dim;
      fixed_drug_block_.resize(static_cast<Eigen::Index>(drugs.size()), dim);
      for (std::size_t d = 0; d < drugs.size(); ++d) {
        Rng rng = make_rng(config_.drug_features.random_seed, "random-drug-vector", drugs[d]);
        std::normal_distribution<double> normal;
        for (int j = 0; j < dim; ++j) fixed_drug_block_(static_cast<Eigen::Index>(d), j) = normal(rng);
      }
    }

    if (config_.scheme != SplitScheme::kCellBlind) {
      shared_cell_block_ = build_cell_block(data_.cell_features, config_.cell_pipeline,
                                            data_.cell_features.entity_ids());
    }
  }

  std::size_t n_dropped() const { return n_dropped_; }

  // Fold index of every response record; -1 when unassigned.
  std::vector<int> record_folds(const FoldSpec& spec) const {
    std::vector<int> out;
    out.reserve(data_.response.size());
    for (const auto& r : data_.response.records()) {
      switch (spec.scheme) {
        case SplitScheme::kCellBlind: out.push_back(spec.fold_of(r.cell)); break;
        case SplitScheme::kMixed: out.push_back(spec.fold_of(record_key(r.drug, r.cell))); break;
        default: out.push_back(spec.fold_of(r.drug)); break;
      }
    }
    return out;
  }

  FoldOutput run(const std::vector<int>& record_fold, int fold, double class_weight) const {
    const auto records = data_.response.records();
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (record_fold[i] < 0 || dropped_[static_cast<std::size_t>(drug_row_.at(records[i].drug))]) {
        continue;
      }
      (record_fold[i] == fold ? test : train).push_back(i);
    }

    FoldOutput out;
    out.result.fold = fold;
    out.result.n_train_records = train.size();
    out.result.n_test_records = test.size();
    if (train.size() < 2) throw DataError("fold " + std::to_string(fold) + " has no training data");
    if (test.empty()) return out;
    assert_disjoint(train, test);

    // Cell representation; refit on training cells when cells are held out.
    Eigen::MatrixXd fold_cell_block;
    const Eigen::MatrixXd* cell_block = &shared_cell_block_;
    if (config_.scheme == SplitScheme::kCellBlind) {
      std::set<std::string> train_cells;
      for (auto i : train) train_cells.insert(records[i].cell);
      fold_cell_block = build_cell_block(data_.cell_features, config_.cell_pipeline,
                                         {train_cells.begin(), train_cells.end()});
      cell_block = &fold_cell_block;
    }

    // Drug representation.
    Eigen::MatrixXd fold_drug_block;
    const Eigen::MatrixXd* drug_block = nullptr;
    if (config_.drug_features.mode == DrugFeatureMode::kMatrix) {
      fold_drug_block = matrix_drug_block(train);
      drug_block = &fold_drug_block;
    } else if (fixed_drug_block_.size() > 0) {
      drug_block = &fixed_drug_block_;
    }

    // Targets and weights.
    std::vector<double> y;
    y.reserve(train.size());
    if (config_.target_mode == TargetMode::kZScorePerDrug) {
      std::vector<Observation> obs;
      obs.reserve(train.size());
      for (auto i : train) obs.push_back(records[i]);
      const auto z = zscore_per_drug(ResponseTable(std::move(obs), data_.response.units()));
      // zscore keeps (drug, cell) order, which matches `train` order.
      for (const auto& r : z.table.records()) y.push_back(r.value);
      if (!z.flagged.empty()) {
        out.result.warnings.push_back(std::to_string(z.flagged.size()) +
                                      " training drugs were centered only (degenerate sd)");
      }
    } else {
      for (auto i : train) y.push_back(records[i].value);
    }
    std::vector<double> weights;
    if (!config_.weight_class.empty() && class_weight != 1.0) {
      const MoaMap* moa = data_.moa ? &*data_.moa : nullptr;
      if (!moa) throw UsageError("class weighting needs a MoA map");
      weights.reserve(train.size());
      for (auto i : train) {
        const auto label = moa->label_of(records[i].drug);
        weights.push_back(label && *label == config_.weight_class ? class_weight : 1.0);
      }
    }

    FactoredDesign design;
    design.cell_block = cell_block;
    design.drug_block = drug_block;
    design.cell_of_row.reserve(train.size());
    design.drug_of_row.reserve(train.size());
    for (auto i : train) {
      design.cell_of_row.push_back(cell_row_.at(records[i].cell));
      design.drug_of_row.push_back(drug_row_.at(records[i].drug));
    }
    const RidgeModel model = ridge_fit(design, y, config_.alpha, weights);

    out.predictions.reserve(test.size());
    for (auto i : test) {
      const auto& r = records[i];
      out.predictions.push_back(
          {r.drug, r.cell,
           ridge_predict_row(model, *cell_block, cell_row_.at(r.cell), drug_block, drug_row_.at(r.drug))});
    }
    try {
      out.result.report =
          per_drug_r(PredictionTable(out.predictions), data_.response, config_.metric);
    } catch (const DataError& e) {
      out.result.warnings.push_back(std::string("fold metrics unavailable: ") + e.what());
    }
    return out;
  }

  CvResult finalize(std::vector<FoldOutput> outputs, const FoldSpec& spec) const {
    CvResult result;
    result.fold_spec = spec;
    result.config = config_;
    result.dropped_drugs = n_dropped_;
    std::vector<Observation> pooled;
    for (auto& o : outputs) {
      pooled.insert(pooled.end(), std::make_move_iterator(o.predictions.begin()),
                    std::make_move_iterator(o.predictions.end()));
      result.folds.push_back(std::move(o.result));
    }
    result.predictions = PredictionTable(std::move(pooled));
    result.pooled = per_drug_r(result.predictions, data_.response, config_.metric);
    try {
      result.decomposition = decompose_global_r(result.predictions, data_.response);
    } catch (const DataError& e) {
      result.warnings.push_back(std::string("decomposition unavailable: ") + e.what());
    }
    try {
      const auto z = zscore_per_drug(data_.response);
      result.global_r_zscored_truth = global_r(result.predictions, z.table);
    } catch (const DataError&) {
    }
    return result;
  }

 private:
  void assert_disjoint(const std::vector<std::size_t>& train,
                       const std::vector<std::size_t>& test) const {
    const auto records = data_.response.records();
    auto entity = [&](std::size_t i) -> std::string {
      if (config_.scheme == SplitScheme::kCellBlind) return records[i].cell;
      if (config_.scheme == SplitScheme::kMixed) return record_key(records[i].drug, records[i].cell);
      return records[i].drug;
    };
    std::set<std::string> test_entities;
    for (auto i : test) test_entities.insert(entity(i));
    for (auto i : train) {
      if (test_entities.count(entity(i))) {
        throw std::logic_error("fold leakage: held-out entity '" + entity(i) + "' in training");
      }
    }
  }

  Eigen::MatrixXd matrix_drug_block(const std::vector<std::size_t>& train) const {
    const auto& drugs = data_.response.drugs();
    const FeatureMatrix& fm = *data_.drug_features;
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(drugs.size()), fm.cols());
    for (std::size_t d = 0; d < drugs.size(); ++d) {
      if (!dropped_[d]) raw.row(static_cast<Eigen::Index>(d)) = fm.values().row(*fm.row_of(drugs[d]));
    }
    if (config_.drug_features.pca_dims <= 0) return raw;

    std::set<std::string> train_drugs;
    for (auto i : train) train_drugs.insert(data_.response.records()[i].drug);
    const std::vector<std::string> ids(train_drugs.begin(), train_drugs.end());
    const FeatureMatrix fit = fm.select_rows(ids);
    const PcaModel pca = pca_fit(fit, config_.drug_features.pca_dims);
    return pca_transform(pca, raw);
  }

  const AlignedDataset& data_;
  const CvConfig& config_;
  std::unordered_map<std::string, Eigen::Index> drug_row_;
  std::unordered_map<std::string, Eigen::Index> cell_row_;
  std::vector<bool> dropped_;
  std::size_t n_dropped_ = 0;
  Eigen::MatrixXd shared_cell_block_;
  Eigen::MatrixXd fixed_drug_block_;
};

std::vector<std::string> fold_entities(const AlignedDataset& dataset, SplitScheme scheme) {
  switch (scheme) {
    case SplitScheme::kCellBlind: return dataset.response.cells();
    case SplitScheme::kMixed: {
      std::vector<std::string> keys;
      for (const auto& r : dataset.response.records()) keys.push_back(record_key(r.drug, r.cell));
      return keys;
    }
    default: return dataset.response.drugs();
  }
}

}  // namespace

CvResult run_cv(const AlignedDataset& dataset, const CvConfig& config, const FoldSpec& folds) {
  const CvEngine engine(dataset, config);
  const auto record_fold = engine.record_folds(folds);
  std::vector<FoldOutput> outputs(static_cast<std::size_t>(folds.k));
  parallel_for(outputs.size(), [&](std::size_t f) {
    outputs[f] = engine.run(record_fold, static_cast<int>(f), config.class_weight);
  });
  return engine.finalize(std::move(outputs), folds);
}

CvResult run_cv(const AlignedDataset& dataset, const CvConfig& config) {
  const ScaffoldMap* scaffold = dataset.scaffold ? &*dataset.scaffold : nullptr;
  const FoldSpec folds = make_folds(fold_entities(dataset, config.scheme), config.scheme,
                                    config.k, config.seed, scaffold);
  return run_cv(dataset, config, folds);
}

CvResult run_within_moa_loo(const AlignedDataset& dataset, const MoaMap& moa,
                            const std::string& class_label, const CvConfig& base) {
  std::vector<std::string> members;
  for (const auto& d : moa.members(class_label)) {
    if (dataset.response.drug_index(d)) members.push_back(d);
  }
  if (members.size() < 2) {
    throw DataError("class '" + class_label + "' has fewer than 2 drugs with responses");
  }
  CvConfig config = base;
  config.scheme = SplitScheme::kWithinMoaLoo;
  config.weight_class.clear();
  config.class_weight = 1.0;
  const FoldSpec folds = make_folds(members, SplitScheme::kWithinMoaLoo, 0, base.seed);
  return run_cv(dataset, config, folds);
}

MoaWeightedResult run_moa_weighted(const AlignedDataset& dataset, const MoaMap& moa,
                                   const std::string& class_label,
                                   const std::vector<double>& grid, const CvConfig& base) {
  if (grid.empty()) throw UsageError("moa weight grid is empty");
  for (double w : grid) {
    if (!(w > 0.0) || !std::isfinite(w)) throw UsageError("moa weights must be positive");
  }
  std::vector<double> sorted_grid = grid;
  std::sort(sorted_grid.begin(), sorted_grid.end());
  sorted_grid.erase(std::unique(sorted_grid.begin(), sorted_grid.end()), sorted_grid.end());

  AlignedDataset data = dataset;
  data.moa = moa.restricted_to(dataset.response.drugs());

  MoaWeightedResult out;
  out.target_class = class_label;
  out.unlabeled_drugs = dataset.response.drugs().size() - data.moa->size();
  for (const auto& d : data.moa->members(class_label)) out.class_drugs.push_back(d);
  if (out.class_drugs.empty()) throw DataError("class '" + class_label + "' has no drugs");

  CvConfig config = base;
  config.scheme = SplitScheme::kDrugBlind;
  config.weight_class = class_label;
  const FoldSpec outer = make_folds(data.response.drugs(), SplitScheme::kDrugBlind, base.k, base.seed);

  const CvEngine engine(data, config);
  const auto outer_fold = engine.record_folds(outer);
  const std::set<std::string> class_set(out.class_drugs.begin(), out.class_drugs.end());

  std::vector<FoldOutput> outputs(static_cast<std::size_t>(outer.k));
  out.selected_weights.assign(static_cast<std::size_t>(outer.k), sorted_grid.front());
  parallel_for(outputs.size(), [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    std::vector<std::string> in_class, others;
    for (const auto& [drug, fi] : outer.assignment) {
      if (fi == fold) continue;
      (class_set.count(drug) ? in_class : others).push_back(drug);
    }
    Rng rng = make_rng(base.seed, "moa-inner-split", fold);
    std::shuffle(in_class.begin(), in_class.end(), rng);
    std::shuffle(others.begin(), others.end(), rng);

    double selected = sorted_grid.front();
    if (sorted_grid.size() > 1 && in_class.size() >= 2) {
      FoldSpec inner;
      inner.scheme = SplitScheme::kDrugBlind;
      inner.k = 2;
      inner.seed = base.seed;
      const auto n_val_class = std::max<std::size_t>(1, (in_class.size() + 4) / 5);
      const auto n_val_other = (others.size() + 2) / 5;
      std::vector<std::string> val_class;
      for (std::size_t i = 0; i < in_class.size(); ++i) {
        inner.assignment[in_class[i]] = i < n_val_class ? 0 : 1;
        if (i < n_val_class) val_class.push_back(in_class[i]);
      }
      for (std::size_t i = 0; i < others.size(); ++i) {
        inner.assignment[others[i]] = i < n_val_other ? 0 : 1;
      }
      const auto inner_fold = engine.record_folds(inner);
      double best = -std::numeric_limits<double>::infinity();
      for (double w : sorted_grid) {
        const FoldOutput o = engine.run(inner_fold, 0, w);
        if (!o.result.report) continue;
        const auto score = mean_over(*o.result.report, val_class);
        if (score && *score > best) {
          best = *score;
          selected = w;
        }
      }
    }
    out.selected_weights[f] = selected;
    outputs[f] = engine.run(outer_fold, fold, selected);
  });
  out.weighted = engine.finalize(std::move(outputs), outer);

  CvConfig uniform = config;
  uniform.weight_class.clear();
  uniform.class_weight = 1.0;
  out.uniform = run_cv(data, uniform, outer);

  out.class_r_weighted = mean_over(out.weighted.pooled, out.class_drugs).value_or(0.0);
  out.class_r_uniform = mean_over(out.uniform.pooled, out.class_drugs).value_or(0.0);
  out.delta = out.class_r_weighted - out.class_r_uniform;
  return out;
}

}  // namespace rankbench
