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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rankbench/dataio.hpp"
#include "rankbench/metrics.hpp"

namespace rankbench {

enum class SplitScheme { kDrugBlind, kCellBlind, kScaffold, kWithinMoaLoo, kMixed };

const char* to_string(SplitScheme s);
SplitScheme split_scheme_from_string(std::string_view s);

// Assignment of entities (drugs, cells, or record keys for `mixed`) to folds.
struct FoldSpec {
  SplitScheme scheme = SplitScheme::kDrugBlind;
  int k = 5;
  std::uint64_t seed = 42;
  std::map<std::string, int> assignment;

  // Sorted members of one fold.
  std::vector<std::string> members(int fold) const;
  int fold_of(const std::string& entity) const;
};

// drug_blind / cell_blind / mixed: sort, seeded shuffle, round-robin.
// scaffold: scaffold groups by descending size (ties by scaffold id), each
// placed on the currently smallest fold (ties by lowest fold index).
// within_moa_loo: one entity per fold, k is ignored.
FoldSpec make_folds(std::vector<std::string> entities, SplitScheme scheme, int k,
                    std::uint64_t seed, const ScaffoldMap* scaffold = nullptr);

// Key used for record-level (`mixed`) folds.
std::string record_key(std::string_view drug, std::string_view cell);

// One modality of the cell representation. pca_dims == 0 keeps raw columns.
struct ModalityStep {
  std::string group;
  int pca_dims = 0;
};

struct CellPipeline {
  // Empty: every column of the cell matrix, raw.
  std::vector<ModalityStep> steps;
  bool standardize = false;
};

enum class DrugFeatureMode { kNone, kMatrix, kMoaOneHot, kRandomVector };

struct DrugFeatureSpec {
  DrugFeatureMode mode = DrugFeatureMode::kNone;
  int random_dim = 0;
  std::uint64_t random_seed = 0;
  int pca_dims = 0;  // matrix mode; 0 keeps raw columns
  // moa_onehot mode reads this map when set, else the dataset's.
  std::optional<MoaMap> moa_override;
};

// Parses "none", "moa-onehot", "random:<dim>:<seed>" or treats anything else
// as a matrix path (returned through `path`).
DrugFeatureSpec parse_drug_feature_spec(std::string_view text, std::string* path);

enum class TargetMode { kRaw, kZScorePerDrug };

const char* to_string(TargetMode m);
TargetMode target_mode_from_string(std::string_view s);

struct CvConfig {
  SplitScheme scheme = SplitScheme::kDrugBlind;
  int k = 5;
  std::uint64_t seed = 42;
  CellPipeline cell_pipeline;
  DrugFeatureSpec drug_features;
  TargetMode target_mode = TargetMode::kRaw;
  // Training records of drugs in `weight_class` get weight `class_weight`.
  std::string weight_class;
  double class_weight = 1.0;
  double alpha = 1.0;
  MetricOptions metric;
};

struct FoldResult {
  int fold = 0;
  std::size_t n_train_records = 0;
  std::size_t n_test_records = 0;
  std::optional<MetricReport> report;  // null when the fold has no evaluable drug
  std::vector<std::string> warnings;
};

struct CvResult {
  MetricReport pooled;
  std::optional<DecompositionReport> decomposition;
  // Global r of pooled predictions against per-drug z-scored truth.
  std::optional<double> global_r_zscored_truth;
  std::vector<FoldResult> folds;
  PredictionTable predictions;
  FoldSpec fold_spec;
  CvConfig config;
  std::size_t dropped_drugs = 0;  // lacking drug features in matrix mode
  std::vector<std::string> warnings;
};

CvResult run_cv(const AlignedDataset& dataset, const CvConfig& config);

// Same as run_cv but with caller-supplied folds.
CvResult run_cv(const AlignedDataset& dataset, const CvConfig& config, const FoldSpec& folds);

// Leave-one-drug-out restricted to the drugs of one class.
CvResult run_within_moa_loo(const AlignedDataset& dataset, const MoaMap& moa,
                            const std::string& class_label, const CvConfig& base);

struct MoaWeightedResult {
  std::string target_class;
  CvResult weighted;
  CvResult uniform;
  std::vector<double> selected_weights;  // one per outer fold
  std::vector<std::string> class_drugs;
  double class_r_weighted = 0.0;  // mean per-drug r over evaluated class drugs
  double class_r_uniform = 0.0;
  double delta = 0.0;
  std::size_t unlabeled_drugs = 0;
};

inline const std::vector<double> kDefaultMoaWeightGrid = {1.0, 2.0, 5.0, 10.0, 20.0};

// Drug-blind CV where, per outer fold, an 80/20 inner split of the training
// drugs selects the class weight from `grid` that maximizes inner per-drug r
// of the target class.
MoaWeightedResult run_moa_weighted(const AlignedDataset& dataset, const MoaMap& moa,
                                   const std::string& class_label,
                                   const std::vector<double>& grid, const CvConfig& base);

// Seeded permutation of drugs against the fixed multiset of labels.
MoaMap permute_moa(const MoaMap& moa, std::uint64_t seed = 42);

// Mean per-drug r over the given drugs present in a report; nullopt if none.
std::optional<double> mean_over(const MetricReport& report,
                                const std::vector<std::string>& drugs);

}  // namespace rankbench
