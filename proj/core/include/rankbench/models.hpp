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

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rankbench/dataio.hpp"

namespace rankbench {

// Principal components of a centered feature matrix.
struct PcaModel {
  Eigen::VectorXd mean_vector;
  Eigen::MatrixXd components;  // k x n_features, orthonormal rows
  Eigen::VectorXd explained_variance;  // population variance per component
  double total_variance = 0.0;
  std::vector<std::string> feature_names;
  int requested_k = 0;
  std::vector<std::string> warnings;

  int k() const { return static_cast<int>(components.rows()); }
};

// SVD-based PCA. Components are ordered by descending singular value and each
// component's largest-magnitude coordinate is positive. k is clipped to the
// numerical rank (with a warning).
PcaModel pca_fit(const FeatureMatrix& x, int k);

// (x - mean) * components^T. Columns are named "<prefix>pc1".."<prefix>pck".
FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& x,
                            std::string_view prefix = "");
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& x);
Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores);

struct RidgeModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double alpha = 1.0;
  std::vector<std::string> feature_names;
  double jitter = 0.0;  // added to alpha when the first factorization failed
};

// Weighted ridge with an unpenalized intercept:
//   (Xc^T W Xc + alpha I) w = Xc^T W yc
// where Xc, yc are centered on weighted means.
RidgeModel ridge_fit(const Eigen::MatrixXd& x, std::span<const double> y, double alpha,
                     std::span<const double> sample_weights = {},
                     std::vector<std::string> feature_names = {});

// A design whose row r is [cell_block.row(c_r) | drug_block.row(d_r)]. Rows are
// never materialized: the normal equations are accumulated block-wise.
struct FactoredDesign {
  const Eigen::MatrixXd* cell_block = nullptr;  // n_cells x p1
  const Eigen::MatrixXd* drug_block = nullptr;  // n_drugs x p2, may be null
  std::vector<Eigen::Index> cell_of_row;
  std::vector<Eigen::Index> drug_of_row;

  Eigen::Index cols() const;
  Eigen::Index rows() const { return static_cast<Eigen::Index>(cell_of_row.size()); }
  Eigen::MatrixXd materialize() const;
};

RidgeModel ridge_fit(const FactoredDesign& x, std::span<const double> y, double alpha,
                     std::span<const double> sample_weights = {});

Eigen::VectorXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& x);
// Columns are matched to the model by name.
Eigen::VectorXd ridge_predict(const RidgeModel& model, const FeatureMatrix& x);
double ridge_predict_row(const RidgeModel& model, const Eigen::MatrixXd& cell_block,
                         Eigen::Index cell, const Eigen::MatrixXd* drug_block,
                         Eigen::Index drug);

enum class PredictorKind { kRidge, kDrugMean, kCellMean, kMatched, kBlended };

const char* to_string(PredictorKind kind);

// Table-backed reference predictor: one value per drug (drug mean) or per
// cell (cell mean). Unseen entities fall back to the grand training mean.
class Predictor {
 public:
  Predictor(PredictorKind kind, std::map<std::string, double, std::less<>> values,
            double grand_mean);

  PredictorKind kind() const { return kind_; }
  double grand_mean() const { return grand_mean_; }
  const std::map<std::string, double, std::less<>>& values() const { return values_; }
  const char* fallback_policy() const { return "grand_mean"; }

  double predict(std::string_view drug, std::string_view cell, bool* fallback = nullptr) const;

  // Predictions for every key of `keys`.
  PredictionTable predict(const KeyedTable& keys, std::size_t* fallbacks = nullptr) const;

 private:
  PredictorKind kind_;
  std::map<std::string, double, std::less<>> values_;
  double grand_mean_;
};

Predictor drug_mean_predictor(const ResponseTable& train);
Predictor cell_mean_predictor(const ResponseTable& train);

struct ZScoreResult {
  ResponseTable table;
  // Drugs with < 2 observations or zero sd; centered only.
  std::vector<std::string> flagged;
};

// Within each drug: (y - mean_d) / sd_d with the population sd.
ZScoreResult zscore_per_drug(const ResponseTable& train);

}  // namespace rankbench
