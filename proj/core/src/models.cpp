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

#include "rankbench/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rankbench/error.hpp"
#include "rankbench/metrics.hpp"

namespace rankbench {
namespace {

Eigen::VectorXd solve_spd(Eigen::MatrixXd a, const Eigen::VectorXd& b, double* jitter) {
  if (!a.allFinite() || !b.allFinite()) throw DataError("ridge: non-finite normal equations");
  const double escalation[] = {0.0, 1e-10, 1e-8};
  double added = 0.0;
  for (double j : escalation) {
    a.diagonal().array() += j - added;
    added = j;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd w = llt.solve(b);
      if (w.allFinite()) {
        if (jitter) *jitter = j;
        return w;
      }
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  std::ostringstream msg;
  msg << "ridge: factorization failed (reciprocal condition estimate " << ldlt.rcond() << ")";
  throw NumericalError(msg.str());
}

void check_weights(std::span<const double> w, std::size_t n) {
  if (w.empty()) return;
  if (w.size() != n) throw UsageError("ridge: sample_weights length mismatch");
  bool any = false;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("ridge: weights must be finite and >= 0");
    any = any || v > 0.0;
  }
  if (!any) throw DataError("ridge: all sample weights are zero");
}

}  // namespace

// ---------------------------------------------------------------------------
// PCA

PcaModel pca_fit(const FeatureMatrix& x, int k) {
  if (k < 1) throw UsageError("pca: k must be >= 1");
  if (x.rows() < 2) throw DataError("pca: need at least 2 rows");

  PcaModel model;
  model.requested_k = k;
  model.feature_names = x.feature_names();
  model.mean_vector = x.values().colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.values().rowwise() - model.mean_vector.transpose();
  const double n = static_cast<double>(x.rows());
  model.total_variance = centered.squaredNorm() / n;

  const int max_k = static_cast<int>(std::min(x.rows(), x.cols()));
  if (k > max_k) {
    model.warnings.push_back("k=" + std::to_string(k) + " exceeds min(n_samples, n_features)=" +
                             std::to_string(max_k) + "; clipped");
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = s.size() > 0 ? s(0) * static_cast<double>(std::max(x.rows(), x.cols())) *
                                        std::numeric_limits<double>::epsilon()
                                  : 0.0;
  int rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  const int k_eff = std::min({k, max_k, rank});
  if (k_eff < std::min(k, max_k)) {
    model.warnings.push_back("k clipped to numerical rank " + std::to_string(rank));
  }

  model.components = svd.matrixV().leftCols(k_eff).transpose();
  model.explained_variance = s.head(k_eff).array().square() / n;
  for (int i = 0; i < k_eff; ++i) {
    Eigen::Index arg = 0;
    model.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (model.components(i, arg) < 0.0) model.components.row(i) *= -1.0;
  }
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.mean_vector.size()) throw SchemaError("pca: feature count mismatch");
  return (x.rowwise() - model.mean_vector.transpose()) * model.components.transpose();
}

FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& x,
                            std::string_view prefix) {
  if (x.feature_names() != model.feature_names) {
    throw SchemaError("pca: feature names do not match the training order");
  }
  std::vector<std::string> names;
  for (int i = 0; i < model.k(); ++i) names.push_back(std::string(prefix) + "pc" + std::to_string(i + 1));
  return FeatureMatrix(x.entity_ids(), std::move(names), pca_transform(model, x.values()), x.kind(),
                       std::vector<std::string>(static_cast<std::size_t>(model.k()), std::string(prefix)));
}

Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores) {
  return (scores * model.components).rowwise() + model.mean_vector.transpose();
}

// ---------------------------------------------------------------------------
// Ridge

RidgeModel ridge_fit(const Eigen::MatrixXd& x, std::span<const double> y, double alpha,
                     std::span<const double> sample_weights,
                     std::vector<std::string> feature_names) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n) throw UsageError("ridge: rows(X) != |y|");
  if (n < 2) throw DataError("ridge: need at least 2 rows");
  if (!(alpha > 0.0)) throw UsageError("ridge: alpha must be > 0");
  if (!x.allFinite()) throw DataError("ridge: non-finite design matrix");
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("ridge: non-finite target");
  }
  check_weights(sample_weights, n);
  if (!feature_names.empty() && feature_names.size() != static_cast<std::size_t>(x.cols())) {
    throw UsageError("ridge: feature_names length mismatch");
  }

  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd w = sample_weights.empty()
                          ? Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n))
                          : Eigen::Map<const Eigen::VectorXd>(sample_weights.data(),
                                                             static_cast<Eigen::Index>(n))
                                .eval();
  const double total = w.sum();
  const Eigen::RowVectorXd x_mean = (w.transpose() * x) / total;
  const double y_mean = w.dot(yv) / total;
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = yv.array() - y_mean;

  Eigen::MatrixXd a = xc.transpose() * w.asDiagonal() * xc;
  a.diagonal().array() += alpha;
  const Eigen::VectorXd b = xc.transpose() * (w.array() * yc.array()).matrix();

  RidgeModel model;
  model.alpha = alpha;
  model.weights = solve_spd(std::move(a), b, &model.jitter);
  model.intercept = y_mean - x_mean.dot(model.weights);
  model.feature_names = std::move(feature_names);
  return model;
}

Eigen::Index FactoredDesign::cols() const {
  return (cell_block ? cell_block->cols() : 0) + (drug_block ? drug_block->cols() : 0);
}

Eigen::MatrixXd FactoredDesign::materialize() const {
  const Eigen::Index p1 = cell_block ? cell_block->cols() : 0;
  Eigen::MatrixXd out(rows(), cols());
  for (Eigen::Index r = 0; r < rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    if (p1 > 0) out.row(r).head(p1) = cell_block->row(cell_of_row[i]);
    if (drug_block && drug_block->cols() > 0) {
      out.row(r).tail(drug_block->cols()) = drug_block->row(drug_of_row[i]);
    }
  }
  return out;
}

RidgeModel ridge_fit(const FactoredDesign& x, std::span<const double> y, double alpha,
                     std::span<const double> sample_weights) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (!x.cell_block) throw UsageError("ridge: factored design needs a cell block");
  if (y.size() != n || x.drug_of_row.size() != n) throw UsageError("ridge: rows(X) != |y|");
  if (n < 2) throw DataError("ridge: need at least 2 rows");
  if (!(alpha > 0.0)) throw UsageError("ridge: alpha must be > 0");
  check_weights(sample_weights, n);
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("ridge: non-finite target");
  }

  const Eigen::MatrixXd& z = *x.cell_block;
  const Eigen::MatrixXd empty(0, 0);
  const bool has_drug = x.drug_block && x.drug_block->cols() > 0;
  const Eigen::MatrixXd& f = has_drug ? *x.drug_block : empty;
  const Eigen::Index p1 = z.cols();
  const Eigen::Index p2 = has_drug ? f.cols() : 0;

  // Per-entity weight totals.
  Eigen::VectorXd cell_w = Eigen::VectorXd::Zero(z.rows());
  Eigen::VectorXd drug_w = Eigen::VectorXd::Zero(has_drug ? f.rows() : 0);
  double total = 0.0;
  double wy = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double w = sample_weights.empty() ? 1.0 : sample_weights[r];
    cell_w(x.cell_of_row[r]) += w;
    if (has_drug) drug_w(x.drug_of_row[r]) += w;
    total += w;
    wy += w * y[r];
  }
  const double y_mean = wy / total;
  const Eigen::RowVectorXd z_mean = (cell_w.transpose() * z) / total;
  const Eigen::MatrixXd zc = z.rowwise() - z_mean;
  Eigen::RowVectorXd f_mean;
  Eigen::MatrixXd fc;
  if (has_drug) {
    f_mean = (drug_w.transpose() * f) / total;
    fc = f.rowwise() - f_mean;
  }

  // Weighted centered-target sums per entity, and the cell x drug weight grid.
  Eigen::VectorXd cell_wy = Eigen::VectorXd::Zero(z.rows());
  Eigen::VectorXd drug_wy = Eigen::VectorXd::Zero(has_drug ? f.rows() : 0);
  Eigen::MatrixXd grid;
  if (has_drug) grid = Eigen::MatrixXd::Zero(z.rows(), f.rows());
  for (std::size_t r = 0; r < n; ++r) {
    const double w = sample_weights.empty() ? 1.0 : sample_weights[r];
    const double yc = y[r] - y_mean;
    cell_wy(x.cell_of_row[r]) += w * yc;
    if (has_drug) {
      drug_wy(x.drug_of_row[r]) += w * yc;
      grid(x.cell_of_row[r], x.drug_of_row[r]) += w;
    }
  }

  Eigen::MatrixXd a(p1 + p2, p1 + p2);
  Eigen::VectorXd b(p1 + p2);
  a.topLeftCorner(p1, p1) = zc.transpose() * cell_w.asDiagonal() * zc;
  b.head(p1) = zc.transpose() * cell_wy;
  if (has_drug) {
    const Eigen::MatrixXd cross = zc.transpose() * grid * fc;
    a.topRightCorner(p1, p2) = cross;
    a.bottomLeftCorner(p2, p1) = cross.transpose();
    a.bottomRightCorner(p2, p2) = fc.transpose() * drug_w.asDiagonal() * fc;
    b.tail(p2) = fc.transpose() * drug_wy;
  }
  a.diagonal().array() += alpha;

  RidgeModel model;
  model.alpha = alpha;
  model.weights = solve_spd(std::move(a), b, &model.jitter);
  model.intercept = y_mean - z_mean.dot(model.weights.head(p1));
  if (has_drug) model.intercept -= f_mean.dot(model.weights.tail(p2));
  return model;
}

Eigen::VectorXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.weights.size()) throw SchemaError("ridge: feature count mismatch");
  return (x * model.weights).array() + model.intercept;
}

Eigen::VectorXd ridge_predict(const RidgeModel& model, const FeatureMatrix& x) {
  if (model.feature_names.empty()) return ridge_predict(model, x.values());
  Eigen::MatrixXd aligned(x.rows(), static_cast<Eigen::Index>(model.feature_names.size()));
  const auto& names = x.feature_names();
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    const auto it = std::find(names.begin(), names.end(), model.feature_names[j]);
    if (it == names.end()) {
      throw SchemaError("ridge: feature '" + model.feature_names[j] + "' missing");
    }
    aligned.col(static_cast<Eigen::Index>(j)) = x.values().col(it - names.begin());
  }
  return ridge_predict(model, aligned);
}

double ridge_predict_row(const RidgeModel& model, const Eigen::MatrixXd& cell_block,
                         Eigen::Index cell, const Eigen::MatrixXd* drug_block,
                         Eigen::Index drug) {
  const Eigen::Index p1 = cell_block.cols();
  double v = model.intercept + cell_block.row(cell).dot(model.weights.head(p1));
  if (drug_block && drug_block->cols() > 0) {
    v += drug_block->row(drug).dot(model.weights.tail(drug_block->cols()));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Reference predictors

const char* to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kRidge: return "ridge";
    case PredictorKind::kDrugMean: return "drug_mean";
    case PredictorKind::kCellMean: return "cell_mean";
    case PredictorKind::kMatched: return "matched";
    case PredictorKind::kBlended: return "blended";
  }
  return "unknown";
}

Predictor::Predictor(PredictorKind kind, std::map<std::string, double, std::less<>> values,
                     double grand_mean)
    : kind_(kind), values_(std::move(values)), grand_mean_(grand_mean) {
  if (kind_ != PredictorKind::kDrugMean && kind_ != PredictorKind::kCellMean) {
    throw UsageError("table predictor supports drug_mean and cell_mean only");
  }
}

double Predictor::predict(std::string_view drug, std::string_view cell, bool* fallback) const {
  const std::string_view key = kind_ == PredictorKind::kDrugMean ? drug : cell;
  const auto it = values_.find(key);
  if (fallback) *fallback = it == values_.end();
  return it == values_.end() ? grand_mean_ : it->second;
}

PredictionTable Predictor::predict(const KeyedTable& keys, std::size_t* fallbacks) const {
  std::vector<Observation> out;
  out.reserve(keys.size());
  std::size_t n_fallback = 0;
  for (const auto& k : keys.records()) {
    bool fb = false;
    out.push_back({k.drug, k.cell, predict(k.drug, k.cell, &fb)});
    n_fallback += fb ? 1 : 0;
  }
  if (fallbacks) *fallbacks = n_fallback;
  return PredictionTable(std::move(out));
}

namespace {

double grand_mean_of(const ResponseTable& t) {
  std::vector<double> all;
  all.reserve(t.size());
  for (const auto& r : t.records()) all.push_back(r.value);
  return mean(all);
}

}  // namespace

Predictor drug_mean_predictor(const ResponseTable& train) {
  if (train.empty()) throw DataError("drug-mean predictor: empty training table");
  std::map<std::string, double, std::less<>> means;
  std::vector<double> v;
  for (std::size_t d = 0; d < train.drugs().size(); ++d) {
    v.clear();
    for (const auto& r : train.drug_records(d)) v.push_back(r.value);
    means.emplace(train.drugs()[d], mean(v));
  }
  return Predictor(PredictorKind::kDrugMean, std::move(means), grand_mean_of(train));
}

Predictor cell_mean_predictor(const ResponseTable& train) {
  if (train.empty()) throw DataError("cell-mean predictor: empty training table");
  std::map<std::string, std::vector<double>, std::less<>> by_cell;
  for (const auto& r : train.records()) by_cell[r.cell].push_back(r.value);
  std::map<std::string, double, std::less<>> means;
  for (const auto& [cell, v] : by_cell) means.emplace(cell, mean(v));
  return Predictor(PredictorKind::kCellMean, std::move(means), grand_mean_of(train));
}

ZScoreResult zscore_per_drug(const ResponseTable& train) {
  std::vector<Observation> out;
  out.reserve(train.size());
  std::vector<std::string> flagged;
  std::vector<double> v;
  for (std::size_t d = 0; d < train.drugs().size(); ++d) {
    const auto block = train.drug_records(d);
    v.clear();
    for (const auto& r : block) v.push_back(r.value);
    const double mu = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    const double sd = std::sqrt(ss / static_cast<double>(v.size()));
    const bool degenerate = v.size() < 2 || !(sd > 0.0) ||
                            std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    if (degenerate) flagged.push_back(train.drugs()[d]);
    for (const auto& r : block) {
      out.push_back({r.drug, r.cell, degenerate ? r.value - mu : (r.value - mu) / sd});
    }
  }
  return {ResponseTable(std::move(out), train.units()), std::move(flagged)};
}

}  // namespace rankbench
