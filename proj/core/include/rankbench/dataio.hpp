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

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace rankbench {

enum class Units { kLnIc50, kAuc };

const char* to_string(Units units);
Units units_from_string(std::string_view s);

struct Observation {
  std::string drug;
  std::string cell;
  double value = 0.0;
};

// (drug, cell) -> value with unique keys and finite values, kept sorted by
// (drug, cell) so each drug owns one contiguous block of records.
class KeyedTable {
 public:
  KeyedTable() = default;
  explicit KeyedTable(std::vector<Observation> records);

  std::span<const Observation> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Sorted unique drug ids.
  const std::vector<std::string>& drugs() const { return drugs_; }
  // Sorted unique cell ids.
  std::vector<std::string> cells() const;

  std::span<const Observation> drug_records(std::size_t drug_index) const;
  // Empty span when the drug is absent.
  std::span<const Observation> drug_records(std::string_view drug) const;
  std::optional<std::size_t> drug_index(std::string_view drug) const;

  std::optional<double> find(std::string_view drug, std::string_view cell) const;
  bool contains(std::string_view drug, std::string_view cell) const {
    return find(drug, cell).has_value();
  }

  friend bool operator==(const KeyedTable& a, const KeyedTable& b);

 private:
  std::vector<Observation> records_;
  std::vector<std::string> drugs_;
  std::vector<std::size_t> offsets_;  // drugs_.size() + 1 entries
};

// Observed drug responses. At least one drug and two cells.
class ResponseTable : public KeyedTable {
 public:
  ResponseTable() = default;
  explicit ResponseTable(std::vector<Observation> records,
                         Units units = Units::kLnIc50);

  Units units() const { return units_; }

 private:
  Units units_ = Units::kLnIc50;
};

// Model output keyed like a ResponseTable. No minimum size.
class PredictionTable : public KeyedTable {
 public:
  using KeyedTable::KeyedTable;
};

enum class EntityKind { kCell, kDrug };

// Entity-indexed dense matrix. Every column carries a group label (the
// modality, e.g. "rna" or "mut") so pipelines can reduce modalities
// separately.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> entity_ids,
                std::vector<std::string> feature_names, Eigen::MatrixXd values,
                EntityKind kind, std::vector<std::string> feature_groups = {});

  const std::vector<std::string>& entity_ids() const { return ids_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<std::string>& feature_groups() const { return groups_; }
  const Eigen::MatrixXd& values() const { return values_; }
  EntityKind kind() const { return kind_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  std::optional<Eigen::Index> row_of(std::string_view id) const;
  bool contains(std::string_view id) const { return row_of(id).has_value(); }

  // Distinct group labels in column order of first appearance.
  std::vector<std::string> group_labels() const;

  // Rows in the given order; every id must be present.
  FeatureMatrix select_rows(std::span<const std::string> ids) const;
  FeatureMatrix select_group(std::string_view group) const;

  // Entries replaced by column-mean imputation at load time.
  std::size_t imputed_values() const { return imputed_; }
  void set_imputed_values(std::size_t n) { imputed_ = n; }

  // Column-wise concatenation of matrices with identical entity ids.
  static FeatureMatrix hconcat(std::span<const FeatureMatrix> parts);

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> names_;
  std::vector<std::string> groups_;
  Eigen::MatrixXd values_;
  EntityKind kind_ = EntityKind::kCell;
  std::unordered_map<std::string, Eigen::Index> index_;
  std::size_t imputed_ = 0;
};

// drug_id -> label. Serves both MoA classes and scaffold groups.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::map<std::string, std::string> labels);

  const std::map<std::string, std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  std::optional<std::string> label_of(std::string_view drug) const;
  // Sorted distinct labels.
  std::vector<std::string> classes() const;
  // Sorted drugs carrying the label.
  std::vector<std::string> members(std::string_view label) const;
  // label -> number of drugs.
  std::map<std::string, std::size_t> census() const;

  LabelMap restricted_to(std::span<const std::string> drugs) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::map<std::string, std::string> labels_;
};

using MoaMap = LabelMap;
using ScaffoldMap = LabelMap;

struct ColumnMapping {
  std::string drug = "drug_id";
  std::string cell = "cell_id";
  std::string value = "value";
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t duplicate_rows_averaged = 0;  // rows merged into another key
  std::size_t dropped_rows = 0;             // rows with an empty id
  std::size_t imputed_values = 0;
  std::vector<std::string> dropped_columns;
  std::vector<std::string> warnings;
};

ResponseTable load_response_table(const std::string& path,
                                  const ColumnMapping& mapping = {},
                                  Units units = Units::kLnIc50,
                                  LoadReport* report = nullptr);
ResponseTable read_response_table(std::istream& in,
                                  const ColumnMapping& mapping = {},
                                  Units units = Units::kLnIc50,
                                  LoadReport* report = nullptr);

// `group` labels every column of the loaded matrix.
FeatureMatrix load_feature_matrix(const std::string& path, EntityKind kind,
                                  const std::string& group = "",
                                  LoadReport* report = nullptr);
FeatureMatrix read_feature_matrix(std::istream& in, EntityKind kind,
                                  const std::string& group = "",
                                  LoadReport* report = nullptr);

// Two-column label file: header `drug_id,<label_column>`.
LabelMap load_label_map(const std::string& path, const std::string& label_column);
LabelMap read_label_map(std::istream& in, const std::string& label_column);

// cell_id -> 0/1 mutation status; header `cell_id,mutant`.
std::map<std::string, int> load_mutation_status(const std::string& path);
std::map<std::string, int> read_mutation_status(std::istream& in);

// Canonical CSV writers. Values use the shortest round-trip representation.
void write_response_table(std::ostream& out, const KeyedTable& table,
                          std::string_view value_column = "value");
void write_feature_matrix(std::ostream& out, const FeatureMatrix& m);
void write_label_map(std::ostream& out, const LabelMap& map,
                     std::string_view label_column);
void save_text(const std::string& path, const std::string& contents);
std::string format_double(double v);

struct AlignedDataset {
  ResponseTable response;
  FeatureMatrix cell_features;                 // rows = response cells, sorted
  std::optional<FeatureMatrix> drug_features;  // rows = response drugs, sorted
  std::optional<MoaMap> moa;
  std::optional<ScaffoldMap> scaffold;
};

struct AlignmentReport {
  std::size_t n_drugs = 0;
  std::size_t n_cells = 0;
  std::size_t n_records = 0;
  std::size_t dropped_records = 0;
  std::size_t imputed_values = 0;
  std::size_t dropped_cells = 0;  // response cells without features
  std::size_t dropped_drugs = 0;  // response drugs without drug features
  std::size_t unlabeled_drugs = 0;  // retained drugs missing from the MoA map
};

AlignedDataset align(const ResponseTable& response,
                     const FeatureMatrix& cell_features,
                     const std::optional<FeatureMatrix>& drug_features = {},
                     const std::optional<MoaMap>& moa = {},
                     const std::optional<ScaffoldMap>& scaffold = {},
                     AlignmentReport* report = nullptr);

// Trims surrounding ASCII whitespace; ids compare case-sensitively after this.
std::string trim_id(std::string_view s);

}  // namespace rankbench
