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

#include "rankbench/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "rankbench/error.hpp"

namespace rankbench {
namespace {

bool key_less(const Observation& a, const Observation& b) {
  if (a.drug != b.drug) return a.drug < b.drug;
  return a.cell < b.cell;
}

// Splits one CSV record. Handles quoted fields with doubled quotes; a quoted
// field may not span lines.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // False at end of input. Blank lines are skipped.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      fields = split_csv_line(line);
      return true;
    }
    return false;
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim_id(header[i]) == name) return i;
  }
  throw SchemaError("missing column '" + name + "' in header");
}

std::optional<double> parse_number(std::string_view s) {
  const std::string t = trim_id(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

const char* to_string(Units units) {
  return units == Units::kAuc ? "AUC" : "lnIC50";
}

Units units_from_string(std::string_view s) {
  if (s == "lnIC50" || s == "lnic50") return Units::kLnIc50;
  if (s == "AUC" || s == "auc") return Units::kAuc;
  throw UsageError("unknown units '" + std::string(s) + "' (lnIC50|AUC)");
}

std::string trim_id(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// KeyedTable

KeyedTable::KeyedTable(std::vector<Observation> records)
    : records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(), key_less);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const Observation& r = records_[i];
    if (!std::isfinite(r.value)) {
      throw DataError("non-finite value for (" + r.drug + ", " + r.cell + ")");
    }
    if (i > 0 && records_[i - 1].drug == r.drug && records_[i - 1].cell == r.cell) {
      throw DataError("duplicate key (" + r.drug + ", " + r.cell + ")");
    }
    if (i == 0 || records_[i - 1].drug != r.drug) {
      drugs_.push_back(r.drug);
      offsets_.push_back(i);
    }
  }
  offsets_.push_back(records_.size());
}

std::vector<std::string> KeyedTable::cells() const {
  std::set<std::string> cells;
  for (const auto& r : records_) cells.insert(r.cell);
  return {cells.begin(), cells.end()};
}

std::span<const Observation> KeyedTable::drug_records(std::size_t drug_index) const {
  return std::span<const Observation>(records_).subspan(
      offsets_[drug_index], offsets_[drug_index + 1] - offsets_[drug_index]);
}

std::optional<std::size_t> KeyedTable::drug_index(std::string_view drug) const {
  const auto it = std::lower_bound(drugs_.begin(), drugs_.end(), drug);
  if (it == drugs_.end() || *it != drug) return std::nullopt;
  return static_cast<std::size_t>(it - drugs_.begin());
}

std::span<const Observation> KeyedTable::drug_records(std::string_view drug) const {
  const auto idx = drug_index(drug);
  if (!idx) return {};
  return drug_records(*idx);
}

std::optional<double> KeyedTable::find(std::string_view drug,
                                       std::string_view cell) const {
  const auto block = drug_records(drug);
  const auto it = std::lower_bound(
      block.begin(), block.end(), cell,
      [](const Observation& o, std::string_view c) { return o.cell < c; });
  if (it == block.end() || it->cell != cell) return std::nullopt;
  return it->value;
}

bool operator==(const KeyedTable& a, const KeyedTable& b) {
  if (a.records_.size() != b.records_.size()) return false;
  for (std::size_t i = 0; i < a.records_.size(); ++i) {
    const auto& x = a.records_[i];
    const auto& y = b.records_[i];
    if (x.drug != y.drug || x.cell != y.cell || x.value != y.value) return false;
  }
  return true;
}

ResponseTable::ResponseTable(std::vector<Observation> records, Units units)
    : KeyedTable(std::move(records)), units_(units) {
  if (drugs().empty()) throw DataError("response table is empty");
  std::set<std::string_view> cells;
  for (const auto& r : this->records()) {
    cells.insert(r.cell);
    if (cells.size() >= 2) return;
  }
  throw DataError("response table needs at least 2 cells");
}

// ---------------------------------------------------------------------------
// FeatureMatrix

FeatureMatrix::FeatureMatrix(std::vector<std::string> entity_ids,
                             std::vector<std::string> feature_names,
                             Eigen::MatrixXd values, EntityKind kind,
                             std::vector<std::string> feature_groups)
    : ids_(std::move(entity_ids)),
      names_(std::move(feature_names)),
      groups_(std::move(feature_groups)),
      values_(std::move(values)),
      kind_(kind) {
  if (static_cast<std::size_t>(values_.rows()) != ids_.size() ||
      static_cast<std::size_t>(values_.cols()) != names_.size()) {
    throw SchemaError("feature matrix shape does not match its labels");
  }
  if (groups_.empty()) groups_.assign(names_.size(), "");
  if (groups_.size() != names_.size()) {
    throw SchemaError("feature group labels do not match column count");
  }
  if (!values_.allFinite()) throw DataError("feature matrix has non-finite entries");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], static_cast<Eigen::Index>(i)).second) {
      throw SchemaError("duplicate entity id '" + ids_[i] + "'");
    }
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw SchemaError("duplicate feature name '" + n + "'");
  }
}

std::optional<Eigen::Index> FeatureMatrix::row_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> FeatureMatrix::group_labels() const {
  std::vector<std::string> out;
  for (const auto& g : groups_) {
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::string> ids) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), values_.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = row_of(ids[i]);
    if (!row) throw DataError("entity '" + ids[i] + "' has no feature row");
    out.row(static_cast<Eigen::Index>(i)) = values_.row(*row);
  }
  FeatureMatrix m({ids.begin(), ids.end()}, names_, std::move(out), kind_, groups_);
  m.imputed_ = imputed_;
  return m;
}

FeatureMatrix FeatureMatrix::select_group(std::string_view group) const {
  std::vector<Eigen::Index> cols;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (groups_[j] == group) {
      cols.push_back(static_cast<Eigen::Index>(j));
      names.push_back(names_[j]);
    }
  }
  Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = values_.col(cols[j]);
  }
  return FeatureMatrix(ids_, std::move(names), std::move(out), kind_,
                       std::vector<std::string>(cols.size(), std::string(group)));
}

FeatureMatrix FeatureMatrix::hconcat(std::span<const FeatureMatrix> parts) {
  if (parts.empty()) throw UsageError("hconcat of zero matrices");
  const auto& ids = parts.front().entity_ids();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.entity_ids() != ids) throw SchemaError("hconcat: entity ids differ");
    total += p.cols();
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), total);
  std::vector<std::string> names;
  std::vector<std::string> groups;
  std::size_t imputed = 0;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.values();
    at += p.cols();
    names.insert(names.end(), p.feature_names().begin(), p.feature_names().end());
    groups.insert(groups.end(), p.feature_groups().begin(), p.feature_groups().end());
    imputed += p.imputed_values();
  }
  FeatureMatrix m(ids, std::move(names), std::move(out), parts.front().kind(),
                  std::move(groups));
  m.imputed_ = imputed;
  return m;
}

// ---------------------------------------------------------------------------
// LabelMap

LabelMap::LabelMap(std::map<std::string, std::string> labels)
    : labels_(std::move(labels)) {}

std::optional<std::string> LabelMap::label_of(std::string_view drug) const {
  const auto it = labels_.find(std::string(drug));
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> LabelMap::classes() const {
  std::set<std::string> s;
  for (const auto& [d, l] : labels_) s.insert(l);
  return {s.begin(), s.end()};
}

std::vector<std::string> LabelMap::members(std::string_view label) const {
  std::vector<std::string> out;
  for (const auto& [d, l] : labels_) {
    if (l == label) out.push_back(d);
  }
  return out;
}

std::map<std::string, std::size_t> LabelMap::census() const {
  std::map<std::string, std::size_t> c;
  for (const auto& [d, l] : labels_) ++c[l];
  return c;
}

LabelMap LabelMap::restricted_to(std::span<const std::string> drugs) const {
  std::map<std::string, std::string> out;
  for (const auto& d : drugs) {
    if (auto it = labels_.find(d); it != labels_.end()) out.emplace(d, it->second);
  }
  return LabelMap(std::move(out));
}

// ---------------------------------------------------------------------------
// Loaders

ResponseTable read_response_table(std::istream& in, const ColumnMapping& mapping,
                                  Units units, LoadReport* report) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw DataError("response table is empty");
  const std::size_t drug_col = column_index(header, mapping.drug);
  const std::size_t cell_col = column_index(header, mapping.cell);
  const std::size_t value_col = column_index(header, mapping.value);
  const std::size_t needed = std::max({drug_col, cell_col, value_col}) + 1;

  LoadReport local;
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
  std::vector<std::string> fields;
  std::size_t row = 0;
  while (reader.next(fields)) {
    ++row;
    ++local.rows_read;
    if (fields.size() < needed) {
      throw ParseError("row " + std::to_string(row) + ": expected at least " +
                           std::to_string(needed) + " fields",
                       row);
    }
    std::string drug = trim_id(fields[drug_col]);
    std::string cell = trim_id(fields[cell_col]);
    const auto value = parse_number(fields[value_col]);
    if (!value) {
      throw ParseError("row " + std::to_string(row) + ": non-numeric value '" +
                           fields[value_col] + "'",
                       row);
    }
    if (drug.empty() || cell.empty()) {
      ++local.dropped_rows;
      continue;
    }
    auto& slot = acc[{std::move(drug), std::move(cell)}];
    if (slot.second > 0) ++local.duplicate_rows_averaged;
    slot.first += *value;
    slot.second += 1;
  }
  if (acc.empty()) throw DataError("response table has no records");

  std::vector<Observation> records;
  records.reserve(acc.size());
  for (auto& [key, sum] : acc) {
    records.push_back({key.first, key.second, sum.first / static_cast<double>(sum.second)});
  }
  if (report) *report = local;
  return ResponseTable(std::move(records), units);
}

ResponseTable load_response_table(const std::string& path, const ColumnMapping& mapping,
                                  Units units, LoadReport* report) {
  auto in = open_input(path);
  return read_response_table(in, mapping, units, report);
}

FeatureMatrix read_feature_matrix(std::istream& in, EntityKind kind,
                                  const std::string& group, LoadReport* report) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header) || header.empty()) throw DataError("feature matrix is empty");
  const std::size_t n_cols = header.size() - 1;

  LoadReport local;
  std::vector<std::string> ids;
  std::set<std::string> seen;
  std::vector<std::vector<std::optional<double>>> rows;
  std::vector<std::string> fields;
  std::size_t row = 0;
  while (reader.next(fields)) {
    ++row;
    ++local.rows_read;
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       row);
    }
    std::string id = trim_id(fields[0]);
    if (id.empty()) {
      ++local.dropped_rows;
      continue;
    }
    if (!seen.insert(id).second) throw SchemaError("duplicate entity id '" + id + "'");
    std::vector<std::optional<double>> values(n_cols);
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (trim_id(fields[j + 1]).empty()) continue;  // missing
      values[j] = parse_number(fields[j + 1]);
      if (!values[j]) {
        throw ParseError("row " + std::to_string(row) + ", column '" +
                             trim_id(header[j + 1]) + "': non-numeric value '" +
                             fields[j + 1] + "'",
                         row);
      }
    }
    ids.push_back(std::move(id));
    rows.push_back(std::move(values));
  }
  if (ids.empty()) throw DataError("feature matrix has no rows");

  std::vector<std::size_t> kept;
  std::vector<double> col_mean(n_cols, 0.0);
  for (std::size_t j = 0; j < n_cols; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (r[j]) {
        sum += *r[j];
        ++n;
      }
    }
    if (n == 0) {
      local.dropped_columns.push_back(trim_id(header[j + 1]));
      local.warnings.push_back("column '" + trim_id(header[j + 1]) +
                               "' has no observed values and was dropped");
      continue;
    }
    col_mean[j] = sum / static_cast<double>(n);
    kept.push_back(j);
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(ids.size()),
                         static_cast<Eigen::Index>(kept.size()));
  std::vector<std::string> names;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t j = kept[k];
    names.push_back(trim_id(header[j + 1]));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& v = rows[i][j];
      if (!v) ++local.imputed_values;
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          v ? *v : col_mean[j];
    }
  }
  FeatureMatrix m(std::move(ids), std::move(names), std::move(values), kind,
                  std::vector<std::string>(kept.size(), group));
  m.set_imputed_values(local.imputed_values);
  if (report) *report = local;
  return m;
}

FeatureMatrix load_feature_matrix(const std::string& path, EntityKind kind,
                                  const std::string& group, LoadReport* report) {
  auto in = open_input(path);
  return read_feature_matrix(in, kind, group, report);
}

LabelMap read_label_map(std::istream& in, const std::string& label_column) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw DataError("label file is empty");
  const std::size_t drug_col = column_index(header, "drug_id");
  const std::size_t label_col = column_index(header, label_column);
  std::map<std::string, std::string> labels;
  std::vector<std::string> fields;
  std::size_t row = 0;
  while (reader.next(fields)) {
    ++row;
    if (fields.size() <= std::max(drug_col, label_col)) {
      throw ParseError("row " + std::to_string(row) + ": too few fields", row);
    }
    std::string drug = trim_id(fields[drug_col]);
    std::string label = trim_id(fields[label_col]);
    if (drug.empty() || label.empty()) continue;
    const auto [it, inserted] = labels.emplace(drug, label);
    if (!inserted && it->second != label) {
      throw SchemaError("drug '" + drug + "' has conflicting labels");
    }
  }
  return LabelMap(std::move(labels));
}

LabelMap load_label_map(const std::string& path, const std::string& label_column) {
  auto in = open_input(path);
  return read_label_map(in, label_column);
}

std::map<std::string, int> read_mutation_status(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw DataError("mutation file is empty");
  const std::size_t cell_col = column_index(header, "cell_id");
  const std::size_t status_col = column_index(header, "mutant");
  std::map<std::string, int> status;
  std::vector<std::string> fields;
  std::size_t row = 0;
  while (reader.next(fields)) {
    ++row;
    if (fields.size() <= std::max(cell_col, status_col)) {
      throw ParseError("row " + std::to_string(row) + ": too few fields", row);
    }
    const std::string v = trim_id(fields[status_col]);
    if (v != "0" && v != "1") {
      throw ParseError("row " + std::to_string(row) + ": mutant must be 0 or 1", row);
    }
    status[trim_id(fields[cell_col])] = v == "1" ? 1 : 0;
  }
  return status;
}

std::map<std::string, int> load_mutation_status(const std::string& path) {
  auto in = open_input(path);
  return read_mutation_status(in);
}

// ---------------------------------------------------------------------------
// Writers

void write_response_table(std::ostream& out, const KeyedTable& table,
                          std::string_view value_column) {
  out << "drug_id,cell_id," << value_column << '\n';
  for (const auto& r : table.records()) {
    out << r.drug << ',' << r.cell << ',' << format_double(r.value) << '\n';
  }
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& m) {
  out << "id";
  for (const auto& n : m.feature_names()) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << m.entity_ids()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m.values()(i, j));
    out << '\n';
  }
}

void write_label_map(std::ostream& out, const LabelMap& map,
                     std::string_view label_column) {
  out << "drug_id," << label_column << '\n';
  for (const auto& [d, l] : map.labels()) out << d << ',' << l << '\n';
}

void save_text(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << contents;
}

// ---------------------------------------------------------------------------
// align

AlignedDataset align(const ResponseTable& response, const FeatureMatrix& cell_features,
                     const std::optional<FeatureMatrix>& drug_features,
                     const std::optional<MoaMap>& moa,
                     const std::optional<ScaffoldMap>& scaffold,
                     AlignmentReport* report) {
  AlignmentReport local;
  std::set<std::string> missing_cells;
  std::set<std::string> missing_drugs;
  std::vector<Observation> kept;
  kept.reserve(response.size());
  for (const auto& r : response.records()) {
    const bool has_cell = cell_features.contains(r.cell);
    const bool has_drug = !drug_features || drug_features->contains(r.drug);
    if (!has_cell) missing_cells.insert(r.cell);
    if (!has_drug) missing_drugs.insert(r.drug);
    if (has_cell && has_drug) {
      kept.push_back(r);
    } else {
      ++local.dropped_records;
    }
  }
  if (kept.empty()) throw DataError("alignment left no records (empty intersection)");

  AlignedDataset out;
  out.response = ResponseTable(std::move(kept), response.units());
  const auto cells = out.response.cells();
  const auto& drugs = out.response.drugs();
  out.cell_features = cell_features.select_rows(cells);
  if (drug_features) out.drug_features = drug_features->select_rows(drugs);
  if (moa) {
    out.moa = moa->restricted_to(drugs);
    local.unlabeled_drugs = drugs.size() - out.moa->size();
  }
  if (scaffold) out.scaffold = scaffold->restricted_to(drugs);

  local.n_drugs = drugs.size();
  local.n_cells = cells.size();
  local.n_records = out.response.size();
  local.dropped_cells = missing_cells.size();
  local.dropped_drugs = missing_drugs.size();
  local.imputed_values = cell_features.imputed_values() +
                         (drug_features ? drug_features->imputed_values() : 0);
  if (report) *report = local;
  return out;
}

}  // namespace rankbench
