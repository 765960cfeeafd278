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

#include "common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "rankbench/error.hpp"

namespace rankbench::cli {

void ResponseInput::add(CLI::App& app, const std::string& flag, const std::string& help,
                        bool required) {
  auto* opt = app.add_option(flag, path, help);
  if (required) opt->required();
  if (!app.get_option_no_throw("--col-drug")) {
    app.add_option("--col-drug", col_drug, "Drug id column of response files");
    app.add_option("--col-cell", col_cell, "Cell id column of response files");
    app.add_option("--col-value", col_value, "Value column of response files");
    app.add_option("--units", units, "Response units (lnIC50|AUC)");
  }
}

ResponseTable ResponseInput::load(Context& ctx, const std::string& digest_key,
                                  LoadReport* report) const {
  if (path.empty()) throw UsageError("missing response file");
  record_input(ctx, digest_key, path);
  ColumnMapping mapping;
  mapping.drug = col_drug;
  mapping.cell = col_cell;
  mapping.value = col_value;
  return load_response_table(path, mapping, units_from_string(units), report);
}

void CellInput::add(CLI::App& app) {
  app.add_option("--cell-features", cell_features, "Cell feature CSV (all columns one modality)");
  app.add_option("--rna", rna, "RNA expression CSV");
  app.add_option("--mut", mut, "Mutation CSV");
  app.add_option("--pca-cell", pca_cell, "PCA dims for --cell-features (0 = raw)");
  app.add_option("--pca-rna", pca_rna, "PCA dims for RNA (0 = raw)");
  app.add_option("--pca-mut", pca_mut, "PCA dims for mutations (0 = raw)");
  app.add_flag("--standardize", standardize, "Standardize cell representation columns");
}

FeatureMatrix CellInput::load(Context& ctx, CellPipeline* pipeline) const {
  if (!cell_features.empty() && (!rna.empty() || !mut.empty())) {
    throw UsageError("--cell-features conflicts with --rna/--mut");
  }
  if (cell_features.empty() && rna.empty() && mut.empty()) {
    throw UsageError("cell features required: --cell-features or --rna/--mut");
  }
  for (int dims : {pca_cell, pca_rna, pca_mut}) {
    if (dims < 0) throw UsageError("PCA dimensions must be >= 0");
  }
  CellPipeline p;
  p.standardize = standardize;
  FeatureMatrix out;
  if (!cell_features.empty()) {
    record_input(ctx, "cell_features", cell_features);
    out = load_feature_matrix(cell_features, EntityKind::kCell, "cell");
    p.steps.push_back({"cell", pca_cell});
  } else {
    std::vector<FeatureMatrix> parts;
    if (!rna.empty()) {
      record_input(ctx, "rna", rna);
      parts.push_back(load_feature_matrix(rna, EntityKind::kCell, "rna"));
      p.steps.push_back({"rna", pca_rna});
    }
    if (!mut.empty()) {
      record_input(ctx, "mut", mut);
      parts.push_back(load_feature_matrix(mut, EntityKind::kCell, "mut"));
      p.steps.push_back({"mut", pca_mut});
    }
    std::vector<std::string> ids = parts.front().entity_ids();
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 1; i < parts.size(); ++i) {
      std::erase_if(ids, [&](const std::string& id) { return !parts[i].contains(id); });
    }
    if (ids.empty()) throw DataError("no cell appears in every modality");
    for (auto& part : parts) part = part.select_rows(ids);
    out = parts.size() == 1 ? parts.front() : FeatureMatrix::hconcat(parts);
  }
  if (pipeline) *pipeline = p;
  return out;
}

void MetricInput::add(CLI::App& app) {
  app.add_option("--min-obs", min_obs, "Minimum cells per drug for per-drug r");
  app.add_option("--zero-variance-policy", zero_variance_policy,
                 "Drugs with constant predictions: zero|skip");
}

MetricOptions MetricInput::options() const {
  if (min_obs < 2) throw UsageError("--min-obs must be >= 2");
  MetricOptions o;
  o.min_obs = min_obs;
  o.zero_variance = zero_variance_policy_from_string(zero_variance_policy);
  return o;
}

namespace {

template <class T>
T parse_number(std::string_view s, const std::string& flag) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw UsageError("malformed value '" + std::string(s) + "' for " + flag);
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto at = s.find(sep, start);
    out.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (auto part : split(text, ',')) out.push_back(parse_number<double>(part, flag));
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (auto part : split(text, ',')) out.push_back(parse_number<int>(part, flag));
  return out;
}

std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  if (text.find(':') == std::string::npos) return parse_double_list(text, flag);
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw UsageError(flag + " expects lo:hi:step");
  const double lo = parse_number<double>(parts[0], flag);
  const double hi = parse_number<double>(parts[1], flag);
  const double step = parse_number<double>(parts[2], flag);
  if (!(step > 0.0) || hi < lo) throw UsageError(flag + " needs lo <= hi and step > 0");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = std::round((lo + i * step) * 1e12) / 1e12;
    if (v > hi + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

void record_input(Context& ctx, const std::string& key, const std::string& path) {
  ctx.manifest.inputs[key] = digest_file(path);
}

void write_csv(Context& ctx, const std::string& contents) {
  if (!ctx.common.csv.empty()) save_text(ctx.common.csv, contents);
}

}  // namespace rankbench::cli
