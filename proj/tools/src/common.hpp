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

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rankbench/dataio.hpp"
#include "rankbench/protocols.hpp"
#include "rankbench/report.hpp"

namespace rankbench::cli {

// Options every subcommand carries.
struct CommonOptions {
  std::string report;
  std::string csv;
  std::string config;
  unsigned threads = 0;
  bool record_time = false;
};

struct Context {
  CLI::App* app = nullptr;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  CommonOptions common;
  RunManifest manifest;
};

class Command {
 public:
  virtual ~Command() = default;
  virtual std::string name() const = 0;
  virtual std::string description() const = 0;
  virtual void add_options(CLI::App& app) = 0;
  // Returns the "result" object of the report.
  virtual Json run(Context& ctx) = 0;
};

std::vector<std::unique_ptr<Command>> make_commands();

// Response loading flags shared by several subcommands.
struct ResponseInput {
  std::string path;
  std::string col_drug = "drug_id";
  std::string col_cell = "cell_id";
  std::string col_value = "value";
  std::string units = "lnIC50";

  void add(CLI::App& app, const std::string& flag, const std::string& help, bool required);
  ResponseTable load(Context& ctx, const std::string& digest_key, LoadReport* report = nullptr) const;
};

// Cell feature flags: either one matrix or per-modality RNA / mutation files.
struct CellInput {
  std::string cell_features;
  std::string rna;
  std::string mut;
  int pca_cell = 0;
  int pca_rna = 550;
  int pca_mut = 200;
  bool standardize = false;

  void add(CLI::App& app);
  FeatureMatrix load(Context& ctx, CellPipeline* pipeline) const;
};

struct MetricInput {
  int min_obs = 5;
  std::string zero_variance_policy = "zero";

  void add(CLI::App& app);
  MetricOptions options() const;
};

// "a,b,c" -> values.
std::vector<double> parse_double_list(const std::string& text, const std::string& flag);
std::vector<int> parse_int_list(const std::string& text, const std::string& flag);
// "lo:hi:step" or a comma list.
std::vector<double> parse_grid(const std::string& text, const std::string& flag);

void record_input(Context& ctx, const std::string& key, const std::string& path);
void write_csv(Context& ctx, const std::string& contents);

}  // namespace rankbench::cli
