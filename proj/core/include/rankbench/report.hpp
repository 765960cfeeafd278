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
#include <vector>

#include <nlohmann/json.hpp>

#include "rankbench/dataio.hpp"
#include "rankbench/leakage.hpp"
#include "rankbench/matching.hpp"
#include "rankbench/metrics.hpp"
#include "rankbench/protocols.hpp"
#include "rankbench/stats.hpp"
#include "rankbench/synth.hpp"

namespace rankbench {

using Json = nlohmann::ordered_json;

const char* version();

Json to_json(const MetricOptions& o);
Json to_json(const MetricReport& r);
Json to_json(const DecompositionReport& r);
Json to_json(const TestResult& r);
Json to_json(const BiomarkerResult& r);
Json to_json(const AlignmentReport& r);
Json to_json(const ProfileConcordance& r);
Json to_json(const CvConfig& c);
Json to_json(const CvResult& r, bool include_assignment = true);
Json to_json(const MoaWeightedResult& r);
Json to_json(const KShotOptions& o);
Json to_json(const CurvePoint& p);
Json to_json(const BlendCurve& c);
Json to_json(const LeakageReport& r);
Json to_json(const SynthConfig& c);
Json to_json(const SynthGroundTruth& g, const MoaMap& moa);

// Reads a SynthConfig, starting from `base`; unknown keys are a usage error.
SynthConfig synth_config_from_json(const Json& j, SynthConfig base);

struct InputDigest {
  std::string path;
  std::string fnv1a64;  // 16 hex digits over the file bytes
};

struct RunManifest {
  std::string subcommand;
  Json config = Json::object();
  std::map<std::string, InputDigest> inputs;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;
};

Json to_json(const RunManifest& m);

InputDigest digest_file(const std::string& path);

// UTC, ISO 8601 with seconds.
std::string utc_timestamp();

// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

}  // namespace rankbench
