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

#include "rankbench_cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "common.hpp"
#include "rankbench/error.hpp"
#include "rankbench/parallel.hpp"

namespace rankbench::cli {

namespace {

const std::set<std::string> kCommonFlags = {"--report", "--csv", "--config", "--threads", "--record-time"};

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::vector<std::string> long_flags(const CLI::App& sub) {
  std::vector<std::string> out;
  for (const CLI::Option* opt : sub.get_options()) {
    for (const auto& n : opt->get_lnames()) out.push_back("--" + n);
  }
  return out;
}

std::string flag_name(const std::string& token) {
  const auto eq = token.find('=');
  return eq == std::string::npos ? token : token.substr(0, eq);
}

void check_flags(const CLI::App& sub, const std::vector<std::string>& args) {
  const auto known = long_flags(sub);
  for (const auto& tok : args) {
    if (tok.size() < 3 || tok.rfind("--", 0) != 0) continue;
    const auto name = flag_name(tok);
    if (std::find(known.begin(), known.end(), name) != known.end()) continue;
    std::string best;
    std::size_t best_d = 4;
    for (const auto& k : known) {
      const auto d = edit_distance(name, k);
      if (d < best_d) best_d = d, best = k;
    }
    throw UsageError("unknown flag '" + name + "' for '" + sub.get_name() + "'" +
                     (best.empty() ? std::string() : "; did you mean '" + best + "'?"));
  }
}

std::string config_path(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

// Turns a JSON config object into flags placed before the user's own, so
// that later (user) occurrences win under the take-last policy.
std::vector<std::string> config_flags(const std::string& path, const CLI::App& sub) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw SchemaError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw SchemaError("config '" + path + "' must be a JSON object");
  const auto known = long_flags(sub);
  std::vector<std::string> out;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin() + 2, flag.end(), '_', '-');
    if (kCommonFlags.count(flag) || std::find(known.begin(), known.end(), flag) == known.end()) {
      throw UsageError("config key '" + key + "' is not a flag of '" + sub.get_name() + "'");
    }
    const CLI::Option* opt = sub.get_option(flag);
    if (opt->get_expected_max() == 0) {
      if (!value.is_boolean()) throw SchemaError("config key '" + key + "' must be a boolean");
      if (value.get<bool>()) out.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (const auto& v : value) {
        if (!text.empty()) text += ',';
        text += v.is_string() ? v.get<std::string>() : v.dump();
      }
    } else if (value.is_number() || value.is_boolean()) {
      text = value.dump();
    } else {
      throw SchemaError("config key '" + key + "' has an unsupported type");
    }
    out.push_back(flag);
    out.push_back(text);
  }
  return out;
}

Json config_value(const std::string& text) {
  if (text.empty()) return nullptr;
  double d = 0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, d);
  if (ec == std::errc() && p == end && std::isfinite(d)) {
    long long i = 0;
    const auto [pi, eci] = std::from_chars(text.data(), end, i);
    if (eci == std::errc() && pi == end) return i;
    return d;
  }
  return text;
}

Json resolved_config(const CLI::App& sub) {
  Json cfg = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const auto names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    const std::string flag = "--" + names.front();
    if (kCommonFlags.count(flag)) continue;
    if (opt->get_expected_max() == 0) {
      cfg[names.front()] = opt->count() > 0;
    } else if (opt->count() > 0) {
      cfg[names.front()] = config_value(opt->results().back());
    } else {
      cfg[names.front()] = config_value(opt->get_default_str());
    }
  }
  return cfg;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return 1;
    case ErrorKind::kSchema:
    case ErrorKind::kParse:
    case ErrorKind::kData:
      return 2;
    case ErrorKind::kNumerical:
      return 3;
  }
  return 3;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rankbench: drug-response benchmark evaluation", "rankbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

  auto commands = make_commands();
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  std::map<std::string, std::pair<CLI::App*, Command*>> subs;
  for (auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c->name(), c->description());
    sub->add_option("--report", ctx.common.report, "Write the JSON report here (default: stdout)");
    sub->add_option("--csv", ctx.common.csv, "Write the plot table CSV here");
    sub->add_option("--config", ctx.common.config, "JSON config; command-line flags win");
    sub->add_option("--threads", ctx.common.threads, "Worker threads (0 = RANKBENCH_THREADS or all cores)");
    sub->add_flag("--record-time", ctx.common.record_time, "Add start/end timestamps to the manifest");
    c->add_options(*sub);
    subs[c->name()] = {sub, c.get()};
  }

  try {
    std::vector<std::string> argv = args;
    if (!argv.empty()) {
      const auto it = subs.find(argv.front());
      if (it != subs.end()) {
        std::vector<std::string> rest(argv.begin() + 1, argv.end());
        const bool help = std::find_if(rest.begin(), rest.end(), [](const std::string& s) {
                            return s == "--help" || s == "-h";
                          }) != rest.end();
        if (!help) {
          check_flags(*it->second.first, rest);
          const auto cfg_path = config_path(rest);
          if (!cfg_path.empty()) {
            auto injected = config_flags(cfg_path, *it->second.first);
            injected.insert(injected.end(), rest.begin(), rest.end());
            rest = std::move(injected);
          }
        }
        argv.assign(1, it->first);
        argv.insert(argv.end(), rest.begin(), rest.end());
      }
    }
    if (!argv.empty() && argv.front().rfind("-", 0) != 0 && !subs.count(argv.front())) {
      err << app.help();
      throw UsageError("unknown subcommand '" + argv.front() + "'");
    }
    std::reverse(argv.begin(), argv.end());
    try {
      app.parse(argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e, out, err);
      err << "rankbench: usage error: " << e.what() << '\n';
      err << "Run 'rankbench <subcommand> --help' for usage.\n";
      return 1;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    auto [sub, command] = subs.at(name);
    ctx.app = sub;
    set_thread_count(ctx.common.threads);
    ctx.manifest.subcommand = name;
    ctx.manifest.config = resolved_config(*sub);
    if (ctx.common.record_time) ctx.manifest.started_at = utc_timestamp();
    Json result = command->run(ctx);
    if (ctx.common.record_time) ctx.manifest.finished_at = utc_timestamp();
    const Json report{{"manifest", to_json(ctx.manifest)}, {"result", std::move(result)}};
    if (ctx.common.report.empty()) {
      out << dump(report);
    } else {
      save_text(ctx.common.report, dump(report));
    }
    return 0;
  } catch (const Error& e) {
    err << "rankbench: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::kUsage) err << "Run 'rankbench <subcommand> --help' for usage.\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "rankbench: internal error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace rankbench::cli
