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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rankbench_cli/cli.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = rankbench::cli::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::path(RANKBENCH_TEST_TMPDIR);
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const auto r = run({"synth", "--preset", "dominance", "--n-drugs", "20", "--n-cells", "40", "--seed", "3",
                        "--out", (dir_ / "dom").string(), "--report", (dir_ / "synth.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::string responses() { return path("dom/responses.csv"); }
  static std::string cells() { return path("dom/cell_features.csv"); }

  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, SynthWritesAllOutputs) {
  for (const char* f : {"responses.csv", "cell_features.csv", "drug_features.csv", "moa.csv", "ground_truth.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "dom" / f)) << f;
  }
  const auto truth = json::parse(slurp(dir_ / "dom" / "ground_truth.json"));
  EXPECT_EQ(truth["config"]["preset"], "dominance");
  EXPECT_EQ(truth["config"]["n_drugs"], 20);
  const auto report = json::parse(slurp(dir_ / "synth.json"));
  EXPECT_EQ(report["manifest"]["subcommand"], "synth");
}

TEST_F(CliTest, DecomposeOnDominancePreset) {
  const auto r = run({"decompose", "--responses", responses(), "--predictor", "drug-mean"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_GT(j["result"]["decomposition"]["omega_b"].get<double>(), 0.9);
  EXPECT_TRUE(j["manifest"]["inputs"].contains("responses"));
}

TEST_F(CliTest, EvalIsReproducible) {
  const std::vector<std::string> args{"eval", "--responses", responses(), "--cell-features", cells(),
                                      "--k", "5", "--seed", "7"};
  auto a = args, b = args;
  a.insert(a.end(), {"--report", path("eval_a.json"), "--csv", path("eval_a.csv")});
  b.insert(b.end(), {"--report", path("eval_b.json"), "--csv", path("eval_b.csv"), "--threads", "1"});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  auto ja = json::parse(slurp(path("eval_a.json"))), jb = json::parse(slurp(path("eval_b.json")));
  EXPECT_EQ(ja["result"].dump(), jb["result"].dump());
  EXPECT_EQ(slurp(path("eval_a.csv")), slurp(path("eval_b.csv")));
  EXPECT_EQ(slurp(path("eval_a.csv")).rfind("drug_id,per_drug_r\n", 0), 0u);

  a = args;
  a.insert(a.end(), {"--report", path("eval_c.json")});
  ASSERT_EQ(run(a).code, 0);
  auto c = args;
  c.insert(c.end(), {"--report", path("eval_d.json")});
  ASSERT_EQ(run(c).code, 0);
  EXPECT_EQ(slurp(path("eval_c.json")), slurp(path("eval_d.json")));
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"predictor": "cell-mean", "min_obs": 6})";
  }
  auto r = run({"decompose", "--responses", responses(), "--config", path("cfg.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["result"]["predictions"], "cell_mean");
  r = run({"decompose", "--responses", responses(), "--config", path("cfg.json"), "--predictor", "drug-mean"});
  ASSERT_EQ(r.code, 0) << r.err;
  j = json::parse(r.out);
  EXPECT_EQ(j["result"]["predictions"], "drug_mean");
  EXPECT_EQ(j["manifest"]["config"]["predictor"], "drug-mean");

  {
    std::ofstream cfg(path("bad.json"));
    cfg << R"({"not_a_flag": 1})";
  }
  EXPECT_EQ(run({"decompose", "--responses", responses(), "--config", path("bad.json")}).code, 1);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  const auto typo = run({"decompose", "--responses", responses(), "--predicter", "drug-mean"});
  EXPECT_EQ(typo.code, 1);
  EXPECT_NE(typo.err.find("--predictor"), std::string::npos) << typo.err;
  EXPECT_EQ(run({"decompose", "--responses", path("missing.csv"), "--predictor", "drug-mean"}).code, 2);
  {
    std::ofstream bad(path("bad.csv"));
    bad << "drug,cell,value\nA,c1,1\n";
  }
  EXPECT_EQ(run({"decompose", "--responses", path("bad.csv"), "--predictor", "drug-mean"}).code, 2);
  {
    std::ofstream bad(path("na.csv"));
    bad << "drug_id,cell_id,value\nA,c1,1\nA,c2,oops\n";
  }
  const auto na = run({"decompose", "--responses", path("na.csv"), "--predictor", "drug-mean"});
  EXPECT_EQ(na.code, 2);
  EXPECT_EQ(run({"leakage", "--lr", "1000", "--folds", "3", "--epochs", "50"}).code, 3);
  EXPECT_EQ(run({"decompose", "--help"}).code, 0);
  EXPECT_EQ(run({"--version"}).code, 0);
}

TEST_F(CliTest, KShotWritesCurveRows) {
  const auto r = run({"kshot", "--train", responses(), "--test", responses(), "--k-list", "0,3"});
  EXPECT_NE(r.code, 0);  // overlapping train and test drugs
  const auto ok = run({"synth", "--preset", "two-cluster", "--n-drugs", "24", "--n-cells", "40", "--seed", "5",
                       "--out", path("tc")});
  ASSERT_EQ(ok.code, 0) << ok.err;
  std::ifstream in(path("tc/responses.csv"));
  std::ofstream train(path("tc_train.csv")), test(path("tc_test.csv"));
  std::string line;
  std::getline(in, line);
  train << line << '\n';
  test << line << '\n';
  while (std::getline(in, line)) (line.rfind("D02", 0) == 0 ? test : train) << line << '\n';
  train.close();
  test.close();
  const auto k = run({"kshot", "--train", path("tc_train.csv"), "--test", path("tc_test.csv"), "--k-list", "0,3",
                      "--trials", "2", "--csv", path("kshot.csv")});
  ASSERT_EQ(k.code, 0) << k.err;
  const auto csv = slurp(path("kshot.csv"));
  EXPECT_EQ(csv.rfind("series,k,selected_w", 0), 0u);
  EXPECT_NE(csv.find("\nmatched,3,"), std::string::npos);
}

}  // namespace
