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

#include "rankbench/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "rankbench/error.hpp"
#include "rankbench/random.hpp"

namespace rankbench {

namespace {

// Non-finite values become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

const char* drug_mode_name(DrugFeatureMode m) {
  switch (m) {
    case DrugFeatureMode::kNone: return "none";
    case DrugFeatureMode::kMatrix: return "matrix";
    case DrugFeatureMode::kMoaOneHot: return "moa_onehot";
    case DrugFeatureMode::kRandomVector: return "random_vector";
  }
  return "none";
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

}  // namespace

const char* version() { return "0.1.0"; }

Json to_json(const MetricOptions& o) {
  return Json{{"min_obs", o.min_obs}, {"zero_variance_policy", to_string(o.zero_variance)}};
}

Json to_json(const MetricReport& r) {
  Json values = Json::object();
  for (const auto& [d, v] : r.per_drug_values) values[d] = number(v);
  return Json{{"global_r", number(r.global_r)},
              {"per_drug_r_mean", number(r.per_drug_r_mean)},
              {"per_drug_r_sd", number(r.per_drug_r_sd)},
              {"n_drugs_evaluated", r.n_drugs_evaluated},
              {"n_drugs_skipped", r.n_drugs_skipped},
              {"per_drug_r_min", number(r.per_drug_r_min)},
              {"per_drug_r_max", number(r.per_drug_r_max)},
              {"per_drug_values", values},
              {"skipped_drugs", r.skipped_drugs},
              {"options", to_json(r.options)}};
}

Json to_json(const DecompositionReport& r) {
  return Json{{"cov_total", number(r.cov_total)},
              {"cov_between", number(r.cov_between)},
              {"cov_within", number(r.cov_within)},
              {"cov_cross_1", number(r.cov_cross_1)},
              {"cov_cross_2", number(r.cov_cross_2)},
              {"sigma_y", number(r.sigma_y)},
              {"sigma_pred", number(r.sigma_pred)},
              {"sigma_between_y", number(r.sigma_between_y)},
              {"sigma_within_y", number(r.sigma_within_y)},
              {"sigma_between_pred", number(r.sigma_between_pred)},
              {"sigma_within_pred", number(r.sigma_within_pred)},
              {"r_between", number(r.r_between)},
              {"r_within", number(r.r_within)},
              {"omega_b", number(r.omega_b)},
              {"omega_w", number(r.omega_w)},
              {"global_r_exact", number(r.global_r_exact)},
              {"global_r_approx", number(r.global_r_approx)},
              {"n_pairs", r.n_pairs},
              {"n_drugs", r.n_drugs}};
}

Json to_json(const TestResult& r) {
  return Json{{"statistic", number(r.statistic)},
              {"p_value", number(r.p_value)},
              {"method", r.method},
              {"alternative", to_string(r.alternative)},
              {"n1", r.n1},
              {"n2", r.n2},
              {"exact", r.exact}};
}

Json to_json(const BiomarkerResult& r) {
  return Json{{"test", to_json(r.test)},
              {"cohens_d", number(r.cohens_d)},
              {"n_mutant", r.n_mutant},
              {"n_wild_type", r.n_wild_type}};
}

Json to_json(const AlignmentReport& r) {
  return Json{{"n_drugs", r.n_drugs},
              {"n_cells", r.n_cells},
              {"n_records", r.n_records},
              {"dropped_records", r.dropped_records},
              {"imputed_values", r.imputed_values},
              {"dropped_cells", r.dropped_cells},
              {"dropped_drugs", r.dropped_drugs},
              {"unlabeled_drugs", r.unlabeled_drugs}};
}

Json to_json(const ProfileConcordance& r) {
  return Json{{"mean", number(r.mean)}, {"sd", number(r.sd)}, {"n_pairs", r.n_pairs}};
}

Json to_json(const CvConfig& c) {
  Json steps = Json::array();
  for (const auto& s : c.cell_pipeline.steps) {
    steps.push_back(Json{{"group", s.group}, {"pca_dims", s.pca_dims}});
  }
  Json drug{{"mode", drug_mode_name(c.drug_features.mode)}};
  if (c.drug_features.mode == DrugFeatureMode::kRandomVector) {
    drug["dim"] = c.drug_features.random_dim;
    drug["seed"] = c.drug_features.random_seed;
  }
  if (c.drug_features.mode == DrugFeatureMode::kMatrix) drug["pca_dims"] = c.drug_features.pca_dims;
  Json weighting = c.weight_class.empty() || c.class_weight == 1.0
                       ? Json{{"mode", "uniform"}}
                       : Json{{"mode", "moa_weight"}, {"class", c.weight_class}, {"weight", c.class_weight}};
  return Json{{"scheme", to_string(c.scheme)},
              {"k", c.k},
              {"seed", c.seed},
              {"cell_pipeline", Json{{"steps", steps}, {"standardize", c.cell_pipeline.standardize}}},
              {"drug_features", drug},
              {"target_mode", to_string(c.target_mode)},
              {"weighting", weighting},
              {"alpha", number(c.alpha)},
              {"metric", to_json(c.metric)}};
}

Json to_json(const CvResult& r, bool include_assignment) {
  Json folds = Json::array();
  for (const auto& f : r.folds) {
    folds.push_back(Json{{"fold", f.fold},
                         {"n_train_records", f.n_train_records},
                         {"n_test_records", f.n_test_records},
                         {"report", f.report ? to_json(*f.report) : Json(nullptr)},
                         {"warnings", f.warnings}});
  }
  Json spec{{"scheme", to_string(r.fold_spec.scheme)}, {"k", r.fold_spec.k}, {"seed", r.fold_spec.seed}};
  if (include_assignment) {
    Json a = Json::object();
    for (const auto& [e, f] : r.fold_spec.assignment) a[e] = f;
    spec["assignment"] = a;
  }
  return Json{{"config", to_json(r.config)},
              {"fold_spec", spec},
              {"pooled", to_json(r.pooled)},
              {"global_r_zscored_truth", number(r.global_r_zscored_truth)},
              {"decomposition", r.decomposition ? to_json(*r.decomposition) : Json(nullptr)},
              {"per_fold", folds},
              {"n_predictions", r.predictions.size()},
              {"dropped_drugs", r.dropped_drugs},
              {"warnings", r.warnings}};
}

Json to_json(const MoaWeightedResult& r) {
  return Json{{"target_class", r.target_class},
              {"class_drugs", r.class_drugs},
              {"selected_weights", r.selected_weights},
              {"class_r_weighted", number(r.class_r_weighted)},
              {"class_r_uniform", number(r.class_r_uniform)},
              {"delta", number(r.delta)},
              {"unlabeled_drugs", r.unlabeled_drugs},
              {"weighted", to_json(r.weighted, false)},
              {"uniform", to_json(r.uniform, false)}};
}

Json to_json(const KShotOptions& o) {
  Json grid = Json::array();
  for (double w : o.grid) grid.push_back(number(w));
  return Json{{"k_list", o.k_list},
              {"trials", o.trials},
              {"inner_trials", o.inner_trials},
              {"n", o.n},
              {"min_overlap", o.min_overlap},
              {"min_obs", o.min_obs},
              {"grid", grid},
              {"seed", o.seed},
              {"standardize", o.standardize}};
}

Json to_json(const CurvePoint& p) {
  return Json{{"k", p.k},
              {"selected_w", number(p.selected_w)},
              {"per_drug_r_mean", number(p.per_drug_r_mean)},
              {"per_drug_r_sd", number(p.per_drug_r_sd)},
              {"n_drugs", p.n_drugs},
              {"n_skipped", p.n_skipped},
              {"n_tasks", p.n_tasks},
              {"n_fallback_cells", p.n_fallback_cells},
              {"n_empty_matches", p.n_empty_matches}};
}

Json to_json(const BlendCurve& c) {
  Json points = Json::array();
  for (const auto& p : c.points) points.push_back(to_json(p));
  return Json{{"options", to_json(c.options)}, {"points", points}};
}

Json to_json(const LeakageReport& r) {
  Json folds = Json::array();
  Json fair = Json::array(), snooped = Json::array(), last = Json::array();
  for (const auto& f : r.folds) {
    fair.push_back(f.fair_epoch);
    snooped.push_back(f.snooped_epoch);
    last.push_back(f.last_epoch);
    folds.push_back(Json{{"fair_epoch", f.fair_epoch},
                         {"snooped_epoch", f.snooped_epoch},
                         {"last_epoch", f.last_epoch},
                         {"fair_global_r", number(f.fair_global_r)},
                         {"snooped_global_r", number(f.snooped_global_r)},
                         {"last_global_r", number(f.last_global_r)},
                         {"fair_per_drug_r", number(f.fair_per_drug_r)},
                         {"snooped_per_drug_r", number(f.snooped_per_drug_r)},
                         {"last_per_drug_r", number(f.last_per_drug_r)}});
  }
  return Json{{"fair_global_r", number(r.fair_global_r)},
              {"snooped_global_r", number(r.snooped_global_r)},
              {"last_epoch_global_r", number(r.last_epoch_global_r)},
              {"fair_per_drug_r", number(r.fair_per_drug_r)},
              {"snooped_per_drug_r", number(r.snooped_per_drug_r)},
              {"last_epoch_per_drug_r", number(r.last_epoch_per_drug_r)},
              {"snoop_inflation", number(r.snoop_inflation)},
              {"per_drug_inflation", number(r.per_drug_inflation)},
              {"best_fold_global_r", number(r.best_fold_global_r)},
              {"mean_fold_global_r", number(r.mean_fold_global_r)},
              {"best_fold_inflation", number(r.best_fold_inflation)},
              {"selected_epochs",
               Json{{"validation_max", fair}, {"test_max", snooped}, {"last", last}}},
              {"folds", folds}};
}

Json to_json(const SynthConfig& c) {
  return Json{{"preset", c.preset},
              {"n_drugs", c.n_drugs},
              {"n_cells", c.n_cells},
              {"latent_dim", c.latent_dim},
              {"sigma_between", number(c.sigma_between)},
              {"signal_scale_mean", number(c.signal_scale_mean)},
              {"signal_scale_sd", number(c.signal_scale_sd)},
              {"n_clusters", c.n_clusters},
              {"within_cluster_angle_deg", number(c.within_cluster_angle_deg)},
              {"shared_axis_weight", number(c.shared_axis_weight)},
              {"sigma_noise", number(c.sigma_noise)},
              {"n_distractor_features", c.n_distractor_features},
              {"potency_noise", number(c.potency_noise)},
              {"n_drug_distractors", c.n_drug_distractors},
              {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const Json& j, SynthConfig c) {
  if (!j.is_object()) throw UsageError("synth config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "preset") c.preset = v.get<std::string>();
      else if (key == "n_drugs") c.n_drugs = v.get<int>();
      else if (key == "n_cells") c.n_cells = v.get<int>();
      else if (key == "latent_dim") c.latent_dim = v.get<int>();
      else if (key == "sigma_between") c.sigma_between = v.get<double>();
      else if (key == "signal_scale_mean") c.signal_scale_mean = v.get<double>();
      else if (key == "signal_scale_sd") c.signal_scale_sd = v.get<double>();
      else if (key == "n_clusters") c.n_clusters = v.get<int>();
      else if (key == "within_cluster_angle_deg") c.within_cluster_angle_deg = v.get<double>();
      else if (key == "shared_axis_weight") c.shared_axis_weight = v.get<double>();
      else if (key == "sigma_noise") c.sigma_noise = v.get<double>();
      else if (key == "n_distractor_features") c.n_distractor_features = v.get<int>();
      else if (key == "potency_noise") c.potency_noise = v.get<double>();
      else if (key == "n_drug_distractors") c.n_drug_distractors = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw UsageError("unknown synth config key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw UsageError("synth config key '" + key + "' has the wrong type");
    }
  }
  return c;
}

Json to_json(const SynthGroundTruth& g, const MoaMap& moa) {
  Json drugs = Json::array();
  for (std::size_t d = 0; d < g.drugs.size(); ++d) {
    const auto i = static_cast<Eigen::Index>(d);
    drugs.push_back(Json{{"drug_id", g.drugs[d]},
                         {"moa_class", moa.label_of(g.drugs[d]).value_or("")},
                         {"cluster", g.cluster[d]},
                         {"mu", number(g.mu(i))},
                         {"scale", number(g.scale(i))},
                         {"ceiling", number(g.ceiling(i))},
                         {"direction", vector_json(g.directions.row(i).transpose())}});
  }
  Json cells = Json::array();
  for (std::size_t c = 0; c < g.cells.size(); ++c) {
    cells.push_back(Json{{"cell_id", g.cells[c]},
                         {"latent", vector_json(g.latent.row(static_cast<Eigen::Index>(c)).transpose())}});
  }
  Json bases = Json::array();
  for (Eigen::Index k = 0; k < g.cluster_bases.rows(); ++k) {
    bases.push_back(vector_json(g.cluster_bases.row(k).transpose()));
  }
  return Json{{"drugs", drugs}, {"cells", cells}, {"cluster_bases", bases}};
}

Json to_json(const RunManifest& m) {
  Json inputs = Json::object();
  for (const auto& [name, d] : m.inputs) inputs[name] = Json{{"path", d.path}, {"fnv1a64", d.fnv1a64}};
  Json out{{"subcommand", m.subcommand},
           {"tool", "rankbench"},
           {"tool_version", version()},
           {"config", m.config},
           {"inputs", inputs},
           {"seeds", m.seeds}};
  if (m.started_at) out["started_at"] = *m.started_at;
  if (m.finished_at) out["finished_at"] = *m.finished_at;
  return out;
}

InputDigest digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
  return {path, hex};
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace rankbench
