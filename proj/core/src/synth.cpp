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

#include "rankbench/synth.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "rankbench/error.hpp"
#include "rankbench/random.hpp"

namespace rankbench {

namespace {

std::string padded(char prefix, int i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return prefix + digits;
}

int width_for(int n) {
  int w = 1;
  while (n >= 10) {
    n /= 10;
    ++w;
  }
  return std::max(w, 3);
}

Eigen::VectorXd gaussian_vector(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Eigen::VectorXd random_unit(int n, Rng& rng) {
  for (;;) {
    Eigen::VectorXd v = gaussian_vector(n, rng);
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

// Orthonormal columns when m <= n, else independent random unit vectors.
Eigen::MatrixXd random_frame(int n, int m, Rng& rng) {
  Eigen::MatrixXd out(n, m);
  if (m <= n) {
    Eigen::MatrixXd g(n, m);
    for (int j = 0; j < m; ++j) g.col(j) = gaussian_vector(n, rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    out = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    // Fix signs so the frame does not depend on the QR implementation's convention.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < m; ++j) {
      if (r(j, j) < 0) out.col(j) = -out.col(j);
    }
  } else {
    for (int j = 0; j < m; ++j) out.col(j) = random_unit(n, rng);
  }
  return out;
}

}  // namespace

void validate(const SynthConfig& c) {
  if (c.n_drugs < 1) throw UsageError("n_drugs must be >= 1");
  if (c.n_cells < 2) throw UsageError("n_cells must be >= 2");
  if (c.latent_dim < 1) throw UsageError("latent_dim must be >= 1");
  if (c.n_clusters < 1) throw UsageError("n_clusters must be >= 1");
  if (c.n_distractor_features < 0 || c.n_drug_distractors < 0) {
    throw UsageError("distractor counts must be >= 0");
  }
  for (double v : {c.sigma_between, c.signal_scale_sd, c.sigma_noise, c.potency_noise}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("standard deviations must be finite and >= 0");
  }
  if (!std::isfinite(c.signal_scale_mean)) throw UsageError("signal_scale_mean must be finite");
  if (!(c.within_cluster_angle_deg >= 0.0 && c.within_cluster_angle_deg <= 90.0)) {
    throw UsageError("within_cluster_angle_deg must lie in [0, 90]");
  }
  if (!(c.shared_axis_weight >= 0.0 && c.shared_axis_weight <= 1.0)) {
    throw UsageError("shared_axis_weight must lie in [0, 1]");
  }
}

std::vector<std::string> synth_preset_names() {
  return {"dominance", "two-cluster", "no-analog", "noisy-leakage"};
}

SynthConfig synth_preset(std::string_view name, std::uint64_t seed) {
  SynthConfig c;
  c.preset = std::string(name);
  c.seed = seed;
  if (name == "dominance") {
    // Within-drug sd is sqrt(0.8^2 + 0.6^2) = 1.
    c.sigma_between = 10.0;
    c.signal_scale_mean = 0.8;
    c.sigma_noise = 0.6;
    c.within_cluster_angle_deg = 20.0;
    c.n_distractor_features = 10;
    c.potency_noise = 0.05;
    c.n_drug_distractors = 5;
  } else if (name == "two-cluster") {
    c.n_clusters = 2;
    c.within_cluster_angle_deg = 25.0;
    c.sigma_noise = 0.5;
    c.n_distractor_features = 10;
    c.potency_noise = 0.5;
    c.n_drug_distractors = 5;
  } else if (name == "no-analog") {
    c.n_drugs = 60;
    c.n_clusters = 60;
    c.latent_dim = 61;
    c.within_cluster_angle_deg = 0.0;
    c.shared_axis_weight = 0.5;
    c.sigma_noise = 0.5;
    c.potency_noise = 0.5;
    c.n_drug_distractors = 5;
  } else if (name == "noisy-leakage") {
    c.within_cluster_angle_deg = 30.0;
    c.sigma_noise = 1.0;
    c.n_distractor_features = 10;
    c.potency_noise = 1.0;
    c.n_drug_distractors = 40;
  } else {
    throw UsageError("unknown preset '" + std::string(name) +
                     "' (dominance|two-cluster|no-analog|noisy-leakage)");
  }
  return c;
}

SynthDataset generate(const SynthConfig& config) {
  validate(config);
  const int nd = config.n_drugs, nc = config.n_cells, L = config.latent_dim;
  SynthDataset out;
  out.config = config;
  SynthGroundTruth& gt = out.truth;

  for (int d = 0; d < nd; ++d) gt.drugs.push_back(padded('D', d + 1, width_for(nd)));
  for (int c = 0; c < nc; ++c) gt.cells.push_back(padded('C', c + 1, width_for(nc)));

  // Drug potency.
  Rng mu_rng = make_rng(config.seed, "synth", "mu");
  std::normal_distribution<double> normal;
  Eigen::VectorXd potency_latent(nd);
  for (int d = 0; d < nd; ++d) potency_latent(d) = normal(mu_rng);
  gt.mu = config.sigma_between * potency_latent;

  Rng scale_rng = make_rng(config.seed, "synth", "scale");
  gt.scale.resize(nd);
  for (int d = 0; d < nd; ++d) {
    gt.scale(d) = std::max(0.0, config.signal_scale_mean + config.signal_scale_sd * normal(scale_rng));
  }

  // Cluster bases, optionally sharing one axis.
  Rng base_rng = make_rng(config.seed, "synth", "bases");
  const bool shared = config.shared_axis_weight > 0.0;
  const Eigen::MatrixXd frame = random_frame(L, config.n_clusters + (shared ? 1 : 0), base_rng);
  gt.cluster_bases.resize(config.n_clusters, L);
  for (int k = 0; k < config.n_clusters; ++k) {
    Eigen::VectorXd b = frame.col(k + (shared ? 1 : 0));
    if (shared) {
      b = std::sqrt(config.shared_axis_weight) * frame.col(0) +
          std::sqrt(1.0 - config.shared_axis_weight) * b;
      b.normalize();
    }
    gt.cluster_bases.row(k) = b.transpose();
  }

  // Drug directions: base rotated by the configured angle toward a random
  // orthogonal direction.
  Rng dir_rng = make_rng(config.seed, "synth", "directions");
  const double theta = config.within_cluster_angle_deg * std::numbers::pi / 180.0;
  gt.directions.resize(nd, L);
  std::map<std::string, std::string> moa;
  const int label_width = std::max(2, width_for(config.n_clusters) - 1);
  for (int d = 0; d < nd; ++d) {
    const int k = d % config.n_clusters;
    gt.cluster.push_back(k);
    moa.emplace(gt.drugs[static_cast<std::size_t>(d)], padded('M', k + 1, label_width));
    const Eigen::VectorXd base = gt.cluster_bases.row(k).transpose();
    Eigen::VectorXd u = base;
    if (theta > 0.0 && L > 1) {
      Eigen::VectorXd e;
      do {
        e = gaussian_vector(L, dir_rng);
        e -= e.dot(base) * base;
      } while (e.norm() < 1e-12);
      e.normalize();
      u = std::cos(theta) * base + std::sin(theta) * e;
    }
    gt.directions.row(d) = u.normalized().transpose();
  }
  out.moa = MoaMap(std::move(moa));

  Rng cell_rng = make_rng(config.seed, "synth", "cells");
  gt.latent.resize(nc, L);
  for (int c = 0; c < nc; ++c) {
    for (int j = 0; j < L; ++j) gt.latent(c, j) = normal(cell_rng);
  }

  // Responses.
  Rng noise_rng = make_rng(config.seed, "synth", "noise");
  const Eigen::MatrixXd signal = gt.directions * gt.latent.transpose();  // nd x nc
  std::vector<Observation> records;
  records.reserve(static_cast<std::size_t>(nd) * static_cast<std::size_t>(nc));
  for (int d = 0; d < nd; ++d) {
    for (int c = 0; c < nc; ++c) {
      const double y = gt.mu(d) + gt.scale(d) * signal(d, c) + config.sigma_noise * normal(noise_rng);
      records.push_back({gt.drugs[static_cast<std::size_t>(d)], gt.cells[static_cast<std::size_t>(c)], y});
    }
  }
  out.response = ResponseTable(std::move(records));

  // Ceiling for unit-variance latent projections.
  gt.ceiling.resize(nd);
  for (int d = 0; d < nd; ++d) {
    const double s = gt.scale(d) * gt.directions.row(d).norm();
    const double denom = std::sqrt(s * s + config.sigma_noise * config.sigma_noise);
    gt.ceiling(d) = denom > 0.0 ? s / denom : 0.0;
  }

  // Cell features: latent columns then distractors.
  Rng distractor_rng = make_rng(config.seed, "synth", "cell-distractors");
  const int pc = L + config.n_distractor_features;
  Eigen::MatrixXd cx(nc, pc);
  cx.leftCols(L) = gt.latent;
  for (int c = 0; c < nc; ++c) {
    for (int j = L; j < pc; ++j) cx(c, j) = normal(distractor_rng);
  }
  std::vector<std::string> cnames;
  for (int j = 0; j < L; ++j) cnames.push_back("z" + std::to_string(j + 1));
  for (int j = 0; j < config.n_distractor_features; ++j) cnames.push_back("noise" + std::to_string(j + 1));
  out.cell_features = FeatureMatrix(gt.cells, std::move(cnames), std::move(cx), EntityKind::kCell);

  Rng drug_rng = make_rng(config.seed, "synth", "drug-features");
  const int pd = 1 + config.n_drug_distractors;
  Eigen::MatrixXd dx(nd, pd);
  for (int d = 0; d < nd; ++d) {
    dx(d, 0) = potency_latent(d) + config.potency_noise * normal(drug_rng);
    for (int j = 1; j < pd; ++j) dx(d, j) = normal(drug_rng);
  }
  std::vector<std::string> dnames{"potency"};
  for (int j = 0; j < config.n_drug_distractors; ++j) dnames.push_back("noise" + std::to_string(j + 1));
  out.drug_features = FeatureMatrix(gt.drugs, std::move(dnames), std::move(dx), EntityKind::kDrug);
  return out;
}

AlignedDataset SynthDataset::aligned(bool with_drug_features) const {
  AlignedDataset a;
  a.response = response;
  a.cell_features = cell_features;
  if (with_drug_features) a.drug_features = drug_features;
  a.moa = moa;
  return a;
}

PredictionTable SynthDataset::true_signal() const {
  const Eigen::MatrixXd signal = truth.directions * truth.latent.transpose();
  std::vector<Observation> rows;
  rows.reserve(response.size());
  for (std::size_t d = 0; d < truth.drugs.size(); ++d) {
    for (std::size_t c = 0; c < truth.cells.size(); ++c) {
      const auto di = static_cast<Eigen::Index>(d), ci = static_cast<Eigen::Index>(c);
      rows.push_back({truth.drugs[d], truth.cells[c], truth.mu(di) + truth.scale(di) * signal(di, ci)});
    }
  }
  return PredictionTable(std::move(rows));
}

}  // namespace rankbench
