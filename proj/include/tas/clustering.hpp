// Copyright 2026 The tas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tas/common.hpp"
#include "tas/dataset.hpp"

namespace tas {

inline constexpr double kVarianceFloor = 1e-6;

struct KMeansOptions {
  std::size_t max_iterations = 300;
  double relative_tolerance = 1e-6;
  // Independent k-means++ runs; the one with the lowest objective is kept.
  std::size_t restarts = 10;
};

struct KMeansResult {
  Matrix centers;
  std::vector<std::size_t> assignments;
  // Sum of squared distances after each assignment step.
  std::vector<double> objective_history;
};

/// Lloyd's algorithm with k-means++ seeding. Clusters that empty out take the
/// point farthest from its center (among clusters with more than one member).
/// objective_history belongs to the kept restart.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t rng_seed,
                    const KMeansOptions& options = {});

double kmeans_objective(const Matrix& points, const Matrix& centers,
                        std::span<const std::size_t> assignments);

/// Diagonal Gaussian.
struct Gaussian {
  std::vector<double> mean;
  std::vector<double> variance;

  bool operator==(const Gaussian&) const = default;
};

/// Member mean and population variance per cluster, variances floored at
/// kVarianceFloor.
std::vector<Gaussian> fit_gaussians(const Matrix& points,
                                    std::span<const std::size_t> assignments, std::size_t k);

double log_likelihood(const Gaussian& g, std::span<const double> x);

/// Hard maximum-likelihood membership; ties go to the lower cluster index.
std::vector<std::size_t> likelihood_assign(const Matrix& points,
                                           const std::vector<Gaussian>& gaussians);

struct ClusterOrder {
  std::vector<double> time_means;  // per cluster index
  std::vector<std::size_t> order;  // cluster indices, ascending time mean
};

ClusterOrder order_clusters(std::span<const std::size_t> assignments,
                            std::span<const double> timestamps, std::size_t k);

/// Per cluster, marks the ceil(tau * size) members farthest from the center.
/// Equal distances: the earlier frame is marked first.
std::vector<bool> mark_background(const Matrix& points, const Matrix& centers,
                                  std::span<const std::size_t> assignments, double tau);

struct ClusterModel {
  std::size_t k = 0;
  Matrix centers;  // k-means centers, k x D
  std::vector<Gaussian> gaussians;
  std::vector<double> time_means;
  std::vector<std::size_t> order;
  // Distance of the farthest kept member per cluster; empty when tau = 0.
  std::optional<std::vector<double>> bg_radius;

  std::size_t dim() const { return centers.cols(); }
  /// Throws if any structural invariant is broken.
  void validate() const;

  bool operator==(const ClusterModel&) const = default;
};

struct ClusterBuildOptions {
  // Refit the Gaussians on the kept (non-background) members only.
  bool refit_after_background = false;
  KMeansOptions kmeans;
};

struct ClusterBuild {
  ClusterModel model;
  // Training-frame background mask, frames stacked in dataset order.
  std::vector<bool> background;
  KMeansResult kmeans;
};

/// kmeans -> fit_gaussians -> likelihood reassignment -> order_clusters, plus
/// the tau background radius.
ClusterBuild build_cluster_model(const Dataset& embedded, std::size_t k, double tau,
                                 std::uint64_t rng_seed,
                                 const ClusterBuildOptions& options = {});

/// All frames of all videos stacked in dataset order.
Matrix stack_frames(const Dataset& dataset);

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path);
ClusterModel load_cluster_model(const std::filesystem::path& path);

}  // namespace tas
