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
#include <string>
#include <utility>
#include <vector>

#include "tas/activity.hpp"
#include "tas/clustering.hpp"
#include "tas/dataset.hpp"
#include "tas/decoding.hpp"
#include "tas/embedding.hpp"
#include "tas/eval.hpp"

namespace tas {

enum class RunMode { kKnown, kUnknown };

struct RunConfig {
  RunMode mode = RunMode::kKnown;
  std::size_t k = 5;
  std::size_t k_prime = 1;
  double tau = 0.0;
  EmbeddingConfig embedding;
  std::size_t codebook_size = 0;  // 0: k_prime * k
  std::uint64_t rng_seed = 0;
  Protocol protocol = Protocol::kBreakfast;
  VideoDescriptor descriptor = VideoDescriptor::kSoftBow;
  VideoMetric metric = VideoMetric::kEuclidean;
  bool per_set_embedding = false;
  bool refit_after_background = false;

  void validate() const;
  /// Sets one field from its config-file key; throws on unknown keys.
  void set(const std::string& key, const std::string& value);
};

/// Reads a key=value file ('#' starts a comment) on top of `base`.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Stage seeds. Embedding training always uses split_seed(seed, "embedding").
std::uint64_t embedding_seed(std::uint64_t seed);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunResult {
  EmbeddingModel embedding;
  std::vector<double> loss_curve;  // empty when a trained embedding was supplied
  std::vector<ClusterModel> cluster_models;
  std::optional<ActivityPartition> partition;
  std::vector<Segmentation> segmentations;  // dataset order
  std::optional<MetricReport> report;       // when ground truth is present
  std::vector<StageTiming> timings;
};

RunResult run_known(const Dataset& dataset, const RunConfig& cfg,
                    const std::optional<EmbeddingModel>& trained = std::nullopt);

RunResult run_unknown(const Dataset& dataset, const RunConfig& cfg,
                      const std::optional<EmbeddingModel>& trained = std::nullopt);

RunResult run(const Dataset& dataset, const RunConfig& cfg,
              const std::optional<EmbeddingModel>& trained = std::nullopt);

struct SweepGrid {
  std::vector<std::size_t> k_primes;
  std::vector<std::size_t> ks;
  std::vector<double> taus;
};

struct SweepEntry {
  std::size_t k_prime = 1;
  std::size_t k = 0;
  double tau = 0.0;
  MetricReport report;
};

/// Cartesian product over (K', K, tau). The embedding is trained once and
/// shared by every cell. Requires ground truth.
std::vector<SweepEntry> sweep(const Dataset& dataset, const RunConfig& base,
                              const SweepGrid& grid);

std::string sweep_csv(const std::string& dataset_name, std::uint64_t seed,
                      const std::vector<SweepEntry>& entries);

/// Writes <dir>/<video_id>.txt for every video.
void write_segmentations(const std::filesystem::path& dir, const Dataset& dataset,
                         const std::vector<Segmentation>& segmentations);

/// Reads <dir>/<video_id>.txt for every video of `dataset`.
std::vector<std::vector<int>> read_segmentations(const std::filesystem::path& dir,
                                                 const Dataset& dataset);

}  // namespace tas
