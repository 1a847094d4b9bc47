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

// Activity discovery for collections with unknown activity classes: videos
// are grouped by a bag-of-words over the shared embedding, then each group is
// segmented on its own.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tas/clustering.hpp"
#include "tas/dataset.hpp"
#include "tas/decoding.hpp"
#include "tas/embedding.hpp"

namespace tas {

struct Codebook {
  Matrix centers;  // V x D
  double sigma = 1.0;

  std::size_t size() const { return centers.rows(); }
};

/// k-means over every embedded frame; sigma is the mean distance of a frame to
/// its assigned word, floored at 1e-6.
Codebook build_codebook(const Dataset& embedded, std::size_t vocabulary_size,
                        std::uint64_t rng_seed);

enum class BowMode { kSoft, kHard };

/// L1-normalized histogram of word assignments. Soft mode spreads every frame
/// over the words with weights proportional to exp(-|x - c|^2 / (2 sigma^2)).
std::vector<double> bow_vector(const Matrix& frames, const Codebook& codebook, BowMode mode);

/// Mean of the embedded frames; stand-in video descriptor without quantization.
std::vector<double> mean_pool(const Matrix& frames);

enum class VideoMetric { kEuclidean, kCosine };

struct ActivityPartition {
  std::size_t k_prime = 0;
  std::vector<std::size_t> set_of_video;  // set index per video, dataset order

  std::vector<std::vector<std::size_t>> groups() const;
};

ActivityPartition cluster_videos(const std::vector<std::vector<double>>& descriptors,
                                 std::size_t k_prime, std::uint64_t rng_seed,
                                 VideoMetric metric = VideoMetric::kEuclidean);

enum class VideoDescriptor { kSoftBow, kHardBow, kMeanPool };

struct DiscoverConfig {
  std::size_t k_prime = 1;
  std::size_t k = 1;
  double tau = 0.0;
  std::uint64_t rng_seed = 0;
  // 0 selects k_prime * k words.
  std::size_t codebook_size = 0;
  VideoDescriptor descriptor = VideoDescriptor::kSoftBow;
  VideoMetric metric = VideoMetric::kEuclidean;
  // Train an extra embedding per video set on top of the global one.
  bool per_set_embedding = false;
  bool refit_after_background = false;
  EmbeddingConfig embedding;
};

struct DiscoveryResult {
  ActivityPartition partition;
  Codebook codebook;
  std::vector<ClusterModel> set_models;
  // Dataset order; labels in 1..k_prime*k, set s owning s*k+1 .. (s+1)*k.
  std::vector<Segmentation> segmentations;
};

/// Seed used for the cluster model of video set `set`. The known-activity
/// pipeline uses set 0, so a single-set discovery reproduces it exactly.
std::uint64_t set_cluster_seed(std::uint64_t seed, std::size_t set);

DiscoveryResult discover(const Dataset& dataset, const EmbeddingModel& model,
                         const DiscoverConfig& cfg);

/// "<video_id> <set>" per line.
void write_partition(const std::filesystem::path& path, const Dataset& dataset,
                     const ActivityPartition& partition);

}  // namespace tas
