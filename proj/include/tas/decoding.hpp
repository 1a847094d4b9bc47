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

// Order-constrained decoding. A path visits the ordered clusters 1..K in turn:
// it starts at 1, ends at K, and at every frame either stays or moves to the
// next cluster.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tas/clustering.hpp"
#include "tas/common.hpp"
#include "tas/dataset.hpp"

namespace tas {

/// N x K log-probabilities; column j belongs to the j-th cluster in temporal
/// order.
struct EmissionMatrix {
  Matrix logp;
};

struct Segmentation {
  // Ordered-cluster index in 1..K, or kBackground.
  std::vector<int> labels;
  // Log-probability of the decoded path over the non-background frames.
  double score = 0.0;

  bool operator==(const Segmentation&) const = default;
};

/// Runs in O(N K). Among equally scored paths the lexicographically smallest
/// label sequence wins, i.e. a path stays as long as it can.
Segmentation viterbi_decode(const EmissionMatrix& em);

/// Exhaustive oracle with the same contract; limited to N <= 16, K <= 5.
Segmentation brute_force_decode(const EmissionMatrix& em);

/// True if the non-background labels start at 1, end at k and never step by
/// anything other than 0 or 1.
bool is_monotone_path(std::span<const int> labels, std::size_t k);

/// Emissions of `frames` against the model's Gaussians in `order`.
EmissionMatrix emission_matrix(const Matrix& frames, const ClusterModel& model,
                               std::span<const std::size_t> order);

/// Marks frames beyond their nearest center's bg_radius. All false when the
/// model has no background radius.
std::vector<bool> background_frames(const Matrix& frames, const ClusterModel& model);

/// Labels background frames, then Viterbi-decodes the rest. `order_override`
/// replaces the model's temporal cluster order (e.g. an externally sampled
/// permutation); it must be a permutation of 0..K-1.
Segmentation decode_video(const FeatureSequence& seq, const ClusterModel& model,
                          std::optional<std::span<const std::size_t>> order_override =
                              std::nullopt);

/// One line per frame: the label, or "background".
void write_segmentation(const std::filesystem::path& path, std::span<const int> labels);
std::vector<int> read_segmentation(const std::filesystem::path& path);

}  // namespace tas
