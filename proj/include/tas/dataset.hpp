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
#include <vector>

#include "tas/common.hpp"

namespace tas {

/// One video: N frames of D_in features plus relative timestamps (n+1)/N.
struct FeatureSequence {
  std::string video_id;
  Matrix frames;
  std::vector<double> timestamps;

  /// Validates the frames (N >= 1, finite) and fills in the timestamps.
  static FeatureSequence create(std::string video_id, Matrix frames);

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

struct GroundTruth {
  std::string video_id;
  std::vector<std::string> labels;
};

struct Dataset {
  std::vector<FeatureSequence> sequences;
  // Empty, or aligned 1:1 with `sequences`.
  std::vector<GroundTruth> ground_truth;
  // Empty, or one activity name per sequence (known for synthetic data only).
  std::vector<std::string> activities;

  std::size_t size() const { return sequences.size(); }
  bool has_ground_truth() const { return !ground_truth.empty(); }
  std::size_t feature_dim() const;
  std::size_t total_frames() const;

  /// Throws if ids are not unique, dims differ, or annotations are misaligned.
  void validate() const;
  /// Subset in the given index order.
  Dataset select(const std::vector<std::size_t>& indices) const;
};

// How background frames are scattered. Both keep every background frame at
// least subaction_center_spread away from all centers.
//  kShell: a random subaction center of the video's activity plus a random
//          direction at radius uniform in [spread, 1.5 * spread].
//  kBox:   uniform in an axis-aligned box enclosing all centers with margin.
enum class BackgroundStyle { kShell, kBox };

struct SynthSpec {
  std::size_t num_videos = 30;
  std::size_t num_subactions = 5;  // per activity
  std::size_t feature_dim = 16;
  std::size_t min_segment_length = 20;
  std::size_t max_segment_length = 40;
  double subaction_center_spread = 8.0;
  double noise_scale = 0.3;
  double background_fraction = 0.0;
  double drop_probability = 0.0;
  // Activities have disjoint subaction center sets; videos are assigned
  // round-robin. Class names are "s<j>" for one activity, "a<i>_s<j>" otherwise.
  std::size_t num_activities = 1;
  BackgroundStyle background_style = BackgroundStyle::kShell;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

std::vector<double> relative_timestamps(std::size_t num_frames);

enum class FeatureFormat { kText, kBinary };

/// Reads a feature file, detecting the binary "FSEQ1" form by its magic.
Matrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Matrix& frames,
                        FeatureFormat format);

std::vector<std::string> read_ground_truth_file(const std::filesystem::path& path);
void write_ground_truth_file(const std::filesystem::path& path,
                             const std::vector<std::string>& labels);

/// Loads every regular file in `feature_dir` (sorted by name; video id is the
/// file stem). Ground truth is matched by stem in `gt_dir`.
Dataset load_dataset(const std::filesystem::path& feature_dir,
                     const std::optional<std::filesystem::path>& gt_dir = std::nullopt);

/// Writes <dir>/features/<id>.{txt,fseq}, <dir>/gt/<id>.txt and, when known,
/// <dir>/activities.txt.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  FeatureFormat format);

std::vector<std::pair<std::string, std::string>> read_pairs_file(
    const std::filesystem::path& path);

Dataset generate_synthetic(const SynthSpec& spec);

}  // namespace tas
