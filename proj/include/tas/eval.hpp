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

// Evaluation of unsupervised segmentations: clusters are matched one-to-one
// to ground-truth classes, then scored by mean over frames (MoF), Jaccard
// index (IoU) and segment-level F1.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tas/common.hpp"
#include "tas/dataset.hpp"

namespace tas {

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres,
/// O(n^3)). Returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(const Matrix& cost);

/// Frame co-occurrence of predicted labels (rows) and ground-truth classes
/// (columns). Frames predicted as background or annotated as background are
/// not counted.
struct ConfusionCounts {
  std::vector<int> predicted_labels;    // sorted
  std::vector<std::string> gt_classes;  // sorted
  std::vector<std::int64_t> counts;     // row-major P x G
  std::int64_t total = 0;

  std::size_t num_predicted() const { return predicted_labels.size(); }
  std::size_t num_classes() const { return gt_classes.size(); }
  std::int64_t at(std::size_t p, std::size_t g) const { return counts[p * num_classes() + g]; }
};

ConfusionCounts confusion_counts(std::span<const GroundTruth> gt,
                                 std::span<const std::vector<int>> pred);

/// One-to-one mapping from predicted labels to gt classes. Labels left over
/// when there are more labels than classes map to background.
struct LabelMapping {
  std::vector<int> predicted_labels;
  std::vector<std::string> gt_classes;
  // Per predicted label: index into gt_classes, or -1 for background.
  std::vector<int> target;
  std::int64_t matched_frames = 0;

  /// gt class index for a predicted label; -1 for background or unknown labels.
  int map(int label) const;
  std::size_t num_unmatched() const;
};

LabelMapping hungarian_match(const ConfusionCounts& counts);

double mof(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred,
           const LabelMapping& mapping, bool include_background);

double iou(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred,
           const LabelMapping& mapping, bool include_background);

enum class F1Mode { kSampled, kExhaustive };

struct F1Score {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Segment-level detection score. A predicted segment (maximal run of one
/// label) is correct when at least half of its checked frames carry its
/// mapped class; sampled mode checks min(frames_per_segment, length) frames
/// drawn without replacement. Recall counts gt segments overlapped by at
/// least one correct predicted segment of the same class.
F1Score f1_segments(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred,
                    const LabelMapping& mapping, bool include_background, F1Mode mode,
                    std::size_t frames_per_segment = 15, std::uint64_t rng_seed = 0);

enum class Protocol { kBreakfast, kYti, kSalads };

Protocol parse_protocol(std::string_view name);
std::string_view protocol_name(Protocol p);

struct MetricSet {
  double mof = 0.0;
  double iou = 0.0;
  F1Score f1;
};

struct MetricReport {
  Protocol protocol = Protocol::kBreakfast;
  MetricSet with_background;
  MetricSet without_background;
  std::size_t num_predicted_labels = 0;
  std::size_t num_gt_classes = 0;
  std::size_t num_matched = 0;
  std::size_t num_unmatched = 0;
  std::int64_t matched_frames = 0;

  /// The variant the protocol reports: without background for YouTube
  /// Instructions, with background otherwise.
  const MetricSet& headline() const;
};

MetricReport evaluate(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred,
                      Protocol protocol);

/// key=value lines.
std::string format_report(const MetricReport& report);

std::string csv_header();
std::string csv_row(const std::string& dataset, std::size_t k_prime, std::size_t k, double tau,
                    std::uint64_t seed, const MetricReport& report);

/// Clustering accuracy of `assigned` groups against `truth` names after
/// Hungarian matching of groups to names (fraction of items matched).
double matched_accuracy(std::span<const std::size_t> assigned,
                        std::span<const std::string> truth);

}  // namespace tas
