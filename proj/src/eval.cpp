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

#include "tas/eval.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "tas/io.hpp"

namespace tas {

std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw Error("solve_assignment: cost matrix must be square");
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); p[j] is the row matched to column j.
  // Index 0 is a virtual row/column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

namespace {

void check_aligned(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred) {
  if (gt.size() != pred.size())
    throw Error("evaluation: " + std::to_string(pred.size()) + " segmentations for " +
                std::to_string(gt.size()) + " videos");
  for (std::size_t v = 0; v < gt.size(); ++v)
    if (gt[v].labels.size() != pred[v].size())
      throw Error("evaluation: " + gt[v].video_id + " has " +
                  std::to_string(gt[v].labels.size()) + " gt frames but " +
                  std::to_string(pred[v].size()) + " predicted");
}

// Ground truth as class ids: index into mapping.gt_classes, extra ids for
// classes the mapping does not know, -1 for background.
std::vector<std::vector<int>> encode_gt(std::span<const GroundTruth> gt,
                                        const LabelMapping& mapping) {
  std::map<std::string, int, std::less<>> ids;
  for (std::size_t i = 0; i < mapping.gt_classes.size(); ++i)
    ids.emplace(mapping.gt_classes[i], static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (const auto& g : gt) {
    auto& row = out.emplace_back();
    row.reserve(g.labels.size());
    for (const auto& l : g.labels) {
      if (l == kBackgroundToken) {
        row.push_back(-1);
        continue;
      }
      auto [it, inserted] = ids.emplace(l, static_cast<int>(ids.size()));
      row.push_back(it->second);
    }
  }
  return out;
}

std::vector<std::vector<int>> encode_pred(std::span<const std::vector<int>> pred,
                                          const LabelMapping& mapping) {
  std::vector<std::vector<int>> out;
  for (const auto& p : pred) {
    auto& row = out.emplace_back(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) row[t] = mapping.map(p[t]);
  }
  return out;
}

struct Run {
  std::size_t begin, end;  // [begin, end)
  int label;
};

std::vector<Run> runs(std::span<const int> labels) {
  std::vector<Run> out;
  for (std::size_t t = 0; t < labels.size();) {
    std::size_t e = t + 1;
    while (e < labels.size() && labels[e] == labels[t]) ++e;
    out.push_back({t, e, labels[t]});
    t = e;
  }
  return out;
}

}  // namespace

ConfusionCounts confusion_counts(std::span<const GroundTruth> gt,
                                 std::span<const std::vector<int>> pred) {
  check_aligned(gt, pred);
  ConfusionCounts cc;
  std::set<int> labels;
  std::set<std::string> classes;
  for (std::size_t v = 0; v < gt.size(); ++v)
    for (std::size_t t = 0; t < pred[v].size(); ++t) {
      if (pred[v][t] != kBackground) labels.insert(pred[v][t]);
      if (gt[v].labels[t] != kBackgroundToken) classes.insert(gt[v].labels[t]);
    }
  cc.predicted_labels.assign(labels.begin(), labels.end());
  cc.gt_classes.assign(classes.begin(), classes.end());
  cc.counts.assign(cc.num_predicted() * cc.num_classes(), 0);
  for (std::size_t v = 0; v < gt.size(); ++v)
    for (std::size_t t = 0; t < pred[v].size(); ++t) {
      if (pred[v][t] == kBackground || gt[v].labels[t] == kBackgroundToken) continue;
      const auto p = std::lower_bound(cc.predicted_labels.begin(), cc.predicted_labels.end(),
                                      pred[v][t]) - cc.predicted_labels.begin();
      const auto g = std::lower_bound(cc.gt_classes.begin(), cc.gt_classes.end(),
                                      gt[v].labels[t]) - cc.gt_classes.begin();
      ++cc.counts[static_cast<std::size_t>(p) * cc.num_classes() + static_cast<std::size_t>(g)];
      ++cc.total;
    }
  return cc;
}

int LabelMapping::map(int label) const {
  if (label == kBackground) return -1;
  auto it = std::lower_bound(predicted_labels.begin(), predicted_labels.end(), label);
  if (it == predicted_labels.end() || *it != label) return -1;
  return target[static_cast<std::size_t>(it - predicted_labels.begin())];
}

std::size_t LabelMapping::num_unmatched() const {
  return static_cast<std::size_t>(std::count(target.begin(), target.end(), -1));
}

LabelMapping hungarian_match(const ConfusionCounts& counts) {
  LabelMapping m;
  m.predicted_labels = counts.predicted_labels;
  m.gt_classes = counts.gt_classes;
  const std::size_t np = counts.num_predicted(), ng = counts.num_classes();
  m.target.assign(np, -1);
  if (np == 0 || ng == 0) return m;
  const std::size_t n = std::max(np, ng);
  // Maximizing matched frames = minimizing negated counts; padding costs 0.
  Matrix cost(n, n, 0.0);
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t g = 0; g < ng; ++g) cost(p, g) = -static_cast<double>(counts.at(p, g));
  const auto assign = solve_assignment(cost);
  for (std::size_t p = 0; p < np; ++p) {
    if (assign[p] >= ng) continue;
    m.target[p] = static_cast<int>(assign[p]);
    m.matched_frames += counts.at(p, assign[p]);
  }
  return m;
}

double mof(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred,
           const LabelMapping& mapping, bool include_background) {
  check_aligned(gt, pred);
  const auto g = encode_gt(gt, mapping);
  std::int64_t correct = 0, total = 0;
  for (std::size_t v = 0; v < gt.size(); ++v)
    for (std::size_t t = 0; t < pred[v].size(); ++t) {
      if (!include_background && g[v][t] == -1) continue;
      ++total;
      if (mapping.map(pred[v][t]) == g[v][t]) ++correct;
    }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double iou(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred,
           const LabelMapping& mapping, bool include_background) {
  check_aligned(gt, pred);
  const auto g = encode_gt(gt, mapping);
  // Per gt class: intersection and union frame counts.
  std::map<int, std::pair<std::int64_t, std::int64_t>> stats;
  for (const auto& row : g)
    for (int c : row)
      if (include_background || c != -1) stats.try_emplace(c, 0, 0);
  for (std::size_t v = 0; v < gt.size(); ++v)
    for (std::size_t t = 0; t < pred[v].size(); ++t) {
      const int truth = g[v][t];
      if (!include_background && truth == -1) continue;
      const int guess = mapping.map(pred[v][t]);
      if (auto it = stats.find(truth); it != stats.end()) {
        ++it->second.second;
        if (guess == truth) ++it->second.first;
      }
      if (guess != truth)
        if (auto it = stats.find(guess); it != stats.end()) ++it->second.second;
    }
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& [c, s] : stats) {
    if (s.second == 0) continue;
    sum += static_cast<double>(s.first) / static_cast<double>(s.second);
    ++used;
  }
  return used == 0 ? 0.0 : sum / static_cast<double>(used);
}

F1Score f1_segments(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred,
                    const LabelMapping& mapping, bool include_background, F1Mode mode,
                    std::size_t frames_per_segment, std::uint64_t rng_seed) {
  check_aligned(gt, pred);
  if (frames_per_segment == 0) throw Error("f1: frames_per_segment must be positive");
  const auto g = encode_gt(gt, mapping);
  std::mt19937_64 rng(rng_seed);
  std::size_t predicted = 0, correct = 0, gt_segments = 0, gt_hit = 0;
  std::vector<std::size_t> frames, drawn;

  for (std::size_t v = 0; v < gt.size(); ++v) {
    const auto& truth = g[v];
    std::vector<Run> hits;  // correct predicted segments, with their mapped class
    for (const Run& r : runs(pred[v])) {
      const int cls = mapping.map(r.label);
      if (!include_background && cls == -1) continue;
      ++predicted;
      frames.resize(r.end - r.begin);
      std::iota(frames.begin(), frames.end(), r.begin);
      const std::vector<std::size_t>* checked = &frames;
      if (mode == F1Mode::kSampled && frames.size() > frames_per_segment) {
        drawn.clear();
        std::sample(frames.begin(), frames.end(), std::back_inserter(drawn),
                    frames_per_segment, rng);
        checked = &drawn;
      }
      std::size_t match = 0;
      for (std::size_t t : *checked)
        if (truth[t] == cls) ++match;
      if (2 * match >= checked->size()) {
        ++correct;
        hits.push_back({r.begin, r.end, cls});
      }
    }
    for (const Run& r : runs(truth)) {
      if (!include_background && r.label == -1) continue;
      ++gt_segments;
      const bool hit = std::any_of(hits.begin(), hits.end(), [&](const Run& h) {
        return h.label == r.label && h.begin < r.end && r.begin < h.end;
      });
      if (hit) ++gt_hit;
    }
  }
  F1Score s;
  s.precision = predicted == 0 ? 0.0 : static_cast<double>(correct) / predicted;
  s.recall = gt_segments == 0 ? 0.0 : static_cast<double>(gt_hit) / gt_segments;
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

Protocol parse_protocol(std::string_view name) {
  if (name == "breakfast") return Protocol::kBreakfast;
  if (name == "yti") return Protocol::kYti;
  if (name == "salads") return Protocol::kSalads;
  throw Error("unknown protocol '" + std::string(name) + "' (breakfast|yti|salads)");
}

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kBreakfast: return "breakfast";
    case Protocol::kYti: return "yti";
    case Protocol::kSalads: return "salads";
  }
  return "breakfast";
}

const MetricSet& MetricReport::headline() const {
  return protocol == Protocol::kYti ? without_background : with_background;
}

MetricReport evaluate(std::span<const GroundTruth> gt, std::span<const std::vector<int>> pred,
                      Protocol protocol) {
  const auto counts = confusion_counts(gt, pred);
  const auto mapping = hungarian_match(counts);
  MetricReport r;
  r.protocol = protocol;
  for (bool bg : {true, false}) {
    MetricSet& s = bg ? r.with_background : r.without_background;
    s.mof = mof(gt, pred, mapping, bg);
    s.iou = iou(gt, pred, mapping, bg);
    s.f1 = f1_segments(gt, pred, mapping, bg, F1Mode::kExhaustive);
  }
  r.num_predicted_labels = counts.num_predicted();
  r.num_gt_classes = counts.num_classes();
  r.num_unmatched = mapping.num_unmatched();
  r.num_matched = r.num_predicted_labels - r.num_unmatched;
  r.matched_frames = mapping.matched_frames;
  return r;
}

std::string format_report(const MetricReport& r) {
  std::ostringstream out;
  out << "protocol=" << protocol_name(r.protocol) << '\n'
      << "predicted_labels=" << r.num_predicted_labels << '\n'
      << "gt_classes=" << r.num_gt_classes << '\n'
      << "matched_labels=" << r.num_matched << '\n'
      << "unmatched_labels=" << r.num_unmatched << '\n'
      << "matched_frames=" << r.matched_frames << '\n';
  auto emit = [&](const char* suffix, const MetricSet& s) {
    out << "mof" << suffix << '=' << io::format_double(s.mof) << '\n'
        << "iou" << suffix << '=' << io::format_double(s.iou) << '\n'
        << "f1" << suffix << '=' << io::format_double(s.f1.f1) << '\n'
        << "precision" << suffix << '=' << io::format_double(s.f1.precision) << '\n'
        << "recall" << suffix << '=' << io::format_double(s.f1.recall) << '\n';
  };
  emit("_with_bg", r.with_background);
  emit("_without_bg", r.without_background);
  return out.str();
}

std::string csv_header() {
  return "dataset,k_prime,k,tau,seed,mof_with_bg,iou_with_bg,f1_with_bg,mof_without_bg,"
         "iou_without_bg,f1_without_bg,precision_without_bg,recall_without_bg";
}

std::string csv_row(const std::string& dataset, std::size_t k_prime, std::size_t k, double tau,
                    std::uint64_t seed, const MetricReport& r) {
  std::ostringstream out;
  out << dataset << ',' << k_prime << ',' << k << ',' << io::format_double(tau) << ',' << seed
      << ',' << io::format_double(r.with_background.mof) << ','
      << io::format_double(r.with_background.iou) << ','
      << io::format_double(r.with_background.f1.f1) << ','
      << io::format_double(r.without_background.mof) << ','
      << io::format_double(r.without_background.iou) << ','
      << io::format_double(r.without_background.f1.f1) << ','
      << io::format_double(r.without_background.f1.precision) << ','
      << io::format_double(r.without_background.f1.recall);
  return out.str();
}

double matched_accuracy(std::span<const std::size_t> assigned,
                        std::span<const std::string> truth) {
  if (assigned.size() != truth.size()) throw Error("matched_accuracy: length mismatch");
  if (assigned.empty()) return 0.0;
  std::vector<GroundTruth> gt{{"items", {truth.begin(), truth.end()}}};
  std::vector<std::vector<int>> pred{{}};
  for (std::size_t a : assigned) pred[0].push_back(static_cast<int>(a));
  const auto mapping = hungarian_match(confusion_counts(gt, pred));
  return mof(gt, pred, mapping, true);
}

}  // namespace tas
