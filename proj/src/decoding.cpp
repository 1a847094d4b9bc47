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

#include "tas/decoding.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace tas {

namespace {

void check_emissions(const EmissionMatrix& em) {
  const std::size_t n = em.logp.rows(), k = em.logp.cols();
  if (k == 0) throw Error("decode: K must be >= 1");
  if (n < k)
    throw Error("decode: " + std::to_string(n) + " frames cannot visit " + std::to_string(k) +
                " ordered clusters");
  for (double v : em.logp.data())
    if (!std::isfinite(v)) throw Error("decode: non-finite emission");
}

}  // namespace

Segmentation viterbi_decode(const EmissionMatrix& em) {
  check_emissions(em);
  const Matrix& e = em.logp;
  const std::size_t n = e.rows(), k = e.cols();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::vector<double> prev(k, kNegInf), cur(k);
  // advanced[t * k + j]: the best path into (t, j) came from cluster j - 1.
  std::vector<unsigned char> advanced(n * k, 0);
  prev[0] = e(0, 0);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const double stay = prev[j];
      const double adv = j > 0 ? prev[j - 1] : kNegInf;
      // Ties take the advance so earlier frames keep the smaller label.
      if (j > 0 && adv >= stay && adv != kNegInf) {
        cur[j] = adv + e(t, j);
        advanced[t * k + j] = 1;
      } else {
        cur[j] = stay + e(t, j);
      }
    }
    std::swap(prev, cur);
  }

  Segmentation seg;
  seg.score = prev[k - 1];
  seg.labels.resize(n);
  std::size_t j = k - 1;
  for (std::size_t t = n; t-- > 0;) {
    seg.labels[t] = static_cast<int>(j) + 1;
    if (t > 0 && advanced[t * k + j]) --j;
  }
  return seg;
}

Segmentation brute_force_decode(const EmissionMatrix& em) {
  check_emissions(em);
  const Matrix& e = em.logp;
  const std::size_t n = e.rows(), k = e.cols();
  if (n > 16 || k > 5) throw Error("brute_force_decode: limited to N <= 16 and K <= 5");

  Segmentation best;
  best.score = -std::numeric_limits<double>::infinity();
  std::vector<int> path(n);
  bool found = false;
  // Depth-first with "stay" before "advance" visits paths in lexicographic
  // order, so keeping only strict improvements yields the smallest argmax.
  auto visit = [&](auto&& self, std::size_t t, std::size_t j, double score) -> void {
    path[t] = static_cast<int>(j) + 1;
    if (t + 1 == n) {
      if (j + 1 == k && (!found || score > best.score)) {
        found = true;
        best.score = score;
        best.labels = path;
      }
      return;
    }
    // Enough frames must remain to reach cluster k.
    if (n - 1 - t > k - 1 - j) self(self, t + 1, j, score + e(t + 1, j));
    if (j + 1 < k) self(self, t + 1, j + 1, score + e(t + 1, j + 1));
  };
  visit(visit, 0, 0, e(0, 0));
  return best;
}

bool is_monotone_path(std::span<const int> labels, std::size_t k) {
  int last = 0;
  for (int l : labels) {
    if (l == kBackground) continue;
    if (last == 0 ? l != 1 : (l != last && l != last + 1)) return false;
    last = l;
  }
  return last == static_cast<int>(k);
}

EmissionMatrix emission_matrix(const Matrix& frames, const ClusterModel& model,
                               std::span<const std::size_t> order) {
  EmissionMatrix em{Matrix(frames.rows(), order.size())};
  for (std::size_t t = 0; t < frames.rows(); ++t)
    for (std::size_t j = 0; j < order.size(); ++j)
      em.logp(t, j) = log_likelihood(model.gaussians.at(order[j]), frames.row(t));
  return em;
}

std::vector<bool> background_frames(const Matrix& frames, const ClusterModel& model) {
  std::vector<bool> bg(frames.rows(), false);
  if (!model.bg_radius) return bg;
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.k; ++c) {
      const double d2 = squared_distance(frames.row(t), model.centers.row(c));
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    bg[t] = std::sqrt(best_d2) > (*model.bg_radius)[best];
  }
  return bg;
}

Segmentation decode_video(const FeatureSequence& seq, const ClusterModel& model,
                          std::optional<std::span<const std::size_t>> order_override) {
  if (seq.dim() != model.dim())
    throw Error("decode: " + seq.video_id + " has " + std::to_string(seq.dim()) +
                " dims, cluster model has " + std::to_string(model.dim()));
  std::span<const std::size_t> order = model.order;
  if (order_override) {
    order = *order_override;
    std::vector<bool> seen(model.k, false);
    if (order.size() != model.k) throw Error("decode: order override has wrong length");
    for (std::size_t c : order) {
      if (c >= model.k || seen[c]) throw Error("decode: order override is not a permutation");
      seen[c] = true;
    }
  }

  const auto bg = background_frames(seq.frames, model);
  Matrix kept(0, seq.dim());
  for (std::size_t t = 0; t < seq.num_frames(); ++t)
    if (!bg[t]) kept.append_row(seq.frames.row(t));
  if (kept.rows() < model.k)
    throw Error("decode: " + seq.video_id + " has fewer than K non-background frames (" +
                std::to_string(kept.rows()) + " < " + std::to_string(model.k) + ")");

  const Segmentation inner = viterbi_decode(emission_matrix(kept, model, order));
  Segmentation seg;
  seg.score = inner.score;
  seg.labels.assign(seq.num_frames(), kBackground);
  std::size_t i = 0;
  for (std::size_t t = 0; t < seq.num_frames(); ++t)
    if (!bg[t]) seg.labels[t] = inner.labels[i++];
  return seg;
}

void write_segmentation(const std::filesystem::path& path, std::span<const int> labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (int l : labels) {
    if (l == kBackground)
      out << kBackgroundToken << '\n';
    else
      out << l << '\n';
  }
}

std::vector<int> read_segmentation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<int> labels;
  std::string token;
  while (in >> token) {
    if (token == kBackgroundToken) {
      labels.push_back(kBackground);
      continue;
    }
    int v = 0;
    auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || p != token.data() + token.size() || v < 0)
      throw Error(path.string() + ": bad label '" + token + "'");
    labels.push_back(v);
  }
  return labels;
}

}  // namespace tas
