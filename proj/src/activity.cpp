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

#include "tas/activity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tas {

Codebook build_codebook(const Dataset& embedded, std::size_t vocabulary_size,
                        std::uint64_t rng_seed) {
  if (vocabulary_size == 0) throw Error("codebook: size must be >= 1");
  const Matrix points = stack_frames(embedded);
  auto km = kmeans(points, vocabulary_size, rng_seed);
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    total += distance(points.row(i), km.centers.row(km.assignments[i]));
  Codebook cb;
  cb.centers = std::move(km.centers);
  cb.sigma = std::max(total / static_cast<double>(points.rows()), 1e-6);
  return cb;
}

std::vector<double> bow_vector(const Matrix& frames, const Codebook& codebook, BowMode mode) {
  if (frames.rows() == 0) throw Error("bow_vector: empty video");
  if (frames.cols() != codebook.centers.cols()) throw Error("bow_vector: dimension mismatch");
  const std::size_t v = codebook.size();
  std::vector<double> hist(v, 0.0), logw(v);
  const double inv_two_var = 1.0 / (2.0 * codebook.sigma * codebook.sigma);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    for (std::size_t w = 0; w < v; ++w)
      logw[w] = -squared_distance(frames.row(t), codebook.centers.row(w)) * inv_two_var;
    const auto best = std::max_element(logw.begin(), logw.end());
    if (mode == BowMode::kHard) {
      hist[static_cast<std::size_t>(best - logw.begin())] += 1.0;
      continue;
    }
    const double top = *best;
    double z = 0.0;
    for (double& lw : logw) z += (lw = std::exp(lw - top));
    for (std::size_t w = 0; w < v; ++w) hist[w] += logw[w] / z;
  }
  double sum = 0.0;
  for (double h : hist) sum += h;
  for (double& h : hist) h /= sum;
  return hist;
}

std::vector<double> mean_pool(const Matrix& frames) {
  if (frames.rows() == 0) throw Error("mean_pool: empty video");
  std::vector<double> m(frames.cols(), 0.0);
  for (std::size_t t = 0; t < frames.rows(); ++t)
    for (std::size_t d = 0; d < frames.cols(); ++d) m[d] += frames(t, d);
  for (double& x : m) x /= static_cast<double>(frames.rows());
  return m;
}

std::vector<std::vector<std::size_t>> ActivityPartition::groups() const {
  std::vector<std::vector<std::size_t>> g(k_prime);
  for (std::size_t i = 0; i < set_of_video.size(); ++i) g.at(set_of_video[i]).push_back(i);
  return g;
}

ActivityPartition cluster_videos(const std::vector<std::vector<double>>& descriptors,
                                 std::size_t k_prime, std::uint64_t rng_seed,
                                 VideoMetric metric) {
  if (descriptors.empty()) throw Error("cluster_videos: no videos");
  Matrix points(0, descriptors.front().size());
  for (auto d : descriptors) {
    if (metric == VideoMetric::kCosine) {
      double norm = 0.0;
      for (double x : d) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 0.0)
        for (double& x : d) x /= norm;
    }
    points.append_row(d);
  }
  auto km = kmeans(points, k_prime, rng_seed);
  return {k_prime, std::move(km.assignments)};
}

std::uint64_t set_cluster_seed(std::uint64_t seed, std::size_t set) {
  return split_seed(split_seed(seed, "clustering"), static_cast<std::uint64_t>(set));
}

DiscoveryResult discover(const Dataset& dataset, const EmbeddingModel& model,
                         const DiscoverConfig& cfg) {
  if (cfg.k_prime == 0 || cfg.k == 0) throw Error("discover: K' and K must be >= 1");
  const Dataset embedded = embed_dataset(model, dataset);

  DiscoveryResult res;
  const std::size_t vocab = cfg.codebook_size ? cfg.codebook_size : cfg.k_prime * cfg.k;
  std::vector<std::vector<double>> descriptors;
  if (cfg.descriptor == VideoDescriptor::kMeanPool) {
    for (const auto& s : embedded.sequences) descriptors.push_back(mean_pool(s.frames));
  } else {
    res.codebook = build_codebook(embedded, vocab, split_seed(cfg.rng_seed, "codebook"));
    const BowMode mode =
        cfg.descriptor == VideoDescriptor::kSoftBow ? BowMode::kSoft : BowMode::kHard;
    for (const auto& s : embedded.sequences)
      descriptors.push_back(bow_vector(s.frames, res.codebook, mode));
  }
  res.partition =
      cluster_videos(descriptors, cfg.k_prime, split_seed(cfg.rng_seed, "videos"), cfg.metric);

  res.segmentations.resize(dataset.size());
  const auto groups = res.partition.groups();
  for (std::size_t s = 0; s < groups.size(); ++s) {
    Dataset set_data = embedded.select(groups[s]);
    if (cfg.per_set_embedding) {
      EmbeddingConfig ecfg = cfg.embedding;
      ecfg.rng_seed = split_seed(split_seed(cfg.rng_seed, "set-embedding"), s);
      const auto extra = train_embedding(set_data, ecfg);
      set_data = embed_dataset(extra.model, set_data);
    }
    if (set_data.total_frames() < cfg.k)
      throw Error("discover: video set " + std::to_string(s) + " has " +
                  std::to_string(set_data.total_frames()) + " frames, too few for K=" +
                  std::to_string(cfg.k));
    ClusterBuildOptions opts;
    opts.refit_after_background = cfg.refit_after_background;
    auto build =
        build_cluster_model(set_data, cfg.k, cfg.tau, set_cluster_seed(cfg.rng_seed, s), opts);
    const int offset = static_cast<int>(s * cfg.k);
    for (std::size_t i = 0; i < groups[s].size(); ++i) {
      Segmentation seg = decode_video(set_data.sequences[i], build.model);
      for (int& l : seg.labels)
        if (l != kBackground) l += offset;
      res.segmentations[groups[s][i]] = std::move(seg);
    }
    res.set_models.push_back(std::move(build.model));
  }
  return res;
}

void write_partition(const std::filesystem::path& path, const Dataset& dataset,
                     const ActivityPartition& partition) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    out << dataset.sequences[i].video_id << ' ' << partition.set_of_video.at(i) << '\n';
}

}  // namespace tas
