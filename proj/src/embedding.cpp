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

#include "tas/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "tas/io.hpp"

namespace tas {

namespace {

constexpr std::string_view kEmbeddingMagic = "TEMB1";

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Hidden activations of one sample, kept for backpropagation.
struct Trace {
  std::vector<double> z;   // normalized input
  std::vector<double> h1;  // 2D
  std::vector<double> h2;  // D
  double y = 0.0;
};

void run_forward(const EmbeddingModel& m, std::span<const double> x, Trace& tr) {
  if (x.size() != m.input_dim)
    throw Error("embedding input has " + std::to_string(x.size()) + " dims, model expects " +
                std::to_string(m.input_dim));
  const auto& p = m.params;
  const std::size_t hidden = 2 * m.embed_dim;
  tr.z.resize(m.input_dim);
  for (std::size_t i = 0; i < m.input_dim; ++i)
    tr.z[i] = (x[i] - m.input_mean[i]) * m.input_inv_std[i];

  tr.h1.assign(p.b1.begin(), p.b1.end());
  for (std::size_t i = 0; i < m.input_dim; ++i) {
    const double zi = tr.z[i];
    const auto w = p.w1.row(i);
    for (std::size_t j = 0; j < hidden; ++j) tr.h1[j] += zi * w[j];
  }
  for (double& v : tr.h1) v = sigmoid(v);

  tr.h2.assign(p.b2.begin(), p.b2.end());
  for (std::size_t j = 0; j < hidden; ++j) {
    const double hj = tr.h1[j];
    const auto w = p.w2.row(j);
    for (std::size_t k = 0; k < m.embed_dim; ++k) tr.h2[k] += hj * w[k];
  }
  for (double& v : tr.h2) v = sigmoid(v);

  double a3 = p.b3;
  for (std::size_t k = 0; k < m.embed_dim; ++k) a3 += tr.h2[k] * p.w3[k];
  tr.y = m.output == OutputActivation::kSigmoid ? sigmoid(a3) : a3;
}

void check_finite_params(const EmbeddingModel& m) {
  for (double v : m.params.flatten())
    if (!std::isfinite(v)) throw Error("embedding parameters became non-finite");
}

}  // namespace

void EmbeddingConfig::validate() const {
  if (embed_dim == 0) throw Error("embedding: embed_dim must be >= 1");
  if (epochs == 0) throw Error("embedding: epochs must be >= 1");
  if (batch_size == 0) throw Error("embedding: batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw Error("embedding: learning_rate must be a non-negative finite number");
  if (!(weight_init_scale > 0.0)) throw Error("embedding: weight_init_scale must be positive");
}

EmbeddingParams EmbeddingParams::zeros(std::size_t input_dim, std::size_t embed_dim) {
  EmbeddingParams p;
  p.w1 = Matrix(input_dim, 2 * embed_dim);
  p.b1.assign(2 * embed_dim, 0.0);
  p.w2 = Matrix(2 * embed_dim, embed_dim);
  p.b2.assign(embed_dim, 0.0);
  p.w3.assign(embed_dim, 0.0);
  return p;
}

std::size_t EmbeddingParams::size() const {
  return w1.data().size() + b1.size() + w2.data().size() + b2.size() + w3.size() + 1;
}

std::vector<double> EmbeddingParams::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  out.insert(out.end(), w1.data().begin(), w1.data().end());
  out.insert(out.end(), b1.begin(), b1.end());
  out.insert(out.end(), w2.data().begin(), w2.data().end());
  out.insert(out.end(), b2.begin(), b2.end());
  out.insert(out.end(), w3.begin(), w3.end());
  out.push_back(b3);
  return out;
}

void EmbeddingParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw Error("parameter vector has the wrong length");
  auto it = flat.begin();
  auto take = [&it](auto& dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  take(w1.data());
  take(b1);
  take(w2.data());
  take(b2);
  take(w3);
  b3 = *it;
}

EmbeddingModel EmbeddingModel::zeros(std::size_t input_dim, std::size_t embed_dim) {
  EmbeddingModel m;
  m.input_dim = input_dim;
  m.embed_dim = embed_dim;
  m.input_mean.assign(input_dim, 0.0);
  m.input_inv_std.assign(input_dim, 1.0);
  m.params = EmbeddingParams::zeros(input_dim, embed_dim);
  return m;
}

ForwardResult forward(const EmbeddingModel& model, std::span<const double> x) {
  Trace tr;
  run_forward(model, x, tr);
  return {std::move(tr.h2), tr.y};
}

double loss(const EmbeddingModel& model, std::span<const TrainingSample> batch) {
  if (batch.empty()) throw Error("loss: empty batch");
  Trace tr;
  double sum = 0.0;
  for (const auto& s : batch) {
    run_forward(model, s.x, tr);
    const double r = tr.y - s.t;
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

EmbeddingParams gradient(const EmbeddingModel& model, std::span<const TrainingSample> batch) {
  if (batch.empty()) throw Error("gradient: empty batch");
  const std::size_t hidden = 2 * model.embed_dim;
  const std::size_t d = model.embed_dim;
  const auto& p = model.params;
  EmbeddingParams g = EmbeddingParams::zeros(model.input_dim, d);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  Trace tr;
  std::vector<double> delta2(d), delta1(hidden);
  for (const auto& s : batch) {
    run_forward(model, s.x, tr);
    double delta3 = 2.0 * (tr.y - s.t) * inv_b;
    if (model.output == OutputActivation::kSigmoid) delta3 *= tr.y * (1.0 - tr.y);

    g.b3 += delta3;
    for (std::size_t k = 0; k < d; ++k) {
      g.w3[k] += delta3 * tr.h2[k];
      delta2[k] = delta3 * p.w3[k] * tr.h2[k] * (1.0 - tr.h2[k]);
    }
    for (std::size_t j = 0; j < hidden; ++j) {
      const auto w = p.w2.row(j);
      auto gw = g.w2.row(j);
      double back = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        gw[k] += tr.h1[j] * delta2[k];
        back += w[k] * delta2[k];
      }
      delta1[j] = back * tr.h1[j] * (1.0 - tr.h1[j]);
    }
    for (std::size_t k = 0; k < d; ++k) g.b2[k] += delta2[k];
    for (std::size_t i = 0; i < model.input_dim; ++i) {
      auto gw = g.w1.row(i);
      for (std::size_t j = 0; j < hidden; ++j) gw[j] += tr.z[i] * delta1[j];
    }
    for (std::size_t j = 0; j < hidden; ++j) g.b1[j] += delta1[j];
  }
  return g;
}

EmbeddingModel init_embedding(const Dataset& dataset, const EmbeddingConfig& cfg) {
  cfg.validate();
  if (dataset.size() == 0) throw Error("train_embedding: empty dataset");
  dataset.validate();
  const std::size_t din = dataset.feature_dim();
  EmbeddingModel m = EmbeddingModel::zeros(din, cfg.embed_dim);
  m.output = cfg.output;

  // Two-pass mean / variance over every frame of every video.
  const double count = static_cast<double>(dataset.total_frames());
  for (const auto& s : dataset.sequences)
    for (std::size_t n = 0; n < s.num_frames(); ++n)
      for (std::size_t i = 0; i < din; ++i) m.input_mean[i] += s.frames(n, i);
  for (double& v : m.input_mean) v /= count;
  std::vector<double> var(din, 0.0);
  for (const auto& s : dataset.sequences)
    for (std::size_t n = 0; n < s.num_frames(); ++n)
      for (std::size_t i = 0; i < din; ++i) {
        const double c = s.frames(n, i) - m.input_mean[i];
        var[i] += c * c;
      }
  for (std::size_t i = 0; i < din; ++i) {
    const double sd = std::sqrt(var[i] / count);
    m.input_inv_std[i] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }

  std::mt19937_64 rng(cfg.rng_seed);
  auto fill = [&](std::vector<double>& w, std::size_t fan_in) {
    const double s = cfg.weight_init_scale / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-s, s);
    for (double& v : w) v = u(rng);
  };
  fill(m.params.w1.data(), din);
  fill(m.params.w2.data(), 2 * cfg.embed_dim);
  fill(m.params.w3, cfg.embed_dim);
  return m;
}

TrainedEmbedding train_embedding(const Dataset& dataset, const EmbeddingConfig& cfg) {
  TrainedEmbedding out{init_embedding(dataset, cfg), {}};
  EmbeddingModel& model = out.model;

  std::vector<TrainingSample> samples;
  samples.reserve(dataset.total_frames());
  for (const auto& s : dataset.sequences)
    for (std::size_t n = 0; n < s.num_frames(); ++n)
      samples.push_back({s.frames.row(n), s.timestamps[n]});

  auto record_loss = [&] {
    const double l = loss(model, samples);
    if (!std::isfinite(l))
      throw Error("training loss became non-finite; lower the learning rate");
    out.loss_curve.push_back(l);
  };
  record_loss();

  std::mt19937_64 rng(split_seed(cfg.rng_seed, "shuffle"));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingSample> batch;
  std::vector<double> flat;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(samples[order[i]]);
      if (cfg.learning_rate == 0.0) continue;
      const auto g = gradient(model, batch).flatten();
      flat = model.params.flatten();
      for (std::size_t i = 0; i < flat.size(); ++i) flat[i] -= cfg.learning_rate * g[i];
      model.params.assign(flat);
    }
    check_finite_params(model);
    record_loss();
  }
  return out;
}

Dataset embed_dataset(const EmbeddingModel& model, const Dataset& dataset) {
  Dataset out;
  out.ground_truth = dataset.ground_truth;
  out.activities = dataset.activities;
  Trace tr;
  for (const auto& s : dataset.sequences) {
    if (s.dim() != model.input_dim)
      throw Error("embed: " + s.video_id + " has " + std::to_string(s.dim()) +
                  " features, model expects " + std::to_string(model.input_dim));
    FeatureSequence e;
    e.video_id = s.video_id;
    e.timestamps = s.timestamps;
    e.frames = Matrix(s.num_frames(), model.embed_dim);
    for (std::size_t n = 0; n < s.num_frames(); ++n) {
      run_forward(model, s.frames.row(n), tr);
      std::copy(tr.h2.begin(), tr.h2.end(), e.frames.row(n).begin());
    }
    out.sequences.push_back(std::move(e));
  }
  return out;
}

void save_embedding(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  io::write_u32(out, static_cast<std::uint32_t>(model.input_dim));
  io::write_u32(out, static_cast<std::uint32_t>(model.embed_dim));
  io::write_u32(out, model.output == OutputActivation::kSigmoid ? 0u : 1u);
  io::write_f64s(out, model.input_mean);
  io::write_f64s(out, model.input_inv_std);
  io::write_f64s(out, model.params.flatten());
  if (!out) throw Error("failed writing " + path.string());
}

EmbeddingModel load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string what = path.string();
  io::expect_magic(in, kEmbeddingMagic, what);
  const std::uint32_t din = io::read_u32(in, what);
  const std::uint32_t d = io::read_u32(in, what);
  const std::uint32_t act = io::read_u32(in, what);
  if (din == 0 || d == 0 || act > 1) throw Error(what + ": corrupt header");
  EmbeddingModel m = EmbeddingModel::zeros(din, d);
  m.output = act == 0 ? OutputActivation::kSigmoid : OutputActivation::kLinear;
  m.input_mean = io::read_f64s(in, din, what);
  m.input_inv_std = io::read_f64s(in, din, what);
  m.params.assign(io::read_f64s(in, m.params.size(), what));
  check_finite_params(m);
  return m;
}

}  // namespace tas
