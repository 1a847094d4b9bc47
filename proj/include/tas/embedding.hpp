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

// Continuous temporal embedding: an MLP D_in -> 2D -> D -> 1 with logistic
// activations, trained to regress each frame's relative timestamp. The second
// hidden layer is the embedding.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tas/common.hpp"
#include "tas/dataset.hpp"

namespace tas {

enum class OutputActivation { kSigmoid, kLinear };

struct EmbeddingConfig {
  std::size_t embed_dim = 32;
  double learning_rate = 0.01;
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  std::uint64_t rng_seed = 0;
  double weight_init_scale = 1.0;
  OutputActivation output = OutputActivation::kSigmoid;

  void validate() const;
};

/// Trainable parameters. Weight matrices are stored fan_in x fan_out, so a
/// layer computes W^T x + b. Also used as the gradient container.
struct EmbeddingParams {
  Matrix w1;  // D_in x 2D
  std::vector<double> b1;
  Matrix w2;  // 2D x D
  std::vector<double> b2;
  std::vector<double> w3;  // D
  double b3 = 0.0;

  static EmbeddingParams zeros(std::size_t input_dim, std::size_t embed_dim);
  std::size_t size() const;
  /// Layer-order flattening: w1, b1, w2, b2, w3, b3.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool operator==(const EmbeddingParams&) const = default;
};

struct EmbeddingModel {
  std::size_t input_dim = 0;
  std::size_t embed_dim = 0;
  // Per-dimension standardization applied before the first layer.
  std::vector<double> input_mean;
  std::vector<double> input_inv_std;
  EmbeddingParams params;
  OutputActivation output = OutputActivation::kSigmoid;

  /// Zero-parameter model with identity normalization.
  static EmbeddingModel zeros(std::size_t input_dim, std::size_t embed_dim);

  bool operator==(const EmbeddingModel&) const = default;
};

struct ForwardResult {
  std::vector<double> embedded;
  double t_hat = 0.0;
};

struct TrainingSample {
  std::span<const double> x;
  double t = 0.0;
};

ForwardResult forward(const EmbeddingModel& model, std::span<const double> x);

/// Mean squared timestamp error over the batch.
double loss(const EmbeddingModel& model, std::span<const TrainingSample> batch);

/// Exact gradient of `loss` with respect to every parameter.
EmbeddingParams gradient(const EmbeddingModel& model, std::span<const TrainingSample> batch);

/// Seeded uniform init in [-s, s], s = weight_init_scale / sqrt(fan_in);
/// biases start at zero. Normalization is fitted on `dataset`.
EmbeddingModel init_embedding(const Dataset& dataset, const EmbeddingConfig& cfg);

struct TrainedEmbedding {
  EmbeddingModel model;
  // Full-data MSE before training, then after every epoch (epochs + 1 values).
  std::vector<double> loss_curve;
};

TrainedEmbedding train_embedding(const Dataset& dataset, const EmbeddingConfig& cfg);

/// Replaces every frame by its D-dimensional embedding; timestamps carry over.
Dataset embed_dataset(const EmbeddingModel& model, const Dataset& dataset);

void save_embedding(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_embedding(const std::filesystem::path& path);

}  // namespace tas
