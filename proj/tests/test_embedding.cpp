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

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "tas/embedding.hpp"
#include "test_util.hpp"

using namespace tas;

namespace {

EmbeddingModel random_model(std::size_t din, std::size_t d, std::mt19937_64& rng,
                            double scale = 1.0) {
  EmbeddingModel m = EmbeddingModel::zeros(din, d);
  std::uniform_real_distribution<double> u(-scale, scale);
  auto flat = m.params.flatten();
  for (double& v : flat) v = u(rng);
  m.params.assign(flat);
  for (auto& v : m.input_mean) v = u(rng);
  for (auto& v : m.input_inv_std) v = 0.5 + std::abs(u(rng));
  return m;
}

struct Batch {
  Matrix x;
  std::vector<double> t;
  std::vector<TrainingSample> samples;
};

Batch random_batch(std::size_t n, std::size_t din, std::mt19937_64& rng) {
  Batch b;
  b.x = testing::random_matrix(n, din, rng, -2.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) b.t.push_back(u(rng));
  for (std::size_t i = 0; i < n; ++i) b.samples.push_back({b.x.row(i), b.t[i]});
  return b;
}

Dataset small_synthetic(std::uint64_t seed, double noise = 0.05) {
  SynthSpec spec;
  spec.rng_seed = seed;
  spec.num_videos = 6;
  spec.num_subactions = 5;
  spec.feature_dim = 8;
  spec.noise_scale = noise;
  spec.min_segment_length = 5;
  spec.max_segment_length = 10;
  return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("forward of an all-zero model is one half everywhere") {
  const auto m = EmbeddingModel::zeros(3, 4);
  const auto r = forward(m, std::vector<double>{1.0, -2.0, 3.0});
  CHECK(r.embedded == std::vector<double>(4, 0.5));
  CHECK(r.t_hat == 0.5);
}

TEST_CASE("embedded coordinates lie strictly inside (0,1)") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_model(5, 3, rng, 3.0);
    const auto x = testing::random_matrix(1, 5, rng, -10, 10);
    const auto r = forward(m, x.row(0));
    for (double e : r.embedded) {
      CHECK(e > 0.0);
      CHECK(e < 1.0);
    }
    CHECK(r.t_hat > 0.0);
    CHECK(r.t_hat < 1.0);
    CHECK(forward(m, x.row(0)).t_hat == r.t_hat);
  }
}

TEST_CASE("forward matches an independent evaluation of a 2-4-2-1 network") {
  EmbeddingModel m = EmbeddingModel::zeros(2, 2);
  m.params.w1 = Matrix(2, 4, {0.1, -0.2, 0.3, -0.4, 0.5, 0.6, -0.7, 0.8});
  m.params.b1 = {0.01, -0.02, 0.03, -0.04};
  m.params.w2 = Matrix(4, 2, {0.9, -1.0, 1.1, -1.2, -1.3, 1.4, 1.5, -1.6});
  m.params.b2 = {0.05, -0.06};
  m.params.w3 = {1.7, -1.8};
  m.params.b3 = 0.07;
  // Reference values from a separate numpy evaluation of the same network.
  const auto r = forward(m, std::vector<double>{1.0, -1.0});
  CHECK(r.t_hat == doctest::Approx(0.5362980077701027).epsilon(1e-12));
  CHECK(r.embedded[0] == doctest::Approx(0.5320432511488977).epsilon(1e-12));
  CHECK(r.embedded[1] == doctest::Approx(0.4605697908354115).epsilon(1e-12));
}

TEST_CASE("forward rejects a wrong input dimension") {
  const auto m = EmbeddingModel::zeros(3, 2);
  CHECK_THROWS_AS(forward(m, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("loss hand cases") {
  auto m = EmbeddingModel::zeros(2, 2);
  const std::vector<double> x{0.3, 0.4};
  SUBCASE("single sample") {
    std::vector<TrainingSample> b{{x, 0.25}};
    CHECK(loss(m, b) == 0.0625);
  }
  SUBCASE("perfect prediction") {
    m.params.b3 = 0.3;
    const double t = 1.0 / (1.0 + std::exp(-0.3));
    std::vector<TrainingSample> b{{x, t}, {x, t}};
    CHECK(loss(m, b) == 0.0);
  }
  SUBCASE("empty batch") { CHECK_THROWS_AS(loss(m, std::span<const TrainingSample>{}), Error); }
}

TEST_CASE("loss equals the naive per-sample average") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(4, 3, rng);
    const auto b = random_batch(17, 4, rng);
    double sum = 0.0;
    for (const auto& s : b.samples) {
      const double r = forward(m, s.x).t_hat - s.t;
      sum += r * r;
    }
    CHECK(loss(m, b.samples) == doctest::Approx(sum / 17).epsilon(1e-14));
  }
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(21);
  const std::size_t shapes[][2] = {{1, 1}, {2, 2}, {3, 4}, {6, 3}};
  for (auto [din, d] : shapes) {
    for (auto act : {OutputActivation::kSigmoid, OutputActivation::kLinear}) {
      auto m = random_model(din, d, rng);
      m.output = act;
      const auto b = random_batch(7, din, rng);
      const auto g = gradient(m, b.samples).flatten();
      auto flat = m.params.flatten();
      constexpr double h = 1e-5;
      for (std::size_t i = 0; i < flat.size(); ++i) {
        auto probe = m;
        auto p = flat;
        p[i] = flat[i] + h;
        probe.params.assign(p);
        const double up = loss(probe, b.samples);
        p[i] = flat[i] - h;
        probe.params.assign(p);
        const double down = loss(probe, b.samples);
        const double fd = (up - down) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-7});
        CHECK(std::abs(fd - g[i]) / denom < 1e-5);
      }
    }
  }
}

TEST_CASE("gradient vanishes at a perfect fit") {
  auto m = EmbeddingModel::zeros(3, 2);
  std::mt19937_64 rng(2);
  auto flat = m.params.flatten();
  for (double& v : flat) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  m.params.assign(flat);
  const auto x = testing::random_matrix(4, 3, rng);
  std::vector<TrainingSample> batch;
  for (std::size_t i = 0; i < 4; ++i) batch.push_back({x.row(i), forward(m, x.row(i)).t_hat});
  for (double v : gradient(m, batch).flatten()) CHECK(v == 0.0);
}

TEST_CASE("gradient is invariant to duplicating the batch") {
  std::mt19937_64 rng(5);
  const auto m = random_model(3, 2, rng);
  const auto b = random_batch(5, 3, rng);
  std::vector<TrainingSample> twice;
  for (const auto& s : b.samples) {
    twice.push_back(s);
    twice.push_back(s);
  }
  const auto g1 = gradient(m, b.samples).flatten();
  const auto g2 = gradient(m, twice).flatten();
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-12));
}

TEST_CASE("train_embedding contracts") {
  const auto ds = small_synthetic(1);
  EmbeddingConfig cfg;
  cfg.embed_dim = 4;
  cfg.rng_seed = 33;
  cfg.batch_size = 16;

  SUBCASE("zero epochs is rejected") {
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_embedding(ds, cfg), Error);
  }
  SUBCASE("zero learning rate returns the initial model") {
    cfg.epochs = 1;
    cfg.learning_rate = 0.0;
    CHECK(train_embedding(ds, cfg).model == init_embedding(ds, cfg));
  }
  SUBCASE("deterministic under a fixed seed") {
    cfg.epochs = 3;
    const auto a = train_embedding(ds, cfg);
    const auto b = train_embedding(ds, cfg);
    CHECK(a.model == b.model);
    CHECK(a.loss_curve == b.loss_curve);
    cfg.rng_seed = 34;
    CHECK_FALSE(train_embedding(ds, cfg).model == a.model);
  }
  SUBCASE("divergence is reported") {
    // A saturated sigmoid output stays finite, so diverge through the linear head.
    cfg.epochs = 3;
    cfg.output = OutputActivation::kLinear;
    cfg.learning_rate = 1e300;
    CHECK_THROWS_AS(train_embedding(ds, cfg), Error);
  }
}

TEST_CASE("training reduces the timestamp error") {
  const auto ds = small_synthetic(12, 0.05);
  EmbeddingConfig cfg;
  cfg.embed_dim = 8;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.5;
  cfg.rng_seed = 3;
  const auto r = train_embedding(ds, cfg);
  REQUIRE(r.loss_curve.size() == cfg.epochs + 1);
  CHECK(r.loss_curve.back() < r.loss_curve.front());
}

TEST_CASE("small learning rate gives a nearly monotone loss curve") {
  const auto ds = small_synthetic(13, 0.3);
  EmbeddingConfig cfg;
  cfg.embed_dim = 8;
  cfg.epochs = 40;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.01;
  cfg.rng_seed = 4;
  const auto r = train_embedding(ds, cfg);
  std::size_t non_increasing = 0;
  for (std::size_t e = 1; e < r.loss_curve.size(); ++e)
    if (r.loss_curve[e] <= r.loss_curve[e - 1]) ++non_increasing;
  CHECK(static_cast<double>(non_increasing) / (r.loss_curve.size() - 1) >= 0.95);
}

TEST_CASE("embed_dataset preserves shape and commutes with frame permutation") {
  const auto ds = small_synthetic(2);
  EmbeddingConfig cfg;
  cfg.embed_dim = 3;
  cfg.rng_seed = 8;
  const auto model = init_embedding(ds, cfg);
  const auto e = embed_dataset(model, ds);
  REQUIRE(e.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(e.sequences[i].num_frames() == ds.sequences[i].num_frames());
    CHECK(e.sequences[i].dim() == 3);
    CHECK(e.sequences[i].timestamps == ds.sequences[i].timestamps);
  }

  // Reverse the frames of the first video: embedded rows reverse the same way.
  Dataset rev;
  const auto& s = ds.sequences[0];
  Matrix flipped(0, s.dim());
  for (std::size_t n = s.num_frames(); n-- > 0;) flipped.append_row(s.frames.row(n));
  rev.sequences.push_back(FeatureSequence::create("r", flipped));
  const auto er = embed_dataset(model, rev);
  const std::size_t n = s.num_frames();
  for (std::size_t t = 0; t < n; ++t)
    CHECK(std::equal(er.sequences[0].frames.row(t).begin(), er.sequences[0].frames.row(t).end(),
                     e.sequences[0].frames.row(n - 1 - t).begin()));

  // A second pass only works when the model maps D -> D.
  CHECK_THROWS_AS(embed_dataset(model, e), Error);
  Dataset four;
  four.sequences.push_back(FeatureSequence::create("v", Matrix(4, 8, 0.25)));
  CHECK(embed_dataset(model, four).sequences[0].num_frames() == 4);
}

TEST_CASE("embedding checkpoint round trip") {
  std::mt19937_64 rng(6);
  auto m = random_model(5, 3, rng);
  m.output = OutputActivation::kLinear;
  testing::TempDir dir("emb");
  save_embedding(m, dir.path() / "m.temb");
  CHECK(load_embedding(dir.path() / "m.temb") == m);
  {
    std::ofstream bad(dir.path() / "bad.temb", std::ios::binary);
    bad << "XXXXX";
  }
  CHECK_THROWS_AS(load_embedding(dir.path() / "bad.temb"), Error);
}
