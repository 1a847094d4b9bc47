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

#include <fstream>
#include <sstream>

#include "tas/pipeline.hpp"
#include "test_util.hpp"

using namespace tas;

namespace {

Dataset small_synth(std::uint64_t seed) {
  SynthSpec spec;
  spec.num_videos = 6;
  spec.num_subactions = 3;
  spec.feature_dim = 6;
  spec.min_segment_length = 8;
  spec.max_segment_length = 14;
  spec.rng_seed = seed;
  return generate_synthetic(spec);
}

RunConfig quick() {
  RunConfig cfg;
  cfg.k = 3;
  cfg.embedding.embed_dim = 6;
  cfg.embedding.epochs = 8;
  cfg.embedding.learning_rate = 0.1;
  cfg.embedding.batch_size = 16;
  cfg.rng_seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("config file parsing") {
  testing::TempDir dir("cfg");
  std::ofstream(dir.path() / "a.cfg") << "# comment\n"
                                         "mode = unknown\n"
                                         "k=7   # trailing\n"
                                         "k_prime=3\n"
                                         "tau=0.25\n"
                                         "\n"
                                         "output_activation=linear\n"
                                         "descriptor=mean\n"
                                         "seed=18446744073709551615\n"
                                         "per_set_embedding=true\n";
  const auto cfg = load_config(dir.path() / "a.cfg");
  CHECK(cfg.mode == RunMode::kUnknown);
  CHECK(cfg.k == 7);
  CHECK(cfg.k_prime == 3);
  CHECK(cfg.tau == 0.25);
  CHECK(cfg.embedding.output == OutputActivation::kLinear);
  CHECK(cfg.descriptor == VideoDescriptor::kMeanPool);
  CHECK(cfg.rng_seed == 18446744073709551615ull);
  CHECK(cfg.per_set_embedding);
  CHECK(cfg.embedding.embed_dim == 32);

  std::ofstream(dir.path() / "bad.cfg") << "colour=blue\n";
  CHECK_THROWS_AS(load_config(dir.path() / "bad.cfg"), Error);
  std::ofstream(dir.path() / "num.cfg") << "k=3x\n";
  CHECK_THROWS_AS(load_config(dir.path() / "num.cfg"), Error);
  std::ofstream(dir.path() / "eq.cfg") << "k\n";
  CHECK_THROWS_AS(load_config(dir.path() / "eq.cfg"), Error);
  CHECK_THROWS_AS(load_config(dir.path() / "missing.cfg"), Error);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  cfg.tau = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.embedding.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("runs are deterministic under a fixed seed") {
  const auto ds = small_synth(1);
  const auto a = run(ds, quick());
  const auto b = run(ds, quick());
  CHECK(a.embedding == b.embedding);
  CHECK(a.loss_curve == b.loss_curve);
  REQUIRE(a.segmentations.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(a.segmentations[i] == b.segmentations[i]);
    CHECK(is_monotone_path(a.segmentations[i].labels, 3));
  }
  REQUIRE(a.report.has_value());
  CHECK(format_report(*a.report) == format_report(*b.report));
  CHECK_FALSE(a.timings.empty());
}

TEST_CASE("a supplied embedding skips training") {
  const auto ds = small_synth(2);
  const auto first = run(ds, quick());
  const auto again = run(ds, quick(), first.embedding);
  CHECK(again.loss_curve.empty());
  for (std::size_t i = 0; i < ds.size(); ++i)
    CHECK(again.segmentations[i] == first.segmentations[i]);
  auto wrong = first.embedding;
  wrong.input_dim += 1;
  CHECK_THROWS_AS(run(ds, quick(), wrong), Error);
}

TEST_CASE("runs without ground truth produce no report") {
  auto ds = small_synth(3);
  ds.ground_truth.clear();
  const auto r = run(ds, quick());
  CHECK_FALSE(r.report.has_value());
  CHECK(r.segmentations.size() == ds.size());
}

TEST_CASE("sweep covers the grid and writes one csv row per point") {
  const auto ds = small_synth(4);
  auto cfg = quick();
  cfg.mode = RunMode::kUnknown;
  const SweepGrid grid{{1, 2}, {2, 3}, {0.0, 0.1}};
  const auto entries = sweep(ds, cfg, grid);
  REQUIRE(entries.size() == 8);
  CHECK(entries[0].k_prime == 1);
  CHECK(entries[7].k_prime == 2);
  CHECK(entries[7].k == 3);
  CHECK(entries[7].tau == 0.1);
  const auto csv = sweep_csv("toy", 3, entries);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == csv_header());
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.rfind("toy,", 0) == 0);
    ++rows;
  }
  CHECK(rows == 8);

  auto no_gt = ds;
  no_gt.ground_truth.clear();
  CHECK_THROWS_AS(sweep(no_gt, cfg, grid), Error);
}

TEST_CASE("segmentation directory round trip") {
  const auto ds = small_synth(5);
  const auto r = run(ds, quick());
  testing::TempDir dir("segdir");
  write_segmentations(dir.path() / "out", ds, r.segmentations);
  const auto back = read_segmentations(dir.path() / "out", ds);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back[i] == r.segmentations[i].labels);
}
