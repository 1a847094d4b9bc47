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
#include <limits>
#include <map>
#include <set>
#include <algorithm>

#include "tas/dataset.hpp"
#include "test_util.hpp"

using namespace tas;
namespace fs = std::filesystem;

namespace {

void write_lines(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("text feature file yields relative timestamps") {
  testing::TempDir dir("ds");
  fs::create_directories(dir.path() / "f");
  write_lines(dir.path() / "f" / "v1.txt", "1 2 3\n4 5 6\n7 8 9\n10 11 12\n");
  write_lines(dir.path() / "f" / "v2.txt", "0.5 0.5 0.5\n");
  const auto ds = load_dataset(dir.path() / "f");
  REQUIRE(ds.size() == 2);
  CHECK(ds.sequences[0].video_id == "v1");
  CHECK(ds.sequences[0].frames.rows() == 4);
  CHECK(ds.sequences[0].frames.cols() == 3);
  CHECK(ds.sequences[0].frames(3, 2) == 12.0);
  CHECK(ds.sequences[0].timestamps == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  CHECK(ds.sequences[1].timestamps == std::vector<double>{1.0});
}

TEST_CASE("load_dataset error paths") {
  testing::TempDir dir("ds_err");
  const auto f = dir.path() / "f";
  fs::create_directories(f);

  SUBCASE("dimension mismatch across files") {
    std::mt19937_64 rng(1);
    write_feature_file(f / "a.fseq", testing::random_matrix(3, 64, rng), FeatureFormat::kBinary);
    write_feature_file(f / "b.fseq", testing::random_matrix(3, 65, rng), FeatureFormat::kBinary);
    CHECK_THROWS_WITH_AS(load_dataset(f), doctest::Contains("dimension mismatch"), Error);
  }
  SUBCASE("non-finite feature") {
    write_lines(f / "a.txt", "1 2\nnan 3\n");
    CHECK_THROWS_AS(load_dataset(f), Error);
  }
  SUBCASE("infinite feature in binary form") {
    Matrix m(2, 2, 1.0);
    m(1, 0) = std::numeric_limits<double>::infinity();
    write_feature_file(f / "a.fseq", m, FeatureFormat::kBinary);
    CHECK_THROWS_AS(load_dataset(f), Error);
  }
  SUBCASE("empty video") {
    write_lines(f / "a.txt", "\n\n");
    CHECK_THROWS_WITH_AS(load_dataset(f), doctest::Contains("no frames"), Error);
  }
  SUBCASE("ragged rows") {
    write_lines(f / "a.txt", "1 2\n3\n");
    CHECK_THROWS_AS(load_dataset(f), Error);
  }
  SUBCASE("ground truth length mismatch") {
    write_lines(f / "a.txt", "1\n2\n3\n");
    fs::create_directories(dir.path() / "gt");
    write_lines(dir.path() / "gt" / "a.txt", "x\nx\n");
    CHECK_THROWS_WITH_AS(load_dataset(f, dir.path() / "gt"), doctest::Contains("length"), Error);
  }
}

TEST_CASE("save then load reproduces features bit-exactly") {
  for (auto format : {FeatureFormat::kText, FeatureFormat::kBinary}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(seed);
      Dataset ds;
      for (int v = 0; v < 3; ++v) {
        // Wide dynamic range exercises the shortest round-trip formatting.
        Matrix m = testing::random_matrix(5 + v, 7, rng, -1e3, 1e3);
        m(0, 0) = 1e-300;
        m(1, 1) = -0.1;
        ds.sequences.push_back(FeatureSequence::create("vid" + std::to_string(v), std::move(m)));
      }
      testing::TempDir dir("rt");
      save_dataset(ds, dir.path(), format);
      const auto back = load_dataset(dir.path() / "features");
      REQUIRE(back.size() == ds.size());
      for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.sequences[i].video_id == ds.sequences[i].video_id);
        CHECK(back.sequences[i].frames == ds.sequences[i].frames);
      }
    }
  }
}

TEST_CASE("binary feature file layout") {
  testing::TempDir dir("bin");
  Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  write_feature_file(dir.path() / "x.fseq", m, FeatureFormat::kBinary);
  std::ifstream in(dir.path() / "x.fseq", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() == 5 + 4 + 4 + 6 * 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "FSEQ1");
  CHECK(bytes[5] == 2);
  CHECK(bytes[9] == 3);
  // 1.0 is 0x3ff0000000000000, little-endian.
  CHECK(bytes[13 + 7] == 0x3f);
  CHECK(bytes[13 + 6] == 0xf0);
}

TEST_CASE("synthetic generator is deterministic") {
  SynthSpec spec;
  spec.rng_seed = 7;
  spec.num_videos = 4;
  spec.drop_probability = 0.2;
  spec.background_fraction = 0.1;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.sequences[i].frames == b.sequences[i].frames);
    CHECK(a.ground_truth[i].labels == b.ground_truth[i].labels);
  }
  spec.rng_seed = 8;
  CHECK_FALSE(generate_synthetic(spec).sequences[0].frames == a.sequences[0].frames);
}

namespace {

std::vector<std::string> collapse(const std::vector<std::string>& labels) {
  std::vector<std::string> out;
  for (const auto& l : labels)
    if (out.empty() || out.back() != l) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("synthetic videos share one global subaction order") {
  SynthSpec spec;
  spec.rng_seed = 3;
  spec.num_videos = 6;
  spec.num_subactions = 4;
  const auto ds = generate_synthetic(spec);
  for (const auto& g : ds.ground_truth)
    CHECK(collapse(g.labels) == std::vector<std::string>{"s1", "s2", "s3", "s4"});
  // Lengths vary between videos.
  std::set<std::size_t> lengths;
  for (const auto& s : ds.sequences) lengths.insert(s.num_frames());
  CHECK(lengths.size() > 1);
}

TEST_CASE("noise-free synthetic frames sit exactly on their centers") {
  SynthSpec spec;
  spec.rng_seed = 11;
  spec.num_videos = 3;
  spec.noise_scale = 0.0;
  spec.drop_probability = 0.3;
  const auto ds = generate_synthetic(spec);
  std::map<std::string, std::vector<double>> center;
  for (std::size_t v = 0; v < ds.size(); ++v)
    for (std::size_t n = 0; n < ds.sequences[v].num_frames(); ++n) {
      const auto row = ds.sequences[v].frames.row(n);
      auto [it, fresh] = center.try_emplace(ds.ground_truth[v].labels[n], row.begin(), row.end());
      if (!fresh) CHECK(std::equal(row.begin(), row.end(), it->second.begin()));
    }
  // Centers are pairwise separated by the configured spread.
  for (const auto& [a, ca] : center)
    for (const auto& [b, cb] : center)
      if (a < b) CHECK(distance(ca, cb) >= spec.subaction_center_spread);
}

TEST_CASE("synthetic segment lengths, timestamps and background share") {
  SynthSpec spec;
  spec.rng_seed = 5;
  spec.num_videos = 20;
  spec.min_segment_length = 4;
  spec.max_segment_length = 9;
  spec.background_fraction = 0.3;
  spec.drop_probability = 0.25;
  const auto ds = generate_synthetic(spec);
  ds.validate();
  std::size_t bg = 0, total = 0;
  for (std::size_t v = 0; v < ds.size(); ++v) {
    const auto& t = ds.sequences[v].timestamps;
    CHECK(t.back() == 1.0);
    for (std::size_t n = 1; n < t.size(); ++n) CHECK(t[n] > t[n - 1]);
    const auto& labels = ds.ground_truth[v].labels;
    for (std::size_t n = 0; n < labels.size();) {
      std::size_t e = n;
      while (e < labels.size() && labels[e] == labels[n]) ++e;
      if (labels[n] != kBackgroundToken) {
        CHECK(e - n >= spec.min_segment_length);
        CHECK(e - n <= spec.max_segment_length);
      }
      n = e;
    }
    bg += static_cast<std::size_t>(std::count(labels.begin(), labels.end(), "background"));
    total += labels.size();
  }
  CHECK(static_cast<double>(bg) / total == doctest::Approx(0.3).epsilon(0.02));
}

TEST_CASE("background frames stay away from every center") {
  for (auto style : {BackgroundStyle::kShell, BackgroundStyle::kBox}) {
    SynthSpec spec;
    spec.rng_seed = 9;
    spec.num_videos = 6;
    spec.num_subactions = 3;
    spec.feature_dim = 4;
    spec.noise_scale = 0.0;
    spec.background_fraction = 0.25;
    spec.background_style = style;
    const auto ds = generate_synthetic(spec);
    std::map<std::string, std::vector<double>> center;
    std::vector<std::vector<double>> bg;
    for (std::size_t v = 0; v < ds.size(); ++v)
      for (std::size_t n = 0; n < ds.sequences[v].num_frames(); ++n) {
        const auto row = ds.sequences[v].frames.row(n);
        if (ds.ground_truth[v].labels[n] == kBackgroundToken)
          bg.emplace_back(row.begin(), row.end());
        else
          center.try_emplace(ds.ground_truth[v].labels[n], row.begin(), row.end());
      }
    REQUIRE(center.size() == 3);
    REQUIRE(!bg.empty());
    for (const auto& b : bg) {
      double nearest = 1e300;
      for (const auto& [name, c] : center) {
        CHECK(distance(b, c) >= spec.subaction_center_spread);
        nearest = std::min(nearest, distance(b, c));
      }
      if (style == BackgroundStyle::kShell)
        CHECK(nearest <= 1.5 * spec.subaction_center_spread + 1e-9);
    }
  }
}

TEST_CASE("multi-activity synthetic data uses disjoint class names") {
  SynthSpec spec;
  spec.rng_seed = 2;
  spec.num_videos = 4;
  spec.num_activities = 2;
  spec.num_subactions = 3;
  const auto ds = generate_synthetic(spec);
  CHECK(ds.activities == std::vector<std::string>{"a1", "a2", "a1", "a2"});
  CHECK(collapse(ds.ground_truth[1].labels) ==
        std::vector<std::string>{"a2_s1", "a2_s2", "a2_s3"});
}

TEST_CASE("SynthSpec validation") {
  SynthSpec spec;
  spec.min_segment_length = 10;
  spec.max_segment_length = 5;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec = {};
  spec.subaction_center_spread = 0.0;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec = {};
  spec.noise_scale = -1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
}
