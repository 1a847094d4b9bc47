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

#include "tas/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "tas/io.hpp"

namespace fs = std::filesystem;

namespace tas {

namespace {

constexpr std::string_view kFeatureMagic = "FSEQ1";

void check_finite(const Matrix& m, const std::string& what) {
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (!std::isfinite(m(r, c)))
        throw Error(what + ": non-finite value at frame " + std::to_string(r) +
                    ", dim " + std::to_string(c));
}

Matrix parse_text_features(std::istream& in, const std::string& what) {
  Matrix m;
  std::string line;
  std::vector<double> row;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    row.clear();
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
      if (p == end) break;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() ||
          (next < end && !std::isspace(static_cast<unsigned char>(*next))))
        throw Error(what + ": cannot parse number on line " + std::to_string(line_no));
      row.push_back(v);
      p = next;
    }
    if (row.empty()) continue;
    if (m.rows() > 0 && row.size() != m.cols())
      throw Error(what + ": line " + std::to_string(line_no) + " has " +
                  std::to_string(row.size()) + " values, expected " +
                  std::to_string(m.cols()));
    m.append_row(row);
  }
  return m;
}

}  // namespace

std::vector<double> relative_timestamps(std::size_t num_frames) {
  std::vector<double> t(num_frames);
  for (std::size_t n = 0; n < num_frames; ++n)
    t[n] = static_cast<double>(n + 1) / static_cast<double>(num_frames);
  return t;
}

FeatureSequence FeatureSequence::create(std::string video_id, Matrix frames) {
  if (frames.rows() == 0) throw Error(video_id + ": video has no frames");
  check_finite(frames, video_id);
  FeatureSequence seq;
  seq.video_id = std::move(video_id);
  seq.timestamps = relative_timestamps(frames.rows());
  seq.frames = std::move(frames);
  return seq;
}

std::size_t Dataset::feature_dim() const {
  return sequences.empty() ? 0 : sequences.front().dim();
}

std::size_t Dataset::total_frames() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.num_frames();
  return n;
}

void Dataset::validate() const {
  std::set<std::string> ids;
  for (const auto& s : sequences) {
    if (!ids.insert(s.video_id).second) throw Error("duplicate video id " + s.video_id);
    if (s.dim() != feature_dim())
      throw Error("dimension mismatch: " + s.video_id + " has " + std::to_string(s.dim()) +
                  " features, expected " + std::to_string(feature_dim()));
  }
  if (!ground_truth.empty()) {
    if (ground_truth.size() != sequences.size())
      throw Error("ground truth does not cover every video");
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      if (ground_truth[i].video_id != sequences[i].video_id)
        throw Error("ground truth misaligned at " + sequences[i].video_id);
      if (ground_truth[i].labels.size() != sequences[i].num_frames())
        throw Error("ground truth length mismatch for " + sequences[i].video_id + ": " +
                    std::to_string(ground_truth[i].labels.size()) + " labels, " +
                    std::to_string(sequences[i].num_frames()) + " frames");
    }
  }
  if (!activities.empty() && activities.size() != sequences.size())
    throw Error("activity labels do not cover every video");
}

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
  Dataset out;
  for (std::size_t i : indices) {
    out.sequences.push_back(sequences.at(i));
    if (has_ground_truth()) out.ground_truth.push_back(ground_truth.at(i));
    if (!activities.empty()) out.activities.push_back(activities.at(i));
  }
  return out;
}

void SynthSpec::validate() const {
  if (num_videos == 0) throw Error("synth: num_videos must be positive");
  if (num_subactions == 0) throw Error("synth: num_subactions must be positive");
  if (feature_dim == 0) throw Error("synth: feature_dim must be positive");
  if (num_activities == 0) throw Error("synth: num_activities must be positive");
  if (min_segment_length == 0 || min_segment_length > max_segment_length)
    throw Error("synth: need 1 <= min_segment_length <= max_segment_length");
  if (!(subaction_center_spread > 0.0)) throw Error("synth: spread must be positive");
  if (!(noise_scale >= 0.0)) throw Error("synth: noise_scale must be non-negative");
  if (!(background_fraction >= 0.0 && background_fraction < 1.0))
    throw Error("synth: background_fraction must lie in [0,1)");
  if (!(drop_probability >= 0.0 && drop_probability < 1.0))
    throw Error("synth: drop_probability must lie in [0,1)");
}

Matrix read_feature_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file " + path.string());
  char magic[5] = {};
  in.read(magic, 5);
  const std::string what = path.string();
  if (in.gcount() == 5 && std::string_view(magic, 5) == kFeatureMagic) {
    const std::uint32_t n = io::read_u32(in, what);
    const std::uint32_t d = io::read_u32(in, what);
    Matrix m(n, d);
    for (double& v : m.data()) v = io::read_f64(in, what);
    if (n == 0) throw Error(what + ": video has no frames");
    return m;
  }
  in.clear();
  in.seekg(0);
  Matrix m = parse_text_features(in, what);
  if (m.rows() == 0) throw Error(what + ": video has no frames");
  return m;
}

void write_feature_file(const fs::path& path, const Matrix& frames, FeatureFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature file " + path.string());
  if (format == FeatureFormat::kBinary) {
    out.write(kFeatureMagic.data(), kFeatureMagic.size());
    io::write_u32(out, static_cast<std::uint32_t>(frames.rows()));
    io::write_u32(out, static_cast<std::uint32_t>(frames.cols()));
    for (double v : frames.data()) io::write_f64(out, v);
  } else {
    std::string line;
    for (std::size_t r = 0; r < frames.rows(); ++r) {
      line.clear();
      for (std::size_t c = 0; c < frames.cols(); ++c) {
        if (c) line += ' ';
        line += io::format_double(frames(r, c));
      }
      line += '\n';
      out << line;
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<std::string> read_ground_truth_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ground-truth file " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string token;
    if (ls >> token) labels.push_back(token);
  }
  return labels;
}

void write_ground_truth_file(const fs::path& path, const std::vector<std::string>& labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write ground-truth file " + path.string());
  for (const auto& l : labels) out << l << '\n';
}

std::vector<std::pair<std::string, std::string>> read_pairs_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key)) continue;
    if (!(ls >> value)) throw Error(path.string() + ": expected '<id> <value>' lines");
    pairs.emplace_back(std::move(key), std::move(value));
  }
  return pairs;
}

Dataset load_dataset(const fs::path& feature_dir, const std::optional<fs::path>& gt_dir) {
  if (!fs::is_directory(feature_dir))
    throw Error("feature directory not found: " + feature_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(feature_dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  Dataset ds;
  for (const auto& f : files) {
    ds.sequences.push_back(FeatureSequence::create(f.stem().string(), read_feature_file(f)));
    if (gt_dir) {
      const fs::path gt_path = *gt_dir / (f.stem().string() + ".txt");
      ds.ground_truth.push_back({f.stem().string(), read_ground_truth_file(gt_path)});
    }
  }
  if (ds.sequences.empty()) throw Error("no feature files in " + feature_dir.string());

  const fs::path activity_file = feature_dir.parent_path() / "activities.txt";
  if (fs::exists(activity_file)) {
    std::vector<std::string> acts;
    auto pairs = read_pairs_file(activity_file);
    for (const auto& s : ds.sequences) {
      auto it = std::find_if(pairs.begin(), pairs.end(),
                             [&](const auto& p) { return p.first == s.video_id; });
      if (it == pairs.end()) {
        acts.clear();
        break;
      }
      acts.push_back(it->second);
    }
    ds.activities = std::move(acts);
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& dir, FeatureFormat format) {
  dataset.validate();
  fs::create_directories(dir / "features");
  const char* ext = format == FeatureFormat::kBinary ? ".fseq" : ".txt";
  for (const auto& s : dataset.sequences)
    write_feature_file(dir / "features" / (s.video_id + ext), s.frames, format);
  if (dataset.has_ground_truth()) {
    fs::create_directories(dir / "gt");
    for (const auto& g : dataset.ground_truth)
      write_ground_truth_file(dir / "gt" / (g.video_id + ".txt"), g.labels);
  }
  if (!dataset.activities.empty()) {
    std::ofstream out(dir / "activities.txt");
    for (std::size_t i = 0; i < dataset.size(); ++i)
      out << dataset.sequences[i].video_id << ' ' << dataset.activities[i] << '\n';
  }
}

namespace {

std::vector<std::vector<double>> draw_centers(std::size_t count, std::size_t dim,
                                              double spread, std::mt19937_64& rng) {
  double half_width =
      spread * std::max(1.0, std::pow(static_cast<double>(count), 1.0 / dim));
  std::vector<std::vector<double>> centers;
  std::vector<double> c(dim);
  std::size_t attempts = 0;
  while (centers.size() < count) {
    std::uniform_real_distribution<double> u(-half_width, half_width);
    for (double& v : c) v = u(rng);
    bool ok = std::all_of(centers.begin(), centers.end(), [&](const auto& other) {
      return distance(c, other) >= spread;
    });
    if (ok) {
      centers.push_back(c);
      attempts = 0;
    } else if (++attempts > 1000) {
      half_width *= 1.5;
      attempts = 0;
    }
  }
  return centers;
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  const std::size_t dim = spec.feature_dim;
  const std::size_t per_activity = spec.num_subactions;
  const auto centers = draw_centers(per_activity * spec.num_activities, dim,
                                    spec.subaction_center_spread, rng);

  // Background frames are uniform in a box around all centers but at least one
  // spread away from every center.
  double box = 0.0;
  for (const auto& c : centers)
    for (double v : c) box = std::max(box, std::abs(v));
  box = 1.5 * box + spec.subaction_center_spread;

  auto class_name = [&](std::size_t activity, std::size_t sub) {
    std::string s = "s" + std::to_string(sub + 1);
    return spec.num_activities == 1 ? s : "a" + std::to_string(activity + 1) + "_" + s;
  };

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> seg_len(spec.min_segment_length,
                                                     spec.max_segment_length);
  std::uniform_real_distribution<double> bg_coord(-box, box);

  Dataset ds;
  for (std::size_t v = 0; v < spec.num_videos; ++v) {
    const std::size_t activity = v % spec.num_activities;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < per_activity; ++j)
      if (unit(rng) >= spec.drop_probability) kept.push_back(j);
    if (kept.empty())
      kept.push_back(std::uniform_int_distribution<std::size_t>(0, per_activity - 1)(rng));

    std::vector<std::size_t> lengths;
    std::size_t subaction_frames = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      lengths.push_back(seg_len(rng));
      subaction_frames += lengths.back();
    }
    const auto bg_total = static_cast<std::size_t>(
        std::llround(spec.background_fraction * subaction_frames /
                     (1.0 - spec.background_fraction)));
    // Background runs sit in the gaps before, between and after segments.
    std::vector<std::size_t> gaps(kept.size() + 1, 0);
    std::uniform_int_distribution<std::size_t> gap_pick(0, kept.size());
    for (std::size_t b = 0; b < bg_total; ++b) ++gaps[gap_pick(rng)];

    Matrix frames(0, dim);
    std::vector<std::string> labels;
    std::vector<double> row(dim);
    std::uniform_int_distribution<std::size_t> anchor_pick(0, per_activity - 1);
    std::uniform_real_distribution<double> radius(spec.subaction_center_spread,
                                                  1.5 * spec.subaction_center_spread);
    auto draw_background = [&] {
      if (spec.background_style == BackgroundStyle::kBox) {
        for (double& x : row) x = bg_coord(rng);
        return;
      }
      const auto& c = centers[activity * per_activity + anchor_pick(rng)];
      double norm = 0.0;
      for (double& x : row) norm += (x = gauss(rng)) * x;
      norm = std::sqrt(norm);
      const double r = radius(rng);
      for (std::size_t d = 0; d < dim; ++d) row[d] = c[d] + (norm > 0.0 ? r * row[d] / norm : r);
    };
    auto emit_background = [&](std::size_t count) {
      for (std::size_t b = 0; b < count; ++b) {
        for (int attempt = 0;; ++attempt) {
          draw_background();
          bool far = std::all_of(centers.begin(), centers.end(), [&](const auto& c) {
            return distance(row, c) >= spec.subaction_center_spread;
          });
          if (far || attempt >= 1000) break;
        }
        frames.append_row(row);
        labels.emplace_back(kBackgroundToken);
      }
    };
    for (std::size_t i = 0; i < kept.size(); ++i) {
      emit_background(gaps[i]);
      const auto& c = centers[activity * per_activity + kept[i]];
      for (std::size_t n = 0; n < lengths[i]; ++n) {
        for (std::size_t d = 0; d < dim; ++d) row[d] = c[d] + spec.noise_scale * gauss(rng);
        frames.append_row(row);
        labels.push_back(class_name(activity, kept[i]));
      }
    }
    emit_background(gaps.back());

    char id[32];
    std::snprintf(id, sizeof id, "video_%04zu", v);
    ds.sequences.push_back(FeatureSequence::create(id, std::move(frames)));
    ds.ground_truth.push_back({id, std::move(labels)});
    ds.activities.push_back("a" + std::to_string(activity + 1));
  }
  return ds;
}

}  // namespace tas
