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

#include "tas/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

namespace tas {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size())
    throw Error("config: bad value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error("config: bad boolean '" + value + "' for " + key);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

class Stopwatch {
 public:
  explicit Stopwatch(std::vector<StageTiming>& sink) : sink_(sink) {}
  void lap(std::string stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_.push_back({std::move(stage), std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

EmbeddingModel obtain_embedding(const Dataset& dataset, const RunConfig& cfg,
                                const std::optional<EmbeddingModel>& trained,
                                RunResult& out) {
  if (trained) {
    if (trained->input_dim != dataset.feature_dim())
      throw Error("embedding expects " + std::to_string(trained->input_dim) +
                  "-dim features, dataset has " + std::to_string(dataset.feature_dim()));
    return *trained;
  }
  EmbeddingConfig ecfg = cfg.embedding;
  ecfg.rng_seed = embedding_seed(cfg.rng_seed);
  auto t = train_embedding(dataset, ecfg);
  out.loss_curve = std::move(t.loss_curve);
  return std::move(t.model);
}

}  // namespace

void RunConfig::validate() const {
  if (k == 0) throw Error("config: K must be >= 1");
  if (k_prime == 0) throw Error("config: K' must be >= 1");
  if (!(tau >= 0.0 && tau < 1.0)) throw Error("config: tau must lie in [0,1)");
  embedding.validate();
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "mode") {
    if (value == "known") mode = RunMode::kKnown;
    else if (value == "unknown") mode = RunMode::kUnknown;
    else throw Error("config: mode must be known or unknown");
  } else if (key == "k") {
    k = parse_number<std::size_t>(key, value);
  } else if (key == "k_prime") {
    k_prime = parse_number<std::size_t>(key, value);
  } else if (key == "tau") {
    tau = parse_number<double>(key, value);
  } else if (key == "embed_dim") {
    embedding.embed_dim = parse_number<std::size_t>(key, value);
  } else if (key == "learning_rate") {
    embedding.learning_rate = parse_number<double>(key, value);
  } else if (key == "epochs") {
    embedding.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "batch_size") {
    embedding.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "weight_init_scale") {
    embedding.weight_init_scale = parse_number<double>(key, value);
  } else if (key == "output_activation") {
    if (value == "sigmoid") embedding.output = OutputActivation::kSigmoid;
    else if (value == "linear") embedding.output = OutputActivation::kLinear;
    else throw Error("config: output_activation must be sigmoid or linear");
  } else if (key == "codebook_size") {
    codebook_size = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    rng_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "protocol") {
    protocol = parse_protocol(value);
  } else if (key == "descriptor") {
    if (value == "soft") descriptor = VideoDescriptor::kSoftBow;
    else if (value == "hard") descriptor = VideoDescriptor::kHardBow;
    else if (value == "mean") descriptor = VideoDescriptor::kMeanPool;
    else throw Error("config: descriptor must be soft, hard or mean");
  } else if (key == "video_metric") {
    if (value == "euclidean") metric = VideoMetric::kEuclidean;
    else if (value == "cosine") metric = VideoMetric::kCosine;
    else throw Error("config: video_metric must be euclidean or cosine");
  } else if (key == "per_set_embedding") {
    per_set_embedding = parse_bool(key, value);
  } else if (key == "refit_after_background") {
    refit_after_background = parse_bool(key, value);
  } else {
    throw Error("config: unknown key '" + key + "'");
  }
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::uint64_t embedding_seed(std::uint64_t seed) { return split_seed(seed, "embedding"); }

RunResult run_known(const Dataset& dataset, const RunConfig& cfg,
                    const std::optional<EmbeddingModel>& trained) {
  cfg.validate();
  RunResult out;
  Stopwatch clock(out.timings);
  out.embedding = obtain_embedding(dataset, cfg, trained, out);
  clock.lap("embedding");

  const Dataset embedded = embed_dataset(out.embedding, dataset);
  clock.lap("embed");

  ClusterBuildOptions opts;
  opts.refit_after_background = cfg.refit_after_background;
  auto build = build_cluster_model(embedded, cfg.k, cfg.tau, set_cluster_seed(cfg.rng_seed, 0),
                                   opts);
  clock.lap("clustering");

  for (const auto& seq : embedded.sequences)
    out.segmentations.push_back(decode_video(seq, build.model));
  out.cluster_models.push_back(std::move(build.model));
  clock.lap("decoding");

  if (dataset.has_ground_truth()) {
    std::vector<std::vector<int>> labels;
    for (const auto& s : out.segmentations) labels.push_back(s.labels);
    out.report = evaluate(dataset.ground_truth, labels, cfg.protocol);
    clock.lap("evaluation");
  }
  return out;
}

RunResult run_unknown(const Dataset& dataset, const RunConfig& cfg,
                      const std::optional<EmbeddingModel>& trained) {
  cfg.validate();
  RunResult out;
  Stopwatch clock(out.timings);
  out.embedding = obtain_embedding(dataset, cfg, trained, out);
  clock.lap("embedding");

  DiscoverConfig dcfg;
  dcfg.k_prime = cfg.k_prime;
  dcfg.k = cfg.k;
  dcfg.tau = cfg.tau;
  dcfg.rng_seed = cfg.rng_seed;
  dcfg.codebook_size = cfg.codebook_size;
  dcfg.descriptor = cfg.descriptor;
  dcfg.metric = cfg.metric;
  dcfg.per_set_embedding = cfg.per_set_embedding;
  dcfg.refit_after_background = cfg.refit_after_background;
  dcfg.embedding = cfg.embedding;
  auto found = discover(dataset, out.embedding, dcfg);
  out.partition = std::move(found.partition);
  out.cluster_models = std::move(found.set_models);
  out.segmentations = std::move(found.segmentations);
  clock.lap("discovery");

  if (dataset.has_ground_truth()) {
    std::vector<std::vector<int>> labels;
    for (const auto& s : out.segmentations) labels.push_back(s.labels);
    out.report = evaluate(dataset.ground_truth, labels, cfg.protocol);
    clock.lap("evaluation");
  }
  return out;
}

RunResult run(const Dataset& dataset, const RunConfig& cfg,
              const std::optional<EmbeddingModel>& trained) {
  return cfg.mode == RunMode::kKnown ? run_known(dataset, cfg, trained)
                                     : run_unknown(dataset, cfg, trained);
}

std::vector<SweepEntry> sweep(const Dataset& dataset, const RunConfig& base,
                              const SweepGrid& grid) {
  if (!dataset.has_ground_truth()) throw Error("sweep: ground truth required");
  base.validate();
  EmbeddingConfig ecfg = base.embedding;
  ecfg.rng_seed = embedding_seed(base.rng_seed);
  const EmbeddingModel model = train_embedding(dataset, ecfg).model;

  const std::vector<std::size_t> k_primes =
      grid.k_primes.empty() ? std::vector<std::size_t>{base.k_prime} : grid.k_primes;
  const std::vector<std::size_t> ks = grid.ks.empty() ? std::vector<std::size_t>{base.k} : grid.ks;
  const std::vector<double> taus = grid.taus.empty() ? std::vector<double>{base.tau} : grid.taus;

  std::vector<SweepEntry> out;
  for (std::size_t kp : k_primes)
    for (std::size_t k : ks)
      for (double tau : taus) {
        RunConfig cfg = base;
        cfg.k_prime = kp;
        cfg.k = k;
        cfg.tau = tau;
        auto r = run(dataset, cfg, model);
        out.push_back({kp, k, tau, *r.report});
      }
  return out;
}

std::string sweep_csv(const std::string& dataset_name, std::uint64_t seed,
                      const std::vector<SweepEntry>& entries) {
  std::ostringstream out;
  out << csv_header() << '\n';
  for (const auto& e : entries)
    out << csv_row(dataset_name, e.k_prime, e.k, e.tau, seed, e.report) << '\n';
  return out.str();
}

void write_segmentations(const std::filesystem::path& dir, const Dataset& dataset,
                         const std::vector<Segmentation>& segmentations) {
  if (segmentations.size() != dataset.size())
    throw Error("write_segmentations: one segmentation per video required");
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < dataset.size(); ++i)
    write_segmentation(dir / (dataset.sequences[i].video_id + ".txt"),
                       segmentations[i].labels);
}

std::vector<std::vector<int>> read_segmentations(const std::filesystem::path& dir,
                                                 const Dataset& dataset) {
  std::vector<std::vector<int>> out;
  for (const auto& s : dataset.sequences)
    out.push_back(read_segmentation(dir / (s.video_id + ".txt")));
  return out;
}

}  // namespace tas
