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

// Command-line front end: synth, train-embed, segment, discover, evaluate, sweep.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "tas/dataset.hpp"
#include "tas/eval.hpp"
#include "tas/io.hpp"
#include "tas/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

// Config keys settable from the command line. Values are applied on top of
// --config, so flags win.
struct ConfigFlags {
  std::optional<fs::path> config_file;
  std::map<std::string, std::string> values;

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  tas::RunConfig resolve() const {
    tas::RunConfig cfg;
    if (config_file) cfg = tas::load_config(*config_file, cfg);
    for (const auto& [k, v] : values) cfg.set(k, v);
    cfg.validate();
    return cfg;
  }
};

void add_embedding_flags(CLI::App* app, ConfigFlags& flags) {
  flags.add(app, "--embed-dim", "embed_dim", "Embedding dimension D");
  flags.add(app, "--lr", "learning_rate", "Learning rate");
  flags.add(app, "--epochs", "epochs", "Training epochs");
  flags.add(app, "--batch-size", "batch_size", "Mini-batch size");
  flags.add(app, "--init-scale", "weight_init_scale", "Weight init scale");
  flags.add(app, "--output-activation", "output_activation", "sigmoid|linear");
}

void add_run_flags(CLI::App* app, ConfigFlags& flags) {
  app->add_option("--config", flags.config_file, "key=value config file");
  flags.add(app, "--k", "k", "Subaction clusters K");
  flags.add(app, "--tau", "tau", "Background ratio in [0,1)");
  flags.add(app, "--protocol", "protocol", "breakfast|yti|salads");
  flags.add(app, "--refit-after-background", "refit_after_background", "true|false");
  add_embedding_flags(app, flags);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw tas::Error("cannot write " + path.string());
  out << text;
}

std::string loss_text(const std::vector<double>& curve) {
  std::string s;
  for (std::size_t e = 0; e < curve.size(); ++e)
    s += std::to_string(e) + ' ' + tas::io::format_double(curve[e]) + '\n';
  return s;
}

std::vector<tas::GroundTruth> load_ground_truth_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<tas::GroundTruth> gt;
  for (const auto& f : files) gt.push_back({f.stem().string(), tas::read_ground_truth_file(f)});
  if (gt.empty()) throw tas::Error("no ground-truth files in " + dir.string());
  return gt;
}

void write_run_outputs(const fs::path& out_dir, const tas::Dataset& ds,
                       const tas::RunResult& r) {
  tas::write_segmentations(out_dir / "segmentations", ds, r.segmentations);
  for (std::size_t i = 0; i < r.cluster_models.size(); ++i) {
    const std::string name = r.cluster_models.size() == 1
                                 ? "clusters.tclm"
                                 : "clusters_set" + std::to_string(i) + ".tclm";
    tas::save_cluster_model(r.cluster_models[i], out_dir / name);
  }
  if (!r.loss_curve.empty()) write_text(out_dir / "loss.txt", loss_text(r.loss_curve));
  if (r.partition) tas::write_partition(out_dir / "partition.txt", ds, *r.partition);
  if (r.report) {
    write_text(out_dir / "report.txt", tas::format_report(*r.report));
    std::cout << tas::format_report(*r.report);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised temporal action segmentation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset directory");
  tas::SynthSpec spec;
  fs::path synth_out;
  std::string synth_format = "text";
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", spec.rng_seed, "RNG seed")->required();
  synth->add_option("--videos", spec.num_videos, "Number of videos")->capture_default_str();
  synth->add_option("--subactions", spec.num_subactions, "Subactions per activity")
      ->capture_default_str();
  synth->add_option("--activities", spec.num_activities, "Activities")->capture_default_str();
  synth->add_option("--dim", spec.feature_dim, "Feature dimension")->capture_default_str();
  synth->add_option("--min-len", spec.min_segment_length, "Minimum segment length")
      ->capture_default_str();
  synth->add_option("--max-len", spec.max_segment_length, "Maximum segment length")
      ->capture_default_str();
  synth->add_option("--spread", spec.subaction_center_spread, "Minimum center separation")
      ->capture_default_str();
  synth->add_option("--noise", spec.noise_scale, "Frame noise scale")->capture_default_str();
  synth->add_option("--background", spec.background_fraction, "Background fraction")
      ->capture_default_str();
  synth->add_option("--drop", spec.drop_probability, "Subaction drop probability")
      ->capture_default_str();
  std::string synth_bg_style = "shell";
  synth->add_option("--background-style", synth_bg_style, "shell|box")
      ->check(CLI::IsMember({"shell", "box"}))
      ->capture_default_str();
  synth->add_option("--format", synth_format, "text|binary")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();

  // train-embed
  auto* train = app.add_subcommand("train-embed", "Train the temporal embedding");
  ConfigFlags train_flags;
  fs::path train_features, train_out;
  std::uint64_t train_seed = 0;
  std::optional<fs::path> train_loss;
  train->add_option("--features", train_features, "Feature directory")->required();
  train->add_option("--out", train_out, "Model checkpoint path")->required();
  train->add_option("--seed", train_seed, "RNG seed")->required();
  train->add_option("--loss-out", train_loss, "Write the per-epoch loss curve");
  train->add_option("--config", train_flags.config_file, "key=value config file");
  add_embedding_flags(train, train_flags);

  // segment / discover
  auto* segment = app.add_subcommand("segment", "Known-activity segmentation");
  auto* disc = app.add_subcommand("discover", "Unknown-activity discovery and segmentation");
  struct RunArgs {
    ConfigFlags flags;
    fs::path features, out;
    std::optional<fs::path> gt, embedding;
    std::uint64_t seed = 0;
  } seg_args, disc_args;
  for (auto [cmd, args] : {std::pair{segment, &seg_args}, std::pair{disc, &disc_args}}) {
    cmd->add_option("--features", args->features, "Feature directory")->required();
    cmd->add_option("--gt", args->gt, "Ground-truth directory (enables evaluation)");
    cmd->add_option("--embedding", args->embedding, "Pretrained embedding checkpoint");
    cmd->add_option("--out", args->out, "Output directory")->required();
    cmd->add_option("--seed", args->seed, "RNG seed")->required();
    add_run_flags(cmd, args->flags);
  }
  disc_args.flags.add(disc, "--k-prime", "k_prime", "Activity clusters K'");
  disc_args.flags.add(disc, "--codebook-size", "codebook_size", "Bag-of-words vocabulary");
  disc_args.flags.add(disc, "--descriptor", "descriptor", "soft|hard|mean");
  disc_args.flags.add(disc, "--video-metric", "video_metric", "euclidean|cosine");
  disc_args.flags.add(disc, "--per-set-embedding", "per_set_embedding", "true|false");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score segmentations against ground truth");
  fs::path eval_gt, eval_pred;
  std::string eval_protocol = "breakfast";
  std::optional<fs::path> eval_out;
  eval->add_option("--gt", eval_gt, "Ground-truth directory")->required();
  eval->add_option("--pred", eval_pred, "Segmentation directory")->required();
  eval->add_option("--protocol", eval_protocol, "breakfast|yti|salads")->capture_default_str();
  eval->add_option("--out", eval_out, "Report path (default stdout)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Grid over K', K and tau; writes CSV");
  ConfigFlags sweep_flags;
  fs::path sweep_features, sweep_gt, sweep_out;
  std::uint64_t sweep_seed = 0;
  std::string sweep_name = "dataset";
  std::vector<std::size_t> sweep_kp, sweep_k;
  std::vector<double> sweep_tau;
  sw->add_option("--features", sweep_features, "Feature directory")->required();
  sw->add_option("--gt", sweep_gt, "Ground-truth directory")->required();
  sw->add_option("--out", sweep_out, "CSV path")->required();
  sw->add_option("--seed", sweep_seed, "RNG seed")->required();
  sw->add_option("--name", sweep_name, "Dataset name for the CSV")->capture_default_str();
  sw->add_option("--k-primes", sweep_kp, "K' values")->delimiter(',');
  sw->add_option("--ks", sweep_k, "K values")->delimiter(',');
  sw->add_option("--taus", sweep_tau, "tau values")->delimiter(',');
  sweep_flags.add(sw, "--mode", "mode", "known|unknown");
  sweep_flags.add(sw, "--codebook-size", "codebook_size", "Bag-of-words vocabulary");
  sweep_flags.add(sw, "--descriptor", "descriptor", "soft|hard|mean");
  add_run_flags(sw, sweep_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      spec.background_style =
          synth_bg_style == "box" ? tas::BackgroundStyle::kBox : tas::BackgroundStyle::kShell;
      const auto ds = tas::generate_synthetic(spec);
      tas::save_dataset(ds, synth_out,
                        synth_format == "binary" ? tas::FeatureFormat::kBinary
                                                 : tas::FeatureFormat::kText);
    } else if (train->parsed()) {
      const auto ds = tas::load_dataset(train_features);
      auto cfg = train_flags.resolve();
      cfg.embedding.rng_seed = tas::embedding_seed(train_seed);
      const auto trained = tas::train_embedding(ds, cfg.embedding);
      if (train_out.has_parent_path()) fs::create_directories(train_out.parent_path());
      tas::save_embedding(trained.model, train_out);
      if (train_loss) write_text(*train_loss, loss_text(trained.loss_curve));
    } else if (segment->parsed() || disc->parsed()) {
      RunArgs& a = segment->parsed() ? seg_args : disc_args;
      a.flags.values["mode"] = segment->parsed() ? "known" : "unknown";
      a.flags.values["seed"] = std::to_string(a.seed);
      const auto cfg = a.flags.resolve();
      const auto ds = tas::load_dataset(a.features, a.gt);
      std::optional<tas::EmbeddingModel> model;
      if (a.embedding) model = tas::load_embedding(*a.embedding);
      const auto result = tas::run(ds, cfg, model);
      write_run_outputs(a.out, ds, result);
    } else if (eval->parsed()) {
      const auto gt = load_ground_truth_dir(eval_gt);
      std::vector<std::vector<int>> pred;
      for (const auto& g : gt) pred.push_back(tas::read_segmentation(eval_pred / (g.video_id + ".txt")));
      const auto report = tas::evaluate(gt, pred, tas::parse_protocol(eval_protocol));
      if (eval_out)
        write_text(*eval_out, tas::format_report(report));
      else
        std::cout << tas::format_report(report);
    } else if (sw->parsed()) {
      sweep_flags.values["seed"] = std::to_string(sweep_seed);
      const auto cfg = sweep_flags.resolve();
      const auto ds = tas::load_dataset(sweep_features, sweep_gt);
      const auto entries = tas::sweep(ds, cfg, {sweep_kp, sweep_k, sweep_tau});
      write_text(sweep_out, tas::sweep_csv(sweep_name, sweep_seed, entries));
    }
  } catch (const tas::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
