// Copyright 2026 The picie-cpp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "picie/checkpoint.hpp"
#include "picie/config.hpp"
#include "picie/errors.hpp"
#include "picie/eval.hpp"
#include "picie/grid_ops.hpp"
#include "picie/image_io.hpp"
#include "picie/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace picie::cli {

namespace {

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.path, "Run configuration file (key = value lines)");
  cmd->add_option("--set", args.sets, "Override a config key, key=value (repeatable)");
}

// File, then PICIE_ environment variables, then --set overrides.
RunConfig resolve_config(const ConfigArgs& args, const fs::path& fallback = {}) {
  RunConfig cfg;
  if (!args.path.empty()) cfg = load_config(args.path);
  else if (!fallback.empty() && fs::exists(fallback)) cfg = load_config(fallback);
  apply_environment(cfg, picie_environment());
  apply_overrides(cfg, args.sets);
  cfg.validate();
  return cfg;
}

std::vector<ImageSample> load_samples(const RunConfig& cfg, std::ostream& err) {
  LoadResult r = load_dataset(cfg);
  for (const auto& e : r.errors) err << "warning: skipped " << e.id << ": " << e.message << "\n";
  if (r.samples.empty()) throw DataError("dataset is empty");
  return std::move(r.samples);
}

std::string hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string epoch_tag(int epoch) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "epoch_%03d", epoch);
  return buf;
}

json report_json(const EpochReport& r) {
  json j;
  j["epoch"] = r.epoch;
  j["combined"] = r.combined;
  auto heads = json::array();
  for (std::size_t h = 0; h < r.heads.size(); ++h) {
    json hj = {{"k", r.heads[h].k},
               {"within", r.heads[h].within},
               {"cross", r.heads[h].cross},
               {"total", r.heads[h].total}};
    if (h < r.histograms.size()) hj["histogram"] = r.histograms[h];
    heads.push_back(hj);
  }
  j["heads"] = heads;
  j["clustering_seconds"] = r.clustering_seconds;
  j["training_seconds"] = r.training_seconds;
  return j;
}

bool all_labeled(const std::vector<ImageSample>& samples) {
  for (const auto& s : samples)
    if (!s.labels) return false;
  return true;
}

// Serializes, re-parses and writes; the output is only produced when valid.
void write_json(const std::string& text, const std::string& path, std::ostream& out) {
  if (!json::accept(text)) throw DataError("metrics JSON failed validation");
  if (path.empty() || path == "-") {
    out << text << "\n";
    return;
  }
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << text << "\n";
  if (!f) throw DataError("failed writing " + path);
}

std::string metrics_text(const std::vector<ImageSample>& samples, const Checkpoint& ck, const RunConfig& cfg,
                         bool robustness) {
  MetricsReport m = evaluate(samples, ck, cfg.n_classes(), cfg.partitions);
  std::optional<RobustnessReport> rob;
  if (robustness) {
    Rng rng(Rng::mix(cfg.train.seed ^ 0x7e57ULL));
    rob = robustness_eval(samples, ck, cfg.n_classes(), rng, cfg.train.transforms);
  }
  return to_json(m, rob);
}

Checkpoint load_for(const std::string& path, const RunConfig& cfg) {
  return load_checkpoint(path, cfg.model_hash());
}

fs::path config_beside(const std::string& checkpoint) {
  return fs::path(checkpoint).parent_path() / "config.cfg";
}

// ---- train --------------------------------------------------------------

struct TrainArgs {
  ConfigArgs config;
  bool resume = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(a.config);
  const auto samples = load_samples(cfg, err);
  const fs::path dir = cfg.output_dir;
  const fs::path ck_path = dir / "checkpoint.ckpt";
  fs::create_directories(dir / "pseudo_labels");

  std::optional<Trainer> trainer;
  if (a.resume) {
    if (!fs::exists(ck_path)) throw ConfigError("nothing to resume: " + ck_path.string() + " not found");
    trainer.emplace(samples, cfg.train, load_for(ck_path.string(), cfg));
  } else {
    trainer.emplace(samples, cfg.train, cfg.extractor, cfg.model_hash());
  }

  {
    std::ofstream snap(dir / "config.cfg");
    snap << "# model_hash = " << hex(cfg.model_hash()) << "\n" << cfg.snapshot();
    if (!snap) throw DataError("cannot write config snapshot in " + dir.string());
  }

  std::ofstream reports(dir / "reports.jsonl", a.resume ? std::ios::app : std::ios::trunc);
  auto on_epoch = [&](const EpochReport& r) {
    reports << report_json(r).dump() << "\n" << std::flush;
    for (const auto& set : trainer->pseudo_labels())
      save_pseudo_labels(dir / "pseudo_labels" / (epoch_tag(r.epoch) + "_k" + std::to_string(set.k()) + ".bin"),
                         set);
    save_checkpoint(ck_path, trainer->checkpoint());
    out << epoch_tag(r.epoch) << " loss " << r.combined << "\n";
  };
  trainer->run(on_epoch);
  const Checkpoint ck = trainer->checkpoint();
  save_checkpoint(ck_path, ck);

  if (all_labeled(samples)) {
    const std::string text = metrics_text(samples, ck, cfg, cfg.robustness);
    write_json(text, (dir / "metrics.json").string(), out);
    const json m = json::parse(text);
    out << "accuracy " << m["accuracy"].get<double>() << " miou " << m["miou"].get<double>() << "\n";
  }
  out << "run directory: " << dir.string() << "\n";
  return kOk;
}

// ---- eval ---------------------------------------------------------------

struct EvalArgs {
  ConfigArgs config;
  std::string checkpoint;
  std::vector<std::string> partitions;
  bool robustness = false;
  std::string render_dir;
  std::string output;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = resolve_config(a.config, config_beside(a.checkpoint));
  if (!a.partitions.empty()) {
    cfg.partitions.clear();
    for (const auto& p : a.partitions) cfg.partitions.push_back(parse_partition(p));
    cfg.validate();
  }
  const Checkpoint ck = load_for(a.checkpoint, cfg);
  const auto samples = load_samples(cfg, err);
  if (!all_labeled(samples)) throw DataError("evaluation needs ground truth for every image");
  write_json(metrics_text(samples, ck, cfg, a.robustness || cfg.robustness), a.output, out);

  if (!a.render_dir.empty()) {
    fs::create_directories(a.render_dir);
    const auto preds = predict_labels(samples, ck);
    const auto images = render_majority_vote(preds, samples, ck.eval_centroids->k, default_palette(cfg.n_classes()));
    for (std::size_t i = 0; i < samples.size(); ++i)
      write_png(fs::path(a.render_dir) / (samples[i].id + ".png"), images[i]);
  }
  return kOk;
}

// ---- cluster ------------------------------------------------------------

struct ClusterArgs {
  ConfigArgs config;
  std::string checkpoint;
  std::string save_dir;
};

int cmd_cluster(const ClusterArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(a.config, a.checkpoint.empty() ? fs::path() : config_beside(a.checkpoint));
  const auto samples = load_samples(cfg, err);
  const Extractor extractor = a.checkpoint.empty()
                                  ? make_extractor(cfg.extractor, cfg.train.seed)
                                  : [&] {
                                      const Checkpoint ck = load_for(a.checkpoint, cfg);
                                      return Extractor(ck.extractor, ck.params);
                                    }();
  std::vector<int> ks = {cfg.train.k1};
  if (cfg.train.k2 > 0) ks.push_back(cfg.train.k2);
  Rng rng(cfg.train.seed);
  const auto sets = cluster_two_views(samples, extractor, ks, rng, cfg.train.kmeans, nullptr, cfg.train.transforms);

  json j;
  j["images"] = samples.size();
  auto heads = json::array();
  for (const auto& set : sets) {
    json h;
    h["k"] = set.k();
    h["view1"] = set.counts(1);
    h["view2"] = set.counts(2);
    heads.push_back(h);
    if (!a.save_dir.empty()) {
      fs::create_directories(a.save_dir);
      save_pseudo_labels(fs::path(a.save_dir) / ("pseudo_labels_k" + std::to_string(set.k()) + ".bin"), set);
    }
  }
  j["heads"] = heads;
  out << j.dump(2) << "\n";
  return kOk;
}

// ---- visualize ----------------------------------------------------------

struct VisualizeArgs {
  ConfigArgs config;
  std::string checkpoint;
  std::vector<std::string> ids;
  std::string out_dir = "renderings";
};

std::vector<std::size_t> select_ids(const std::vector<ImageSample>& samples, const std::vector<std::string>& ids) {
  std::vector<std::size_t> picked;
  for (const auto& id : ids) {
    const auto it = std::find_if(samples.begin(), samples.end(), [&](const ImageSample& s) { return s.id == id; });
    if (it == samples.end()) {
      std::string known;
      for (const auto& s : samples) known += (known.empty() ? "" : ", ") + s.id;
      throw ConfigError("unknown image id '" + id + "'; available: " + known);
    }
    picked.push_back(static_cast<std::size_t>(it - samples.begin()));
  }
  return picked;
}

int cmd_visualize(const VisualizeArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(a.config, config_beside(a.checkpoint));
  const Checkpoint ck = load_for(a.checkpoint, cfg);
  const auto samples = load_samples(cfg, err);
  const auto picked = select_ids(samples, a.ids);
  if (!all_labeled(samples)) throw DataError("majority-vote rendering needs ground truth for every image");
  // Cluster colors come from the majority vote over the whole set.
  const auto preds = predict_labels(samples, ck);
  const auto images = render_majority_vote(preds, samples, ck.eval_centroids->k, default_palette(cfg.n_classes()));
  fs::create_directories(a.out_dir);
  for (std::size_t i : picked) {
    const fs::path p = fs::path(a.out_dir) / (samples[i].id + ".png");
    write_png(p, images[i]);
    out << p.string() << "\n";
  }
  return kOk;
}

// ---- nn -----------------------------------------------------------------

struct NnArgs {
  ConfigArgs config;
  std::string checkpoint;
  std::string id;
  int y = 0;
  int x = 0;
  int k = 5;
  int stride = 2;
  std::string crops_dir;
  int crop_radius = 8;
};

int cmd_nn(const NnArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(a.config, config_beside(a.checkpoint));
  const Checkpoint ck = load_for(a.checkpoint, cfg);
  const auto samples = load_samples(cfg, err);
  select_ids(samples, {a.id});
  const Extractor extractor(ck.extractor, ck.params);
  std::vector<FeatureMap> corpus;
  corpus.reserve(samples.size());
  for (const auto& s : samples) corpus.push_back(extractor.extract(s.image, s.id));
  const NeighborResult r = nearest_neighbors(corpus, a.id, a.y, a.x, a.k, a.stride);
  if (r.truncated) err << "warning: only " << r.neighbors.size() << " candidates available\n";

  const int stride = ck.extractor.stride;
  for (std::size_t i = 0; i < r.neighbors.size(); ++i) {
    const auto& n = r.neighbors[i];
    char line[256];
    std::snprintf(line, sizeof(line), "%zu %s %d %d %.9f", i + 1, n.image_id.c_str(), n.y, n.x, n.distance);
    out << line << "\n";
    if (a.crops_dir.empty()) continue;
    fs::create_directories(a.crops_dir);
    const auto& img = std::find_if(samples.begin(), samples.end(),
                                   [&](const ImageSample& s) { return s.id == n.image_id; })->image;
    const int side = 2 * a.crop_radius;
    const int cy = n.y * stride + stride / 2, cx = n.x * stride + stride / 2;
    const int top = std::clamp(cy - a.crop_radius, 0, std::max(0, img.h - side));
    const int left = std::clamp(cx - a.crop_radius, 0, std::max(0, img.w - side));
    const Tensor patch = crop(img, top, left, std::min(side, img.h), std::min(side, img.w));
    write_png(fs::path(a.crops_dir) / ("rank_" + std::to_string(i + 1) + ".png"), patch);
  }
  return kOk;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PiCIE unsupervised semantic segmentation"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a run directory");
  add_config_options(train_cmd, train.config);
  train_cmd->add_flag("--resume", train.resume, "Continue from <output.dir>/checkpoint.ckpt");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and write metrics JSON");
  add_config_options(eval_cmd, eval.config);
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--partitions", eval.partitions, "Class partitions, name:a-b[,c]");
  eval_cmd->add_flag("--robustness", eval.robustness, "Add photometric and geometric test-time conditions");
  eval_cmd->add_option("--render", eval.render_dir, "Write majority-vote renderings to this directory");
  eval_cmd->add_option("-o,--output", eval.output, "Metrics JSON path (stdout by default)");

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "Run one two-view clustering pass and print statistics");
  add_config_options(cluster_cmd, cluster.config);
  cluster_cmd->add_option("--checkpoint", cluster.checkpoint, "Use this checkpoint's extractor");
  cluster_cmd->add_option("--save", cluster.save_dir, "Directory for the pseudo-label sets");

  VisualizeArgs vis;
  auto* vis_cmd = app.add_subcommand("visualize", "Render majority-vote segmentations");
  add_config_options(vis_cmd, vis.config);
  vis_cmd->add_option("--checkpoint", vis.checkpoint, "Checkpoint file")->required();
  vis_cmd->add_option("--ids", vis.ids, "Image ids to render")->required();
  vis_cmd->add_option("-o,--out", vis.out_dir, "Output directory");

  NnArgs nn;
  auto* nn_cmd = app.add_subcommand("nn", "Nearest-neighbor pixels of a query location");
  add_config_options(nn_cmd, nn.config);
  nn_cmd->add_option("--checkpoint", nn.checkpoint, "Checkpoint file")->required();
  nn_cmd->add_option("--id", nn.id, "Query image id")->required();
  nn_cmd->add_option("--y", nn.y, "Query row on the feature grid")->required();
  nn_cmd->add_option("--x", nn.x, "Query column on the feature grid")->required();
  nn_cmd->add_option("-k", nn.k, "Number of neighbors");
  nn_cmd->add_option("--stride", nn.stride, "Corpus subsampling stride");
  nn_cmd->add_option("--crops", nn.crops_dir, "Write image crops around each neighbor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, x;
    const int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train, out, err);
    if (*eval_cmd) return cmd_eval(eval, out, err);
    if (*cluster_cmd) return cmd_cluster(cluster, out, err);
    if (*vis_cmd) return cmd_visualize(vis, out, err);
    if (*nn_cmd) return cmd_nn(nn, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const json::exception& e) {
    err << "error: invalid JSON: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace picie::cli
