// openad: command-line front end.
//
//   openad synth       --spec <json> --out <dir>
//   openad embed-synth --labels a,b,c --plan orthonormal|paired --dim D --out <file.oade>
//   openad train       --manifest <json> --embeddings <oade> --out <ckpt.oadc> [--config <json>] [overrides]
//   openad eval        --checkpoint <oadc> --manifest <json> --embeddings <oade> --mode closed|open
//   openad detect      --checkpoint <oadc> --cloud <xyz> --embeddings <oade> --out <ply> [--labels a,b]
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "openad/checkpoint.hpp"
#include "openad/dataset.hpp"
#include "openad/embeddings.hpp"
#include "openad/error.hpp"
#include "openad/model.hpp"
#include "openad/parallel.hpp"
#include "openad/ply.hpp"
#include "openad/protocol.hpp"
#include "openad/synthetic.hpp"
#include "openad/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace openad;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw_usage("empty entry in list '" + text + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw_usage("empty list");
  return out;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw_usage("'" + path.string() + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write '" + path.string() + "'");
  out << text;
}

std::size_t resolve_threads(int flag) { return flag > 0 ? static_cast<std::size_t>(flag) : default_thread_count(); }

// ---- train ----

struct TrainArgs {
  std::string config;
  std::string manifest;
  std::string embeddings;
  std::string out;
  std::string log;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size, points, embed_dim, eval_every;
  std::optional<double> learning_rate, weight_decay;
  std::optional<std::string> temperature;
  int threads = 0;
};

int run_train(const TrainArgs& a) {
  // Run config: JSON file (training keys plus paths), overridden by flags.
  static const std::set<std::string> path_keys{"manifest", "embeddings", "out", "log", "profile"};
  json file = a.config.empty() ? json::object() : read_json_file(a.config);
  if (!file.is_object()) throw_usage("--config must hold a JSON object");
  json train_keys = json::object();
  std::string manifest_path, embeddings_path, out_path, log_path, profile = "desk";
  for (const auto& [key, v] : file.items()) {
    if (!path_keys.contains(key)) {
      train_keys[key] = v;
      continue;
    }
    if (!v.is_string()) throw_usage("config key '" + key + "' must be a string");
    const std::string s = v.get<std::string>();
    if (key == "manifest") manifest_path = s;
    else if (key == "embeddings") embeddings_path = s;
    else if (key == "out") out_path = s;
    else if (key == "log") log_path = s;
    else profile = s;
  }
  if (!a.manifest.empty()) manifest_path = a.manifest;
  if (!a.embeddings.empty()) embeddings_path = a.embeddings;
  if (!a.out.empty()) out_path = a.out;
  if (!a.log.empty()) log_path = a.log;
  if (!a.profile.empty()) profile = a.profile;
  if (manifest_path.empty()) throw_usage("--manifest is required (flag or config key 'manifest')");
  if (embeddings_path.empty()) throw_usage("--embeddings is required (flag or config key 'embeddings')");
  if (out_path.empty()) throw_usage("--out is required (flag or config key 'out')");
  if (log_path.empty()) log_path = out_path + ".log.jsonl";

  TrainConfig config;
  if (profile == "desk") config = TrainConfig::desk_profile();
  else if (profile != "full") throw_usage("unknown profile '" + profile + "' (expected desk or full)");
  config.apply_json(train_keys);
  if (a.seed) config.seed = *a.seed;
  if (a.epochs) config.epochs = *a.epochs;
  if (a.batch_size) config.batch_size = *a.batch_size;
  if (a.points) config.points = *a.points;
  if (a.embed_dim) config.encoder.output_dim = *a.embed_dim;
  if (a.eval_every) config.eval_every = *a.eval_every;
  if (a.learning_rate) config.adam.learning_rate = *a.learning_rate;
  if (a.weight_decay) config.adam.weight_decay = *a.weight_decay;
  if (a.temperature) config.temperature = parse_temperature_mode(*a.temperature);
  config.threads = a.threads > 0 ? static_cast<std::size_t>(a.threads)
                                 : (train_keys.contains("threads") ? config.threads : default_thread_count());

  const DatasetManifest manifest = load_manifest(manifest_path);
  const EmbeddingTable table = read_embeddings(embeddings_path);
  const auto train_shapes = load_split(manifest, "train");
  std::vector<ShapeRecord> val_shapes;
  if (config.eval_every > 0 && manifest.splits.contains("val")) val_shapes = load_split(manifest, "val");

  std::cerr << "training on " << train_shapes.size() << " shapes, " << manifest.seen_labels.size()
            << " labels, D=" << config.encoder.output_dim << ", " << config.epochs << " epochs\n";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw_data("cannot write log '" + log_path + "'");
  const auto start = std::chrono::steady_clock::now();
  const TrainResult result = train(config, manifest, train_shapes, table, val_shapes.empty() ? nullptr : &val_shapes,
                                   [&](const EpochRecord& r) {
                                     log << r.to_json().dump() << '\n';
                                     log.flush();
                                     const double secs =
                                         std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                                     std::fprintf(stderr, "epoch %zu/%zu  loss %.6f%s  (%.1fs)\n", r.epoch, config.epochs,
                                                  r.mean_loss,
                                                  r.val_miou ? ("  val mIoU " + std::to_string(*r.val_miou)).c_str() : "",
                                                  secs);
                                   });
  save_checkpoint(out_path, result.checkpoint);
  std::cerr << "wrote " << out_path << " and " << log_path << "\n";
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint, manifest, embeddings, mode = "closed", split = "test", labels;
  std::optional<std::size_t> points;
  std::uint64_t seed = 0;
  int threads = 0;
};

std::size_t checkpoint_points(const Checkpoint& ckpt) {
  const auto& cfg = ckpt.metadata.train_config;
  return cfg.contains("points") ? cfg.at("points").get<std::size_t>() : 2048;
}

int run_eval(const EvalArgs& a) {
  const EvalMode mode = parse_eval_mode(a.mode);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const DatasetManifest manifest = load_manifest(a.manifest);
  EmbeddingTable table = read_embeddings(a.embeddings);
  if (!a.labels.empty()) table = table.select(split_list(a.labels));
  const auto shapes = load_split(manifest, a.split);

  ProtocolOptions options;
  options.mode = mode;
  options.points = a.points.value_or(checkpoint_points(ckpt));
  options.seed = a.seed;
  options.threads = resolve_threads(a.threads);
  const MetricsReport report = run_protocol(ckpt, manifest, shapes, table, options);
  json out = report.to_json();
  out["mode"] = eval_mode_name(mode);
  out["split"] = a.split;
  std::cout << out.dump(2) << '\n';
  std::fprintf(stderr, "%s-set on '%s': mIoU %.4f  Acc %.4f  mAcc %.4f\n", a.mode.c_str(), a.split.c_str(), report.miou,
               report.acc, report.macc);
  return 0;
}

// ---- detect ----

struct DetectArgs {
  std::string checkpoint, cloud, embeddings, labels, out, json_out;
  std::size_t points = 0;
  std::uint64_t seed = 0;
};

int run_detect(const DetectArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  EmbeddingTable table = read_embeddings(a.embeddings);
  if (!a.labels.empty()) table = table.select(split_list(a.labels));
  ShapeRecord shape = load_shape(a.cloud, std::nullopt, LabelColumn::kOptional);
  PointCloud cloud = a.points > 0 ? resample_to_n(shape.cloud, a.points, a.seed) : shape.cloud;
  const NormalizedCloud normalized = center_and_scale(cloud);
  if (normalized.degenerate) std::cerr << "warning: degenerate cloud (all points coincide)\n";

  const AffordanceMap map = detect(ckpt.model, normalized.cloud, table);
  write_ply(a.out, cloud, map.assignment, map.labels);

  json result{{"labels", map.labels}, {"assignment", map.assignment}};
  json scores = json::array();
  for (std::size_t i = 0; i < cloud.size(); ++i) scores.push_back(map.max_score(i));
  result["max_score"] = scores;
  if (a.json_out.empty()) {
    std::cout << result.dump() << '\n';
  } else {
    write_text(a.json_out, result.dump() + "\n");
  }
  std::cerr << "wrote " << a.out << " (" << cloud.size() << " points, " << map.labels.size() << " labels)\n";
  return 0;
}

// ---- synth / embed-synth ----

int run_synth(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
  SyntheticSpec spec = load_synthetic_spec(spec_path);
  if (seed) spec.seed = *seed;
  const SyntheticDataset dataset = generate_synthetic(spec);
  write_dataset(out, dataset);
  std::size_t total = 0;
  for (const auto& [_, clouds] : dataset.shapes) total += clouds.size();
  std::cerr << "wrote " << total << " shapes, " << dataset.manifest.labels.size() << " labels to " << out << "\n";
  return 0;
}

struct EmbedArgs {
  std::string labels, labels_file, plan = "orthonormal", out;
  std::vector<std::string> pairs;
  double cosine = 0.9;
  std::size_t dim = 64;
  std::uint64_t seed = 0;
};

int run_embed_synth(const EmbedArgs& a) {
  std::vector<std::string> labels;
  if (!a.labels_file.empty()) {
    std::ifstream in(a.labels_file);
    if (!in) throw_data("cannot open '" + a.labels_file + "'");
    std::string line;
    while (std::getline(in, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      labels.push_back(line.substr(b, line.find_last_not_of(" \t\r") - b + 1));
    }
  } else if (!a.labels.empty()) {
    labels = split_list(a.labels);
  } else {
    throw_usage("--labels or --labels-file is required");
  }
  EmbeddingPlan plan;
  if (a.plan == "paired") {
    plan.kind = EmbeddingPlan::Kind::kPaired;
    if (a.pairs.empty()) throw_usage("paired plan needs at least one --pair anchor:partner");
    for (const auto& p : a.pairs) {
      const auto colon = p.find(':');
      if (colon == std::string::npos) throw_usage("--pair expects anchor:partner, got '" + p + "'");
      plan.pairs.push_back({p.substr(0, colon), p.substr(colon + 1), a.cosine});
    }
  } else if (a.plan != "orthonormal") {
    throw_usage("unknown plan '" + a.plan + "' (expected orthonormal or paired)");
  }
  const EmbeddingTable table = synthetic_embeddings(labels, a.dim, a.seed, plan);
  write_embeddings(a.out, table);
  std::cerr << "wrote " << table.size() << " x " << table.dim() << " embeddings to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-vocabulary affordance detection on point clouds"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the point encoder against frozen label embeddings");
  train_cmd->add_option("--config", train_args.config, "JSON run config (training keys and paths)");
  train_cmd->add_option("--manifest", train_args.manifest, "Dataset manifest");
  train_cmd->add_option("--embeddings", train_args.embeddings, "OADE label embeddings");
  train_cmd->add_option("--out", train_args.out, "Output checkpoint (OADC)");
  train_cmd->add_option("--log", train_args.log, "Training log (JSON lines); default <out>.log.jsonl");
  train_cmd->add_option("--profile", train_args.profile, "Base config: desk (default) or full");
  train_cmd->add_option("--seed", train_args.seed, "Master seed");
  train_cmd->add_option("--epochs", train_args.epochs);
  train_cmd->add_option("--batch-size", train_args.batch_size);
  train_cmd->add_option("--points", train_args.points, "Points per cloud");
  train_cmd->add_option("--embed-dim", train_args.embed_dim, "Embedding dimension D");
  train_cmd->add_option("--eval-every", train_args.eval_every, "Validation cadence in epochs (0: off)");
  train_cmd->add_option("--lr", train_args.learning_rate, "Adam learning rate");
  train_cmd->add_option("--weight-decay", train_args.weight_decay);
  train_cmd->add_option("--temperature", train_args.temperature, "log-scale (default) or literal");
  train_cmd->add_option("--threads", train_args.threads, "Worker threads (default: $OPENAD_THREADS or all cores)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint; prints a metrics report as JSON");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--manifest", eval_args.manifest)->required();
  eval_cmd->add_option("--embeddings", eval_args.embeddings)->required();
  eval_cmd->add_option("--mode", eval_args.mode, "closed (default) or open");
  eval_cmd->add_option("--split", eval_args.split, "Manifest split (default test)");
  eval_cmd->add_option("--labels", eval_args.labels, "Comma-separated subset of the embedding labels");
  eval_cmd->add_option("--points", eval_args.points, "Points per cloud (default: the training value)");
  eval_cmd->add_option("--seed", eval_args.seed, "Resampling seed");
  eval_cmd->add_option("--threads", eval_args.threads);

  DetectArgs detect_args;
  auto* detect_cmd = app.add_subcommand("detect", "Label every point of a cloud; writes a coloured PLY");
  detect_cmd->add_option("--checkpoint", detect_args.checkpoint)->required();
  detect_cmd->add_option("--cloud", detect_args.cloud, "Shape file (x y z [label])")->required();
  detect_cmd->add_option("--embeddings", detect_args.embeddings)->required();
  detect_cmd->add_option("--labels", detect_args.labels, "Comma-separated labels to query (default: all)");
  detect_cmd->add_option("--out", detect_args.out, "Output PLY")->required();
  detect_cmd->add_option("--json", detect_args.json_out, "Assignment JSON path (default: stdout)");
  detect_cmd->add_option("--points", detect_args.points, "Resample to this many points first (0: keep all)");
  detect_cmd->add_option("--seed", detect_args.seed, "Upsampling seed");

  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic affordance dataset");
  synth_cmd->add_option("--spec", synth_spec, "Synthetic dataset spec (JSON)")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "Override the spec seed");

  EmbedArgs embed_args;
  auto* embed_cmd = app.add_subcommand("embed-synth", "Write synthetic label embeddings (OADE)");
  embed_cmd->add_option("--labels", embed_args.labels, "Comma-separated labels");
  embed_cmd->add_option("--labels-file", embed_args.labels_file, "One label per line");
  embed_cmd->add_option("--plan", embed_args.plan, "orthonormal (default) or paired");
  embed_cmd->add_option("--pair", embed_args.pairs, "anchor:partner, repeatable (paired plan)");
  embed_cmd->add_option("--cosine", embed_args.cosine, "Target cosine within a pair (default 0.9)");
  embed_cmd->add_option("--dim", embed_args.dim, "Embedding dimension (default 64)");
  embed_cmd->add_option("--seed", embed_args.seed);
  embed_cmd->add_option("--out", embed_args.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*detect_cmd) return run_detect(detect_args);
    if (*synth_cmd) return run_synth(synth_spec, synth_out, synth_seed);
    if (*embed_cmd) return run_embed_synth(embed_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kUsage: return kExitUsage;
      case ErrorKind::kData: return kExitData;
      case ErrorKind::kNumeric: return kExitNumeric;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
