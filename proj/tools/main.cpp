// ichdet: weakly supervised hemorrhage localization toolkit.
//
// Subcommands compose the pipeline: synth -> (window) -> attend -> detect ->
// evaluate, with optimize searching detector parameters and run driving the
// whole chain from a config file.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ichdet/bayesopt.hpp"
#include "ichdet/errors.hpp"
#include "ichdet/io.hpp"
#include "ichdet/metrics.hpp"
#include "ichdet/mil.hpp"
#include "ichdet/morphology.hpp"
#include "ichdet/pipeline.hpp"
#include "ichdet/synth.hpp"
#include "ichdet/windowing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<fs::path> list_matrix_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ichdet::io_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if ((ext == ".amap" || ext == ".csv") && entry.path().filename() != "boxes.csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ichdet::io_error("cannot open " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ichdet::format_error(path.string() + ": invalid JSON");
  return doc;
}

ichdet::SearchSpace space_from_json(const json& doc) {
  ichdet::SearchSpace space;
  if (!doc.is_array()) {
    throw ichdet::format_error("search space JSON must be an array of dimensions");
  }
  for (const auto& item : doc) {
    ichdet::Dimension dim;
    dim.name = item.at("name").get<std::string>();
    dim.lower = item.at("lower").get<double>();
    dim.upper = item.at("upper").get<double>();
    dim.log_scale = item.value("log", false);
    dim.integer = item.value("integer", false);
    space.dims.push_back(std::move(dim));
  }
  space.validate();
  return space;
}

// ----------------------------------------------------------------- synth

struct SynthArgs {
  std::string output;
  std::size_t count = 20;
  std::uint64_t seed = 0;
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t min_blobs = 1;
  std::size_t max_blobs = 3;
  double noise = 0.02;
  std::size_t bags = 0;  // when > 0, emit MIL bags instead of scenes
  std::size_t bag_k = 16;
  std::size_t bag_m = 8;
};

int run_synth(const SynthArgs& args) {
  fs::create_directories(args.output);
  json manifest;
  if (args.bags == 0) {
    ichdet::SceneConfig cfg;
    cfg.rows = args.rows;
    cfg.cols = args.cols;
    cfg.min_blobs = args.min_blobs;
    cfg.max_blobs = args.max_blobs;
    cfg.noise_amplitude = args.noise;
    cfg.seed = args.seed;
    std::vector<ichdet::BoundingBox> boxes;
    for (std::size_t i = 0; i < args.count; ++i) {
      const ichdet::Scene scene = ichdet::generate_scene(cfg, i);
      ichdet::write_matrix(scene.map, fs::path(args.output) / (scene.slice_id + ".amap"),
                           ichdet::MatrixFormat::amap);
      boxes.insert(boxes.end(), scene.boxes.begin(), scene.boxes.end());
    }
    ichdet::write_boxes(boxes, fs::path(args.output) / "boxes.csv");
    manifest = {{"kind", "scenes"},
                {"count", args.count},
                {"seed", args.seed},
                {"rows", cfg.rows},
                {"cols", cfg.cols},
                {"min_blobs", cfg.min_blobs},
                {"max_blobs", cfg.max_blobs},
                {"noise_amplitude", cfg.noise_amplitude}};
  } else {
    ichdet::BagConfig cfg;
    cfg.K = args.bag_k;
    cfg.M = args.bag_m;
    cfg.seed = args.seed;
    const auto bags = ichdet::generate_bags(cfg, args.bags, args.bags);
    for (std::size_t i = 0; i < bags.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "bag_%04zu", i);
      ichdet::save_bag(bags[i].bag, bags[i].label, fs::path(args.output) / name);
    }
    manifest = {{"kind", "bags"}, {"count", bags.size()}, {"seed", args.seed},
                {"K", cfg.K},     {"M", cfg.M}};
  }
  ichdet::atomic_write(fs::path(args.output) / "manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- window

struct WindowArgs {
  std::string input;
  std::string output;
  std::string stats;
  bool per_channel = false;
  int jobs = 1;
};

int run_window(const WindowArgs& args) {
  const auto files = list_matrix_files(args.input);
  fs::create_directories(args.output);

  std::vector<ichdet::Matrix> slices;
  slices.reserve(files.size());
  for (const auto& file : files) slices.push_back(ichdet::read_matrix(file));

  ichdet::StandardizationStats stats;
  if (!args.stats.empty() && fs::exists(args.stats)) {
    stats = ichdet::read_stats(args.stats);
  } else {
    stats = ichdet::compute_stats(slices);
    if (!args.stats.empty()) ichdet::write_stats(stats, args.stats);
  }

  std::array<ichdet::StandardizationStats, 3> channel_stats = {stats, stats, stats};
  if (args.per_channel) {
    std::vector<ichdet::Matrix> brain, subdural;
    for (const auto& slice : slices) {
      brain.push_back(ichdet::apply_window(slice, ichdet::kBrainWindow));
      subdural.push_back(ichdet::apply_window(slice, ichdet::kSubduralWindow));
    }
    channel_stats[1] = ichdet::compute_stats(brain);
    channel_stats[2] = ichdet::compute_stats(subdural);
  }

  ichdet::parallel_for_index(files.size(), args.jobs, [&](std::size_t i) {
    const auto channels = ichdet::build_input_channels(slices[i], channel_stats);
    const std::string stem = files[i].stem().string();
    const fs::path out(args.output);
    ichdet::write_matrix(channels.raw, out / (stem + "_c0.amap"),
                         ichdet::MatrixFormat::amap);
    ichdet::write_matrix(channels.brain, out / (stem + "_c1.amap"),
                         ichdet::MatrixFormat::amap);
    ichdet::write_matrix(channels.subdural, out / (stem + "_c2.amap"),
                         ichdet::MatrixFormat::amap);
  });
  std::cout << "windowed " << files.size() << " slices (mean=" << stats.mean
            << ", std=" << stats.std << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- attend

struct AttendArgs {
  std::string bags;
  std::string params;
  std::string output;
  std::string head = "attention";
  std::size_t rows = 0;
  std::size_t cols = 0;
};

int run_attend(const AttendArgs& args) {
  if (args.head != "attention" && args.head != "pooling") {
    throw UsageError("--head must be 'attention' or 'pooling'");
  }
  fs::create_directories(args.output);

  std::vector<fs::path> stems;
  for (const auto& entry : fs::directory_iterator(args.bags)) {
    if (entry.path().extension() == ".amap") {
      fs::path stem = entry.path();
      stem.replace_extension();
      stems.push_back(stem);
    }
  }
  std::sort(stems.begin(), stems.end());

  ichdet::AttentionParams params;
  ichdet::ClassifierHead head;
  if (args.head == "attention") {
    if (args.params.empty()) throw UsageError("--params is required for the attention head");
    std::tie(params, head) = ichdet::load_head_params(args.params);
  }

  for (const auto& stem : stems) {
    const auto [bag, label] = ichdet::load_bag(stem);
    const std::size_t rows = args.rows != 0 ? args.rows : 4 * bag.grid_rows;
    const std::size_t cols = args.cols != 0 ? args.cols : 4 * bag.grid_cols;
    ichdet::Matrix map(1, 1);
    if (args.head == "attention") {
      const auto weights = ichdet::gated_attention_weights(bag, params);
      map = ichdet::attention_map_from_weights(weights, bag.grid_rows,
                                               bag.grid_cols, rows, cols);
    } else {
      map = ichdet::activation_map_from_features(bag, rows, cols);
    }
    ichdet::write_matrix(map, fs::path(args.output) / (stem.stem().string() + ".amap"),
                         ichdet::MatrixFormat::amap);
  }
  std::cout << "emitted " << stems.size() << " " << args.head << " maps\n";
  return kExitOk;
}

// ------------------------------------------------------------- train-head

struct TrainArgs {
  std::string bags;
  std::string output;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 40;
  double pos_weight = 1.0;
  std::size_t attention_dim = 16;
  std::uint64_t seed = 0;
};

int run_train_head(const TrainArgs& args) {
  std::vector<ichdet::LabeledBag> dataset;
  std::vector<fs::path> stems;
  for (const auto& entry : fs::directory_iterator(args.bags)) {
    if (entry.path().extension() == ".amap") {
      fs::path stem = entry.path();
      stem.replace_extension();
      stems.push_back(stem);
    }
  }
  std::sort(stems.begin(), stems.end());
  for (const auto& stem : stems) {
    auto [bag, label] = ichdet::load_bag(stem);
    dataset.push_back({std::move(bag), label});
  }
  if (dataset.empty()) throw UsageError("no bags found in " + args.bags);

  ichdet::TrainConfig cfg;
  cfg.learning_rate = args.learning_rate;
  cfg.momentum = args.momentum;
  cfg.epochs = args.epochs;
  cfg.pos_weight = args.pos_weight;
  cfg.attention_dim = args.attention_dim;
  cfg.seed = args.seed;
  const ichdet::TrainResult result = ichdet::train_mil_head(dataset, cfg);
  if (result.single_class_warning) {
    std::cerr << "warning: training set contains a single class\n";
  }

  fs::create_directories(args.output);
  ichdet::save_head_params(result.params, result.head, args.output);
  std::string history = "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    history += std::to_string(e) + "," +
               ichdet::format_double(result.loss_history[e]) + "\n";
  }
  ichdet::atomic_write(fs::path(args.output) / "loss_history.csv", history);
  std::cout << "trained " << dataset.size() << " bags: loss "
            << result.loss_history.front() << " -> " << result.loss_history.back()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  std::string maps;
  std::string params;
  std::string output;
  int jobs = 1;
};

int run_detect(const DetectArgs& args) {
  if (!fs::exists(args.maps)) throw ichdet::io_error("no such path: " + args.maps);
  const ichdet::DetectorSettings settings = ichdet::read_detector_settings(args.params);
  std::vector<std::pair<std::string, ichdet::Matrix>> maps;
  if (fs::is_directory(args.maps)) {
    for (const auto& file : list_matrix_files(args.maps)) {
      maps.emplace_back(file.stem().string(), ichdet::read_matrix(file));
    }
  } else {
    maps.emplace_back(fs::path(args.maps).stem().string(),
                      ichdet::read_matrix(args.maps));
  }
  const auto detections =
      ichdet::detect_maps(maps, settings.params, {settings.footprint_radius}, args.jobs);
  ichdet::write_detections(detections, args.output);
  std::cout << detections.size() << " detections over " << maps.size() << " maps\n";
  return kExitOk;
}

// -------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string detections;
  std::string boxes;
  std::string output;
};

int run_evaluate(const EvaluateArgs& args) {
  const auto detections = ichdet::read_detections(args.detections);
  const auto boxes = ichdet::read_boxes(args.boxes);
  const ichdet::MetricsReport result = ichdet::evaluate_detections(detections, boxes);
  if (!args.output.empty()) ichdet::write_report_json(result, args.output);
  std::printf("TP=%lld FP=%lld FN=%lld PPV=%.2f%% Se=%.2f%% Dice=%.2f%%\n",
              result.counts.tp, result.counts.fp, result.counts.fn,
              100.0 * result.ppv, 100.0 * result.se, 100.0 * result.dice);
  return kExitOk;
}

// -------------------------------------------------------------- optimize

struct OptimizeArgs {
  std::string maps;
  std::string boxes;
  std::string output;
  std::string space;
  std::size_t budget = 60;
  std::uint64_t seed = 0;
  int footprint_radius = 1;
};

int run_optimize(const OptimizeArgs& args) {
  if (args.budget < 5) throw UsageError("--budget must be at least 5");
  const ichdet::LabeledMaps data = ichdet::load_labeled_maps(args.maps, args.boxes);
  if (data.maps.empty()) throw UsageError("no maps found in " + args.maps);

  const ichdet::SearchSpace space = args.space.empty()
                                        ? ichdet::SearchSpace::detector_default()
                                        : space_from_json(load_json(args.space));
  const ichdet::Footprint footprint{args.footprint_radius};
  const auto objective = ichdet::make_dice_objective(data, space, footprint);

  ichdet::OptimizeConfig config;
  config.budget = args.budget;
  config.seed = args.seed;
  const ichdet::OptimizeResult result = ichdet::optimize_detector(objective, space, config);

  fs::create_directories(args.output);
  ichdet::write_history_csv(result.history, space, fs::path(args.output) / "history.csv");
  const ichdet::DetectorParams best =
      ichdet::detector_params_from_point(space, result.best.point);
  ichdet::write_detector_settings({best, args.footprint_radius},
                                  fs::path(args.output) / "best_params.json");
  std::printf("best dice %.4f at h=%g T=%g d=%g (%zu trials)\n", result.best.objective,
              best.h, best.T, best.d, result.history.size());
  return kExitOk;
}

// ------------------------------------------------------------------- run

struct RunArgs {
  std::string config;
  std::string maps;
  std::string boxes;
  std::string output;
  std::int64_t seed = -1;
  std::int64_t budget = -1;
  int jobs = 1;
};

int run_pipeline(const RunArgs& args) {
  json cfg = load_json(args.config);
  if (!cfg.is_object()) throw ichdet::format_error("run config must be a JSON object");

  // Flag overrides.
  if (!args.maps.empty()) cfg["maps"] = args.maps;
  if (!args.boxes.empty()) cfg["boxes"] = args.boxes;
  if (!args.output.empty()) cfg["output"] = args.output;
  if (args.seed >= 0) cfg["seed"] = args.seed;
  if (args.budget >= 0) cfg["optimize"]["budget"] = args.budget;

  const std::uint64_t seed = cfg.value("seed", 0);
  const int footprint_radius = cfg.value("footprint_radius", 1);
  const fs::path output = cfg.value("output", "out");
  fs::create_directories(output);

  // Optional windowing stage.
  if (cfg.contains("window")) {
    const auto& w = cfg["window"];
    WindowArgs wargs;
    wargs.input = w.at("input").get<std::string>();
    wargs.output = w.at("output").get<std::string>();
    wargs.stats = w.value("stats", std::string{});
    run_window(wargs);
  }

  // Optional attention-map stage.
  std::string maps_dir = cfg.value("maps", "");
  if (cfg.contains("attend")) {
    const auto& a = cfg["attend"];
    AttendArgs aargs;
    aargs.bags = a.at("bags").get<std::string>();
    aargs.params = a.value("params", std::string{});
    aargs.output = a.at("output").get<std::string>();
    aargs.head = cfg.value("head", "attention");
    aargs.rows = a.value("rows", 0);
    aargs.cols = a.value("cols", 0);
    run_attend(aargs);
    maps_dir = aargs.output;
  }
  if (maps_dir.empty()) throw UsageError("config needs 'maps' or an attend stage");
  const std::string boxes_csv = cfg.at("boxes").get<std::string>();

  const bool wants_optimize = cfg.contains("detector") && cfg["detector"].is_string() &&
                              cfg["detector"].get<std::string>() == "optimize";
  if (cfg.contains("detector") && cfg["detector"].is_object() && cfg.contains("optimize")) {
    throw UsageError(
        "config is ambiguous: both fixed detector params and an optimize block "
        "are present");
  }
  if (cfg.contains("detector") && !cfg["detector"].is_object() && !wants_optimize) {
    throw UsageError("config 'detector' must be an object or \"optimize\"");
  }
  if (!cfg.contains("detector")) throw UsageError("config needs a 'detector' entry");

  const ichdet::LabeledMaps data = ichdet::load_labeled_maps(maps_dir, boxes_csv);
  ichdet::DetectorParams params;
  std::vector<std::pair<std::string, ichdet::Matrix>> eval_maps;

  if (wants_optimize) {
    const json opt = cfg.value("optimize", json::object());
    const double tuning_fraction = opt.value("tuning_fraction", 0.4);
    const std::size_t budget = opt.value("budget", 60);
    const ichdet::SearchSpace space = opt.contains("space")
                                          ? space_from_json(opt["space"])
                                          : ichdet::SearchSpace::detector_default();

    ichdet::LabeledMaps tuning;
    for (const auto& [slice_id, map] : data.maps) {
      if (ichdet::in_tuning_split(slice_id, tuning_fraction, seed)) {
        tuning.maps.emplace_back(slice_id, map);
        const auto it = data.boxes.find(slice_id);
        if (it != data.boxes.end()) tuning.boxes[slice_id] = it->second;
      } else {
        eval_maps.emplace_back(slice_id, map);
      }
    }
    if (tuning.maps.empty() || eval_maps.empty()) {
      throw UsageError("tuning split left one side empty; adjust tuning_fraction");
    }

    const auto objective =
        ichdet::make_dice_objective(tuning, space, ichdet::Footprint{footprint_radius});
    ichdet::OptimizeConfig config;
    config.budget = budget;
    config.seed = seed;
    const ichdet::OptimizeResult result =
        ichdet::optimize_detector(objective, space, config);
    params = ichdet::detector_params_from_point(space, result.best.point);
    ichdet::write_history_csv(result.history, space, output / "history.csv");
    ichdet::write_detector_settings({params, footprint_radius},
                                    output / "best_params.json");
  } else {
    const json& d = cfg.at("detector");
    params.h = d.at("h").get<double>();
    params.T = d.at("T").get<double>();
    params.d = d.at("d").get<double>();
    params.validate();
    eval_maps = data.maps;
  }

  const auto detections =
      ichdet::detect_maps(eval_maps, params, {footprint_radius}, args.jobs);
  ichdet::write_detections(detections, output / "detections.json");

  std::vector<ichdet::BoundingBox> eval_boxes;
  for (const auto& [slice_id, map] : eval_maps) {
    const auto it = data.boxes.find(slice_id);
    if (it != data.boxes.end()) {
      eval_boxes.insert(eval_boxes.end(), it->second.begin(), it->second.end());
    }
  }
  const ichdet::MetricsReport result = ichdet::evaluate_detections(detections, eval_boxes);
  ichdet::write_report_json(result, output / "report.json");
  std::printf("evaluated %zu slices: TP=%lld FP=%lld FN=%lld Dice=%.2f%%\n",
              eval_maps.size(), result.counts.tp, result.counts.fp, result.counts.fn,
              100.0 * result.dice);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weakly supervised hemorrhage localization toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate synthetic scenes or bags");
  synth->add_option("--output", synth_args.output, "output directory")->required();
  synth->add_option("--count", synth_args.count, "number of scenes");
  synth->add_option("--seed", synth_args.seed, "RNG seed");
  synth->add_option("--rows", synth_args.rows, "scene rows");
  synth->add_option("--cols", synth_args.cols, "scene cols");
  synth->add_option("--min-blobs", synth_args.min_blobs, "minimum blob count");
  synth->add_option("--max-blobs", synth_args.max_blobs, "maximum blob count");
  synth->add_option("--noise", synth_args.noise, "uniform noise amplitude");
  synth->add_option("--bags", synth_args.bags,
                    "emit this many positive and negative MIL bags instead");
  synth->add_option("--bag-k", synth_args.bag_k, "positions per bag");
  synth->add_option("--bag-m", synth_args.bag_m, "embedding dimension");

  WindowArgs window_args;
  auto* window = app.add_subcommand("window", "build 3-channel standardized inputs");
  window->add_option("--input", window_args.input, "directory of HU matrices")->required();
  window->add_option("--output", window_args.output, "output directory")->required();
  window->add_option("--stats", window_args.stats,
                     "stats JSON (read if present, else computed and written)");
  window->add_flag("--per-channel-stats", window_args.per_channel,
                   "standardize each channel with its own stats");
  window->add_option("--jobs", window_args.jobs, "parallel workers");

  AttendArgs attend_args;
  auto* attend = app.add_subcommand("attend", "bags + params -> attention maps");
  attend->add_option("--bags", attend_args.bags, "directory of bag files")->required();
  attend->add_option("--params", attend_args.params, "head parameter directory");
  attend->add_option("--output", attend_args.output, "output directory")->required();
  attend->add_option("--head", attend_args.head, "attention|pooling");
  attend->add_option("--rows", attend_args.rows, "target rows (default 4x grid)");
  attend->add_option("--cols", attend_args.cols, "target cols (default 4x grid)");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train-head", "train the gated attention head");
  train->add_option("--bags", train_args.bags, "directory of bag files")->required();
  train->add_option("--output", train_args.output, "parameter output directory")
      ->required();
  train->add_option("--lr", train_args.learning_rate, "learning rate");
  train->add_option("--momentum", train_args.momentum, "momentum");
  train->add_option("--epochs", train_args.epochs, "epochs");
  train->add_option("--pos-weight", train_args.pos_weight, "positive class weight");
  train->add_option("--attention-dim", train_args.attention_dim, "attention dim L");
  train->add_option("--seed", train_args.seed, "RNG seed");

  DetectArgs detect_args;
  auto* detect = app.add_subcommand("detect", "find peaks in attention maps");
  detect->add_option("--maps", detect_args.maps, "map file or directory")->required();
  detect->add_option("--params", detect_args.params, "detector params JSON")->required();
  detect->add_option("--output", detect_args.output, "detections JSON")->required();
  detect->add_option("--jobs", detect_args.jobs, "parallel workers");

  EvaluateArgs evaluate_args;
  auto* evaluate = app.add_subcommand("evaluate", "score detections against boxes");
  evaluate->add_option("--detections", evaluate_args.detections, "detections JSON")
      ->required();
  evaluate->add_option("--boxes", evaluate_args.boxes, "boxes CSV")->required();
  evaluate->add_option("--output", evaluate_args.output, "report JSON");

  OptimizeArgs optimize_args;
  auto* optimize = app.add_subcommand("optimize", "Bayesian-optimize detector params");
  optimize->add_option("--maps", optimize_args.maps, "tuning maps directory")->required();
  optimize->add_option("--boxes", optimize_args.boxes, "tuning boxes CSV")->required();
  optimize->add_option("--output", optimize_args.output, "output directory")->required();
  optimize->add_option("--budget", optimize_args.budget, "total evaluations");
  optimize->add_option("--seed", optimize_args.seed, "RNG seed");
  optimize->add_option("--space", optimize_args.space, "search-space JSON");
  optimize->add_option("--footprint", optimize_args.footprint_radius,
                       "dilation footprint radius");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "end-to-end pipeline from a config file");
  run->add_option("--config", run_args.config, "pipeline config JSON")->required();
  run->add_option("--maps", run_args.maps, "override config maps directory");
  run->add_option("--boxes", run_args.boxes, "override config boxes CSV");
  run->add_option("--output", run_args.output, "override config output directory");
  run->add_option("--seed", run_args.seed, "override config seed");
  run->add_option("--budget", run_args.budget, "override optimize budget");
  run->add_option("--jobs", run_args.jobs, "parallel workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (window->parsed()) return run_window(window_args);
    if (attend->parsed()) return run_attend(attend_args);
    if (train->parsed()) return run_train_head(train_args);
    if (detect->parsed()) return run_detect(detect_args);
    if (evaluate->parsed()) return run_evaluate(evaluate_args);
    if (optimize->parsed()) return run_optimize(optimize_args);
    if (run->parsed()) return run_pipeline(run_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ichdet::format_error& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ichdet::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ichdet::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
