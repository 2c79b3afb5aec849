// Command-line front end: stats, train, eval, infer, benchmark.
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "steelseg/augment.hpp"
#include "steelseg/config.hpp"
#include "steelseg/dataset.hpp"
#include "steelseg/errors.hpp"
#include "steelseg/eval.hpp"
#include "steelseg/image.hpp"
#include "steelseg/model/deeplab.hpp"
#include "steelseg/plot.hpp"
#include "steelseg/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace steelseg;

namespace {

constexpr int kExitUsage = 64;    // bad arguments / configuration
constexpr int kExitData = 65;     // missing or corrupt input data
constexpr int kExitRuntime = 70;  // internal failure

struct CliOptions {
  std::string config_path;
  RunConfig config;

  // shared overrides
  std::string data_root, output_dir, backbone, variant;
  int epochs = -1, batch_size = -1, height = -1, width = -1, num_classes = -1;
  double lr = -1.0;
  int64_t seed = -1;
  bool augment_on = false, augment_off = false;
  bool resume = false;
  bool no_eval = false;

  // eval / infer
  std::string checkpoint;
  std::string split = "eval";
  bool original_size = false;
  int64_t limit = 0;
  std::string out_dir = ".";
  std::string out_json;
  std::vector<std::string> images;

  // benchmark
  std::vector<std::string> bench_backbones;
  int orig_height = 256, orig_width = 1600;
  int train_batch = 16, eval_batch = 1;
  int units = 30, warmup = 2;
  double max_seconds = 120.0;
};

RunConfig resolve_config(const CliOptions& o) {
  RunConfig c = o.config_path.empty() ? default_run_config() : load_run_config(o.config_path);
  if (!o.data_root.empty()) c.data_root = o.data_root;
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  if (!o.backbone.empty()) c.model.backbone = o.backbone;
  if (!o.variant.empty()) c.model.variant = variant_from_string(o.variant);
  if (o.num_classes >= 0) c.model.num_classes = o.num_classes;
  if (o.epochs >= 0) c.epochs = o.epochs;
  if (o.batch_size >= 0) c.train.batch_size = o.batch_size;
  if (o.height >= 0) c.train.target_h = o.height;
  if (o.width >= 0) c.train.target_w = o.width;
  if (o.lr >= 0) c.train.sgd.lr = o.lr;
  if (o.seed >= 0) {
    c.train.seed = static_cast<uint64_t>(o.seed);
    c.split_seed = static_cast<uint64_t>(o.seed);
  }
  if (o.augment_on) c.train.augment = true;
  if (o.augment_off) c.train.augment = false;
  return c;
}

void require_data(const RunConfig& c) {
  if (c.data_root.empty())
    throw ValidationError(std::string("no data root given: use --data-root, a config file, or $") +
                          kDataRootEnv);
  if (!fs::is_directory(c.image_path()))
    throw ValidationError("image directory not found: " + c.image_path());
  if (!fs::is_regular_file(c.csv_path()))
    throw ValidationError("annotation csv not found: " + c.csv_path());
}

DatasetIndex load_split_dataset(const RunConfig& c) {
  require_data(c);
  DatasetIndex index = load_annotations(c.csv_path(), c.image_path());
  if (index.records.empty()) throw DataError("no images found in " + c.image_path());
  return split_dataset(index, c.split_ratios, c.split_seed);
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "eval") return Split::kEval;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + s + "' (train|eval|test)");
}

json eval_report_json(const eval::EvalReport& r, const std::string& split, bool original) {
  json per_class, support;
  for (int k = 0; k < 4; ++k) {
    per_class[std::to_string(k + 1)] = r.class_iou[static_cast<size_t>(k)];
    support[std::to_string(k + 1)] = r.class_support[static_cast<size_t>(k)];
  }
  return json{{"split", split},
              {"original_size", original},
              {"sample_count", r.sample_count},
              {"mean_iou", r.mean_iou},
              {"per_class_iou", per_class},
              {"class_support", support},
              {"histogram", r.histogram}};
}

void print_eval_report(const eval::EvalReport& r) {
  std::printf("samples: %" PRId64 "\n", r.sample_count);
  std::printf("mean IoU: %.4f\n", r.mean_iou);
  for (int k = 0; k < 4; ++k)
    std::printf("  class %d IoU: %.4f  (in %" PRId64 " samples)\n", k + 1,
                r.class_iou[static_cast<size_t>(k)], r.class_support[static_cast<size_t>(k)]);
}

void write_eval_outputs(const eval::EvalReport& report, const std::string& dir,
                        const std::string& split_name, bool original) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "eval.json");
    out << eval_report_json(report, split_name, original).dump(2) << "\n";
  }
  eval::write_report_csv((fs::path(dir) / "per_sample_iou.csv").string(), report);
  plot_iou_histogram(report.histogram, "IoU distribution (" + split_name + ")",
                     (fs::path(dir) / "iou_histogram.png").string());
}

// ---- stats ---------------------------------------------------------------

int cmd_stats(const CliOptions& o) {
  RunConfig c = resolve_config(o);
  require_data(c);

  DatasetIndex index = load_annotations(c.csv_path(), c.image_path());
  if (index.records.empty()) throw DataError("no images found in " + c.image_path());

  std::vector<LoadIssue> issues;
  DefectStats stats = compute_stats(index, &issues);

  std::printf("images: %" PRId64 "\n", stats.image_count);
  std::printf("images with defects: %" PRId64 "\n", stats.images_with_defect);
  std::printf("defect regions: %" PRId64 "\n", stats.total_regions);
  std::printf("%-7s %10s %12s %14s %12s\n", "class", "regions", "count share", "area px",
              "area share");
  for (int k = 0; k < 4; ++k) {
    std::printf("%-7d %10" PRId64 " %11.2f%% %14" PRId64 " %11.2f%%\n", k + 1,
                stats.region_count[static_cast<size_t>(k)],
                100.0 * stats.count_share[static_cast<size_t>(k)],
                stats.area_pixels[static_cast<size_t>(k)],
                100.0 * stats.area_share[static_cast<size_t>(k)]);
  }
  for (int k = 0; k < 4; ++k) {
    std::printf("class %d segments-per-image:", k + 1);
    for (const auto& [segments, images] : stats.segments_per_image[static_cast<size_t>(k)])
      std::printf(" %d:%" PRId64, segments, images);
    std::printf("\n");
  }
  for (const auto& issue : index.issues)
    std::fprintf(stderr, "[load] %s: %s\n", issue.image_id.c_str(), issue.message.c_str());
  for (const auto& issue : issues)
    std::fprintf(stderr, "[stats] %s: %s\n", issue.image_id.c_str(), issue.message.c_str());

  if (!o.out_json.empty()) {
    json per_class = json::array();
    for (int k = 0; k < 4; ++k) {
      json hist;
      for (const auto& [segments, images] : stats.segments_per_image[static_cast<size_t>(k)])
        hist[std::to_string(segments)] = images;
      per_class.push_back({{"class", k + 1},
                           {"regions", stats.region_count[static_cast<size_t>(k)]},
                           {"count_share", stats.count_share[static_cast<size_t>(k)]},
                           {"area_pixels", stats.area_pixels[static_cast<size_t>(k)]},
                           {"area_share", stats.area_share[static_cast<size_t>(k)]},
                           {"segments_per_image", hist}});
    }
    json out{{"images", stats.image_count},
             {"images_with_defect", stats.images_with_defect},
             {"regions", stats.total_regions},
             {"per_class", per_class},
             {"load_issues", index.issues.size() + issues.size()}};
    std::ofstream f(o.out_json);
    if (!f) throw DataError("cannot write " + o.out_json);
    f << out.dump(2) << "\n";
  }
  return 0;
}

// ---- train ---------------------------------------------------------------

std::string find_resume_checkpoint(const std::string& dir) {
  if (fs::is_regular_file(fs::path(dir) / "last.ckpt"))
    return (fs::path(dir) / "last.ckpt").string();
  int best_epoch = -1;
  std::string best;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      int epoch = -1;
      if (std::sscanf(name.c_str(), "ckpt_epoch%d.ckpt", &epoch) == 1 && epoch > best_epoch) {
        best_epoch = epoch;
        best = entry.path().string();
      }
    }
  }
  if (best.empty()) throw DataError("no checkpoint to resume from in " + dir);
  return best;
}

int cmd_train(const CliOptions& o) {
  RunConfig c = resolve_config(o);
  DatasetIndex index = load_split_dataset(c);

  if (c.train.augment) {
    bool has_shares = false;
    for (double p : c.train.policy.class_share) has_shares = has_shares || p > 0.0;
    if (!has_shares) {
      std::printf("deriving augmentation policy from train-split statistics...\n");
      DefectStats stats = compute_stats(index, nullptr, Split::kTrain);
      const auto derived = derive_policy(stats);
      c.train.policy.class_share = derived.class_share;
    }
    c.train.policy.crop_h = std::min(c.train.policy.crop_h, c.train.target_h);
    c.train.policy.crop_w = std::min(c.train.policy.crop_w, c.train.target_w);
  }

  fs::create_directories(c.output_dir);
  // Snapshot the fully resolved config before any long work starts.
  save_run_config(c, (fs::path(c.output_dir) / "config.json").string());

  std::unique_ptr<train::Trainer> trainer;
  std::vector<train::LossRecord> records;
  if (o.resume) {
    const std::string path = find_resume_checkpoint(c.output_dir);
    std::printf("resuming from %s\n", path.c_str());
    trainer = train::Trainer::load_checkpoint(path, c.model.num_classes);
    const std::string loss_path = (fs::path(c.output_dir) / "loss.csv").string();
    if (fs::is_regular_file(loss_path)) {
      for (const auto& r : train::read_loss_csv(loss_path))
        if (r.step <= trainer->global_step()) records.push_back(r);
    }
  } else {
    trainer = std::make_unique<train::Trainer>(c.model, c.train, c.train.seed);
  }
  trainer->attach_data(index);

  const std::string loss_path = (fs::path(c.output_dir) / "loss.csv").string();
  double best_miou = -1.0;
  const auto train_count = index.split_indices(Split::kTrain).size();
  std::printf("training %s/%s on %zu samples (%d epochs, batch %d, lr %g)\n",
              c.model.backbone.c_str(), to_string(c.model.variant).c_str(), train_count,
              c.epochs, c.train.batch_size, c.train.sgd.lr);

  bool run_eval = !o.no_eval;
  if (run_eval && index.split_indices(Split::kEval).empty()) {
    std::fprintf(stderr, "eval split is empty; skipping evaluation\n");
    run_eval = false;
  }

  while (trainer->epoch() < c.epochs) {
    if (!trainer->epoch_open()) trainer->begin_epoch();
    const int epoch = trainer->epoch();
    while (auto record = trainer->step()) {
      records.push_back(*record);
      if (record->step % 10 == 0 || record->step == 1)
        std::printf("epoch %d step %" PRId64 " loss %.6f lr %g\n", record->epoch, record->step,
                    record->loss, record->lr);
      if (c.checkpoint_every_steps > 0 && record->step % c.checkpoint_every_steps == 0) {
        trainer->save_checkpoint((fs::path(c.output_dir) / "last.ckpt").string());
        train::write_loss_csv(loss_path, records);
      }
    }
    char name[48];
    std::snprintf(name, sizeof(name), "ckpt_epoch%d.ckpt", epoch);
    const std::string epoch_ckpt = (fs::path(c.output_dir) / name).string();
    trainer->save_checkpoint(epoch_ckpt);
    trainer->save_checkpoint((fs::path(c.output_dir) / "last.ckpt").string());
    train::write_loss_csv(loss_path, records);

    if (run_eval) {
      eval::EvalOptions eopt;
      eopt.target_h = c.train.target_h;
      eopt.target_w = c.train.target_w;
      eopt.batch_size = c.eval_batch;
      auto report = eval::evaluate_split(trainer->model(), index, Split::kEval, eopt);
      std::printf("epoch %d eval mean IoU %.4f over %" PRId64 " samples\n", epoch,
                  report.mean_iou, report.sample_count);
      if (report.mean_iou > best_miou) {
        best_miou = report.mean_iou;
        fs::copy_file(epoch_ckpt, fs::path(c.output_dir) / "best.ckpt",
                      fs::copy_options::overwrite_existing);
      }
    }
  }

  plot_loss_curve(records, (fs::path(c.output_dir) / "loss_curve.png").string());
  if (run_eval) {
    eval::EvalOptions eopt;
    eopt.target_h = c.train.target_h;
    eopt.target_w = c.train.target_w;
    eopt.batch_size = c.eval_batch;
    auto report = eval::evaluate_split(trainer->model(), index, Split::kEval, eopt);
    print_eval_report(report);
    write_eval_outputs(report, c.output_dir, "eval", false);
  }
  for (const auto& issue : trainer->stream_issues())
    std::fprintf(stderr, "[train] %s: %s\n", issue.image_id.c_str(), issue.message.c_str());
  std::printf("run directory: %s\n", c.output_dir.c_str());
  return 0;
}

// ---- eval ----------------------------------------------------------------

int cmd_eval(const CliOptions& o) {
  if (o.checkpoint.empty()) throw ValidationError("--checkpoint is required");
  auto trainer = train::Trainer::load_checkpoint(o.checkpoint, o.num_classes);
  const auto& mcfg = trainer->model_config();
  if (!o.backbone.empty() && o.backbone != mcfg.backbone)
    throw ValidationError("checkpoint was trained with backbone '" + mcfg.backbone +
                          "', not '" + o.backbone + "'");
  if (!o.variant.empty() && variant_from_string(o.variant) != mcfg.variant)
    throw ValidationError("checkpoint variant mismatch: checkpoint has '" +
                          to_string(mcfg.variant) + "'");

  RunConfig c = resolve_config(o);
  DatasetIndex index = load_split_dataset(c);

  eval::EvalOptions eopt;
  eopt.target_h = o.height > 0 ? o.height : trainer->options().target_h;
  eopt.target_w = o.width > 0 ? o.width : trainer->options().target_w;
  eopt.batch_size = c.eval_batch;
  eopt.original_size = o.original_size;
  eopt.limit = o.limit;

  const Split split = parse_split(o.split);
  auto report = eval::evaluate_split(trainer->model(), index, split, eopt);
  print_eval_report(report);
  write_eval_outputs(report, o.out_dir, o.split, o.original_size);
  std::printf("wrote eval.json, per_sample_iou.csv, iou_histogram.png to %s\n",
              o.out_dir.c_str());
  return 0;
}

// ---- infer ---------------------------------------------------------------

int cmd_infer(const CliOptions& o) {
  if (o.checkpoint.empty()) throw ValidationError("--checkpoint is required");
  if (o.images.empty()) throw ValidationError("no input images given");
  auto trainer = train::Trainer::load_checkpoint(o.checkpoint, o.num_classes);
  SegModel& model = trainer->model();
  const auto& spec = model.backbone_spec();
  const int th = o.height > 0 ? o.height : trainer->options().target_h;
  const int tw = o.width > 0 ? o.width : trainer->options().target_w;

  fs::create_directories(o.out_dir);
  json results = json::array();
  int failures = 0;

  for (const auto& path : o.images) {
    auto image = load_image(path);
    if (!image) {
      std::fprintf(stderr, "[infer] skipping unreadable image: %s\n", path.c_str());
      ++failures;
      continue;
    }
    ImageU8 working = o.original_size ? *image : resize_image(*image, th, tw);
    nn::Tensor input = image_to_tensor(working, spec.input_mean, spec.input_std);
    LabelMask pred = eval::predict_mask(model, input);

    const std::string stem = fs::path(path).stem().string();
    const std::string mask_path = (fs::path(o.out_dir) / (stem + "_mask.png")).string();
    const std::string overlay_path = (fs::path(o.out_dir) / (stem + "_overlay.png")).string();
    save_mask_png(pred, mask_path);
    save_image(overlay_mask(working, pred, 0.5), overlay_path);

    std::array<int64_t, 5> counts{};
    for (uint8_t v : pred.labels) ++counts[v];
    json jcounts;
    for (int k = 0; k < 5; ++k) jcounts[std::to_string(k)] = counts[static_cast<size_t>(k)];
    results.push_back({{"image", path},
                       {"height", pred.height},
                       {"width", pred.width},
                       {"class_pixel_counts", jcounts},
                       {"mask", mask_path},
                       {"overlay", overlay_path}});
    std::printf("%s -> %dx%d mask, defect pixels %" PRId64 "\n", path.c_str(), pred.height,
                pred.width,
                counts[1] + counts[2] + counts[3] + counts[4]);
  }

  std::ofstream out(fs::path(o.out_dir) / "inference.json");
  out << results.dump(2) << "\n";
  if (results.empty()) throw DataError("no readable input images");
  if (failures > 0)
    std::fprintf(stderr, "[infer] %d image(s) skipped\n", failures);
  return 0;  // skipped files are reported, not fatal
}

// ---- benchmark -----------------------------------------------------------

int cmd_benchmark(const CliOptions& o) {
  eval::BenchmarkOptions bopt;
  bopt.target_h = o.height > 0 ? o.height : 256;
  bopt.target_w = o.width > 0 ? o.width : 256;
  bopt.original_h = o.orig_height;
  bopt.original_w = o.orig_width;
  bopt.train_batch = o.train_batch;
  bopt.eval_batch = o.eval_batch;
  bopt.min_units = o.units;
  bopt.warmup = o.warmup;
  bopt.max_seconds_per_section = o.max_seconds;

  std::vector<eval::BenchmarkReport> rows;
  if (!o.checkpoint.empty()) {
    auto trainer = train::Trainer::load_checkpoint(o.checkpoint, o.num_classes);
    rows.push_back(eval::speed_benchmark(trainer->model(), bopt));
  } else {
    RunConfig c = resolve_config(o);
    std::vector<std::string> backbones = o.bench_backbones;
    if (backbones.empty()) backbones.push_back(c.model.backbone);
    for (const auto& name : backbones) {
      ModelConfig mcfg = c.model;
      mcfg.backbone = name;
      auto model = build_model(mcfg, false, 1234);
      rows.push_back(eval::speed_benchmark(*model, bopt));
    }
  }

  std::printf("hardware: %s\n", rows.front().hardware.c_str());
  std::printf("batch sizes: train %d, eval %d\n", rows.front().train_batch,
              rows.front().eval_batch);
  std::printf("%-16s %-14s %-22s %-26s %-26s\n", "backbone", "variant", "train it/s",
              "eval img/s (resized)", "eval img/s (original)");
  for (const auto& r : rows) {
    auto cell = [](const eval::ThroughputResult& t) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.4g +/- %.2g%s", t.mean_per_second, t.std_per_second,
                    t.data_limited ? " (limited)" : "");
      return std::string(buf);
    };
    std::printf("%-16s %-14s %-22s %-26s %-26s\n", r.backbone.c_str(), r.variant.c_str(),
                cell(r.train_iterations).c_str(), cell(r.eval_resized).c_str(),
                cell(r.eval_original).c_str());
  }

  if (!o.out_json.empty()) {
    auto result_json = [](const eval::ThroughputResult& t) {
      return json{{"per_second", t.mean_per_second},
                  {"std", t.std_per_second},
                  {"measured_units", t.measured_units},
                  {"data_limited", t.data_limited}};
    };
    json jrows = json::array();
    for (const auto& r : rows)
      jrows.push_back({{"backbone", r.backbone},
                       {"variant", r.variant},
                       {"train_iterations", result_json(r.train_iterations)},
                       {"eval_resized", result_json(r.eval_resized)},
                       {"eval_original", result_json(r.eval_original)}});
    json out{{"hardware", rows.front().hardware},
             {"train_batch", rows.front().train_batch},
             {"eval_batch", rows.front().eval_batch},
             {"rows", jrows}};
    std::ofstream f(o.out_json);
    if (!f) throw DataError("cannot write " + o.out_json);
    f << out.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steel surface defect segmentation toolkit"};
  app.require_subcommand(1);
  CliOptions o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run config file");
    sub->add_option("--data-root", o.data_root, "dataset root directory");
    sub->add_option("--seed", o.seed, "seed override (split + training)");
  };
  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--backbone", o.backbone,
                    "backbone (resnet101|densenet201|efficientnet_b1|tiny)");
    sub->add_option("--variant", o.variant, "model variant (baseline|deeplabv3plus)");
    sub->add_option("--num-classes", o.num_classes, "output classes incl. background");
  };

  auto* stats = app.add_subcommand("stats", "dataset statistics and fragmentation table");
  add_common(stats);
  stats->add_option("--out", o.out_json, "write the stats report JSON here");

  auto* train_cmd = app.add_subcommand("train", "train a segmentation model");
  add_common(train_cmd);
  add_model_flags(train_cmd);
  train_cmd->add_option("--output-dir", o.output_dir, "run directory");
  train_cmd->add_option("--epochs", o.epochs, "number of epochs");
  train_cmd->add_option("--batch-size", o.batch_size, "train batch size");
  train_cmd->add_option("--height", o.height, "train/eval image height");
  train_cmd->add_option("--width", o.width, "train/eval image width");
  train_cmd->add_option("--lr", o.lr, "learning rate");
  train_cmd->add_flag("--augment", o.augment_on, "enable weighted random augmentation");
  train_cmd->add_flag("--no-augment", o.augment_off, "disable augmentation");
  train_cmd->add_flag("--resume", o.resume, "resume from the latest checkpoint");
  train_cmd->add_flag("--no-eval", o.no_eval, "skip eval-split evaluation");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_common(eval_cmd);
  add_model_flags(eval_cmd);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--split", o.split, "train|eval|test (default eval)");
  eval_cmd->add_option("--height", o.height, "eval image height");
  eval_cmd->add_option("--width", o.width, "eval image width");
  eval_cmd->add_option("--limit", o.limit, "evaluate at most N samples");
  eval_cmd->add_option("--out-dir", o.out_dir, "where to write report files");
  eval_cmd->add_flag("--original-size", o.original_size, "evaluate at native resolution");

  auto* infer = app.add_subcommand("infer", "run inference on image files");
  infer->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  infer->add_option("--out-dir", o.out_dir, "output directory");
  infer->add_option("--height", o.height, "working height (resized mode)");
  infer->add_option("--width", o.width, "working width (resized mode)");
  infer->add_option("--num-classes", o.num_classes, "expected class count");
  infer->add_flag("--original-size", o.original_size, "predict at native resolution");
  infer->add_option("images", o.images, "input image files")->required();

  auto* bench = app.add_subcommand("benchmark", "throughput table (train + eval modes)");
  add_common(bench);
  add_model_flags(bench);
  bench->add_option("--bench-backbone", o.bench_backbones,
                    "benchmark these backbones (repeatable)");
  bench->add_option("--checkpoint", o.checkpoint, "benchmark this checkpoint's model");
  bench->add_option("--height", o.height, "train/eval resized height");
  bench->add_option("--width", o.width, "train/eval resized width");
  bench->add_option("--orig-height", o.orig_height, "original-size height");
  bench->add_option("--orig-width", o.orig_width, "original-size width");
  bench->add_option("--train-batch", o.train_batch, "train batch size");
  bench->add_option("--eval-batch", o.eval_batch, "eval batch size");
  bench->add_option("--units", o.units, "timed units per section");
  bench->add_option("--warmup", o.warmup, "warmup iterations (excluded)");
  bench->add_option("--max-seconds", o.max_seconds, "time cap per section");
  bench->add_option("--out", o.out_json, "write the report JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (stats->parsed()) return cmd_stats(o);
    if (train_cmd->parsed()) return cmd_train(o);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (infer->parsed()) return cmd_infer(o);
    if (bench->parsed()) return cmd_benchmark(o);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
