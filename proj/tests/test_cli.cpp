// End-to-end tests that drive the installed binary like a user would.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "json.hpp"
#include "steelseg/dataset.hpp"
#include "steelseg/image.hpp"
#include "steelseg/train.hpp"

using namespace steelseg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CmdResult run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path();
  const fs::path out = dir / ("cli_out_" + std::to_string(::getpid()) + "_" +
                              std::to_string(counter));
  const fs::path err = dir / ("cli_err_" + std::to_string(::getpid()) + "_" +
                              std::to_string(counter));
  ++counter;

  std::string cmd = env;
  if (!cmd.empty()) cmd += ' ';
  cmd += std::string(STEELSEG_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());

  CmdResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out);
  result.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return result;
}

json parse_file(const fs::path& p) {
  REQUIRE(fs::is_regular_file(p));
  return json::parse(slurp(p));
}

// Shared dataset: 8 images, built once per binary run.
const fs::path& dataset_root() {
  static const fs::path root = [] {
    fs::path r = fixtures::fresh_dir("clidata");
    fixtures::write_dataset(r, 8, 32, 32, 1234);
    return r;
  }();
  return root;
}

std::string data_args() { return "--data-root " + dataset_root().string(); }

// A quick training run shared by the eval/infer/resume cases.
const fs::path& trained_run_dir() {
  static const fs::path dir = [] {
    fs::path d = fixtures::fresh_dir("clirun");
    auto r = run_cli("train " + data_args() + " --backbone tiny --epochs 2 --batch-size 2" +
                     " --height 32 --width 32 --seed 5 --output-dir " + d.string());
    REQUIRE(r.exit_code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("help is free and nonsense is a usage error") {
  auto help = run_cli("--help");
  CHECK(help.exit_code == 0);
  for (const char* sub : {"stats", "train", "eval", "infer", "benchmark"})
    CHECK(help.out.find(sub) != std::string::npos);

  CHECK(run_cli("frobnicate").exit_code == 64);
  CHECK(run_cli("eval").exit_code == 64);  // missing required --checkpoint
}

TEST_CASE("stats reproduces the library numbers and exits cleanly") {
  const fs::path out_json = fixtures::fresh_dir("clistats") / "stats.json";
  auto r = run_cli("stats " + data_args() + " --out " + out_json.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("images: 8") != std::string::npos);

  // recompute in-process and compare the report contents
  auto index = load_annotations((dataset_root() / "train.csv").string(),
                                (dataset_root() / "train_images").string());
  auto stats = compute_stats(index);

  auto j = parse_file(out_json);
  CHECK(j["images"].get<int64_t>() == stats.image_count);
  CHECK(j["images_with_defect"].get<int64_t>() == stats.images_with_defect);
  CHECK(j["regions"].get<int64_t>() == stats.total_regions);
  REQUIRE(j["per_class"].size() == 4);
  for (int k = 0; k < 4; ++k) {
    const auto& row = j["per_class"][static_cast<size_t>(k)];
    CHECK(row["regions"].get<int64_t>() == stats.region_count[static_cast<size_t>(k)]);
    CHECK(row["area_pixels"].get<int64_t>() == stats.area_pixels[static_cast<size_t>(k)]);
    CHECK(row["count_share"].get<double>() ==
          doctest::Approx(stats.count_share[static_cast<size_t>(k)]));
  }
}

TEST_CASE("missing data is a usage error with the offending path") {
  auto no_root = run_cli("stats", "STEELSEG_DATA_ROOT=");
  CHECK(no_root.exit_code == 64);
  CHECK(no_root.err.find("STEELSEG_DATA_ROOT") != std::string::npos);

  auto bad_dir = run_cli("stats --data-root /nonexistent/steel");
  CHECK(bad_dir.exit_code == 64);
  CHECK(bad_dir.err.find("/nonexistent/steel") != std::string::npos);

  // directory exists but holds no images -> data error
  const fs::path empty = fixtures::fresh_dir("cliempty");
  fs::create_directories(empty / "train_images");
  std::ofstream(empty / "train.csv") << "ImageId,ClassId,EncodedPixels\n";
  CHECK(run_cli("stats --data-root " + empty.string()).exit_code == 65);
}

TEST_CASE("the data root can come from the environment") {
  auto r = run_cli("stats", "STEELSEG_DATA_ROOT=" + dataset_root().string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("images: 8") != std::string::npos);
}

TEST_CASE("training writes the full run directory") {
  const fs::path& dir = trained_run_dir();
  for (const char* name : {"config.json", "loss.csv", "ckpt_epoch0.ckpt", "ckpt_epoch1.ckpt",
                           "last.ckpt", "best.ckpt", "eval.json", "per_sample_iou.csv",
                           "iou_histogram.png", "loss_curve.png"})
    CHECK(fs::is_regular_file(dir / name));

  // config snapshot reflects the flag overrides
  auto cfg = parse_file(dir / "config.json");
  CHECK(cfg["model"]["backbone"] == "tiny");
  CHECK(cfg["epochs"].get<int>() == 2);
  CHECK(cfg["train"]["batch_size"].get<int>() == 2);
  CHECK(cfg["train"]["seed"].get<uint64_t>() == 5);

  // 8 images split 0.8/0.1/0.1 -> 6 train (batch 2 -> 3 steps), 2 epochs
  auto records = train::read_loss_csv((dir / "loss.csv").string());
  REQUIRE(records.size() == 6);
  CHECK(records.front().epoch == 0);
  CHECK(records.back().epoch == 1);
  CHECK(records.back().step == 6);

  auto ev = parse_file(dir / "eval.json");
  CHECK(ev["split"] == "eval");
  CHECK(ev["sample_count"].get<int>() == 1);
  CHECK(ev["mean_iou"].get<double>() >= 0.0);
  CHECK(ev["mean_iou"].get<double>() <= 1.0);
}

TEST_CASE("an interrupted run resumes into the same trajectory") {
  // reference: two epochs in one go (same seeds as trained_run_dir)
  const fs::path& ref = trained_run_dir();

  const fs::path dir = fixtures::fresh_dir("cliresume");
  auto first = run_cli("train " + data_args() + " --backbone tiny --epochs 1 --batch-size 2" +
                       " --height 32 --width 32 --seed 5 --output-dir " + dir.string());
  REQUIRE(first.exit_code == 0);
  auto second = run_cli("train " + data_args() + " --backbone tiny --epochs 2 --batch-size 2" +
                        " --height 32 --width 32 --seed 5 --resume --output-dir " +
                        dir.string());
  REQUIRE(second.exit_code == 0);
  CHECK(second.out.find("resuming from") != std::string::npos);

  CHECK(slurp(dir / "loss.csv") == slurp(ref / "loss.csv"));
}

TEST_CASE("identical seeds give identical runs") {
  const fs::path dir = fixtures::fresh_dir("clitwin");
  auto r = run_cli("train " + data_args() + " --backbone tiny --epochs 2 --batch-size 2" +
                   " --height 32 --width 32 --seed 5 --output-dir " + dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(dir / "loss.csv") == slurp(trained_run_dir() / "loss.csv"));
  CHECK(slurp(dir / "eval.json") == slurp(trained_run_dir() / "eval.json"));
}

TEST_CASE("eval scores a checkpoint and writes reports") {
  const fs::path out = fixtures::fresh_dir("clieval");
  const std::string ckpt = (trained_run_dir() / "last.ckpt").string();

  auto r = run_cli("eval " + data_args() + " --checkpoint " + ckpt + " --split train" +
                   " --seed 5 --out-dir " + out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("mean IoU") != std::string::npos);
  auto ev = parse_file(out / "eval.json");
  CHECK(ev["split"] == "train");
  CHECK(ev["sample_count"].get<int>() == 6);
  CHECK(fs::is_regular_file(out / "per_sample_iou.csv"));
  CHECK(fs::is_regular_file(out / "iou_histogram.png"));

  // the per-sample csv has one line per sample plus a header
  std::istringstream csv(slurp(out / "per_sample_iou.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 7);

  // declared model flags must match the checkpoint
  auto mismatch = run_cli("eval " + data_args() + " --checkpoint " + ckpt +
                          " --backbone resnet101 --out-dir " + out.string());
  CHECK(mismatch.exit_code == 64);
  CHECK(mismatch.err.find("tiny") != std::string::npos);

  CHECK(run_cli("eval " + data_args() + " --checkpoint /nope.ckpt").exit_code == 65);
}

TEST_CASE("infer writes masks, overlays and a manifest") {
  const fs::path out = fixtures::fresh_dir("cliinfer");
  const std::string ckpt = (trained_run_dir() / "last.ckpt").string();
  const fs::path img0 = dataset_root() / "train_images" / "img_0.png";
  const fs::path img1 = dataset_root() / "train_images" / "img_1.png";

  auto r = run_cli("infer --checkpoint " + ckpt + " --out-dir " + out.string() + " " +
                   img0.string() + " " + img1.string());
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"img_0_mask.png", "img_0_overlay.png", "img_1_mask.png",
                           "img_1_overlay.png", "inference.json"})
    CHECK(fs::is_regular_file(out / name));

  auto manifest = parse_file(out / "inference.json");
  REQUIRE(manifest.size() == 2);
  // resized mode: outputs at the checkpoint's training resolution
  CHECK(manifest[0]["height"].get<int>() == 32);
  CHECK(manifest[0]["width"].get<int>() == 32);
  int64_t total = 0;
  for (int k = 0; k < 5; ++k)
    total += manifest[0]["class_pixel_counts"][std::to_string(k)].get<int64_t>();
  CHECK(total == 32 * 32);

  auto mask = load_mask_png((out / "img_0_mask.png").string());
  REQUIRE(mask.has_value());
  CHECK(mask->height == 32);
  CHECK(mask->width == 32);
}

TEST_CASE("infer at original size keeps native dimensions") {
  const fs::path out = fixtures::fresh_dir("cliinfer_orig");
  const std::string ckpt = (trained_run_dir() / "last.ckpt").string();
  // a non-divisible size exercises the padded path
  const fs::path odd = out / "odd.png";
  fixtures::Sample s;
  {
    Rng rng(77);
    s = fixtures::make_sample(0, 40, 52, rng);
  }
  REQUIRE(save_image(s.image, odd.string()));

  auto r = run_cli("infer --checkpoint " + ckpt + " --original-size --out-dir " +
                   out.string() + " " + odd.string());
  REQUIRE(r.exit_code == 0);
  auto manifest = parse_file(out / "inference.json");
  CHECK(manifest[0]["height"].get<int>() == 40);
  CHECK(manifest[0]["width"].get<int>() == 52);
}

TEST_CASE("infer skips unreadable inputs and fails only when nothing is left") {
  const fs::path out = fixtures::fresh_dir("cliinfer_bad");
  const std::string ckpt = (trained_run_dir() / "last.ckpt").string();
  const fs::path junk = out / "junk.png";
  std::ofstream(junk) << "not a png";
  const fs::path good = dataset_root() / "train_images" / "img_0.png";

  auto partial = run_cli("infer --checkpoint " + ckpt + " --out-dir " + out.string() + " " +
                         junk.string() + " " + good.string());
  CHECK(partial.exit_code == 0);
  CHECK(partial.err.find("skipping unreadable") != std::string::npos);

  auto nothing = run_cli("infer --checkpoint " + ckpt + " --out-dir " + out.string() + " " +
                         junk.string());
  CHECK(nothing.exit_code == 65);
}

TEST_CASE("benchmark prints the throughput table and optional json") {
  const fs::path out_json = fixtures::fresh_dir("clibench") / "bench.json";
  auto r = run_cli(
      "benchmark --bench-backbone tiny --variant baseline --height 32 --width 32"
      " --orig-height 32 --orig-width 48 --train-batch 2 --eval-batch 1 --units 3"
      " --warmup 1 --max-seconds 10 --out " +
      out_json.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("hardware:") != std::string::npos);
  CHECK(r.out.find("batch sizes: train 2, eval 1") != std::string::npos);
  CHECK(r.out.find("tiny") != std::string::npos);

  auto j = parse_file(out_json);
  CHECK(j["train_batch"].get<int>() == 2);
  CHECK(j["eval_batch"].get<int>() == 1);
  REQUIRE(j["rows"].size() == 1);
  const auto& row = j["rows"][0];
  CHECK(row["backbone"] == "tiny");
  CHECK(row["train_iterations"]["per_second"].get<double>() > 0.0);
  CHECK(row["eval_resized"]["per_second"].get<double>() > 0.0);
  CHECK(row["eval_original"]["per_second"].get<double>() > 0.0);
}
