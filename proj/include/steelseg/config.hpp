#pragma once

#include <array>
#include <string>

#include "steelseg/model/deeplab.hpp"
#include "steelseg/train.hpp"

namespace steelseg {

// Environment variable giving the default dataset root.
inline constexpr const char* kDataRootEnv = "STEELSEG_DATA_ROOT";

// One JSON file drives every subcommand; CLI flags override single fields.
// A run is reproducible from its config snapshot plus the seeds inside it.
struct RunConfig {
  std::string data_root;  // empty: taken from $STEELSEG_DATA_ROOT
  std::string csv_name = "train.csv";
  std::string image_dir_name = "train_images";
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  uint64_t split_seed = 1;
  ModelConfig model;
  train::TrainOptions train;
  int epochs = 1;
  int checkpoint_every_steps = 0;  // 0 = checkpoint at epoch boundaries only
  int eval_batch = 1;
  std::string output_dir = "run";

  std::string csv_path() const;
  std::string image_path() const;
};

// data_root resolved from the environment when present.
RunConfig default_run_config();

// Strict JSON round-trip: unknown keys are rejected with their name.
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& config);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

}  // namespace steelseg
