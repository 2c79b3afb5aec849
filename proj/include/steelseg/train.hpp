#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "steelseg/augment.hpp"
#include "steelseg/dataset.hpp"
#include "steelseg/model/deeplab.hpp"
#include "steelseg/nn/layers.hpp"

namespace steelseg::train {

struct SgdOptions {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

// v = momentum * v + (g + wd * w);  w -= lr * v
class Sgd {
 public:
  Sgd(std::vector<nn::NamedParam> params, SgdOptions options);

  void step();
  SgdOptions& options() { return options_; }
  const SgdOptions& options() const { return options_; }
  const std::vector<nn::NamedParam>& params() const { return params_; }
  std::vector<nn::Tensor>& velocity() { return velocity_; }

 private:
  std::vector<nn::NamedParam> params_;
  std::vector<nn::Tensor> velocity_;  // parallel to params_
  SgdOptions options_;
};

struct LossRecord {
  int epoch = 0;
  int64_t step = 0;  // global step counter
  double loss = 0.0;
  double lr = 0.0;
};

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& records);
std::vector<LossRecord> read_loss_csv(const std::string& path);

struct TrainOptions {
  int batch_size = 16;
  int target_h = 256;
  int target_w = 256;
  SgdOptions sgd;
  uint64_t seed = 42;
  bool augment = false;
  AugmentationPolicy policy;  // used when augment is set
  bool debug_augment = false;  // log applied actions as structured lines
  // Constant lr by default; > 0 decays lr polynomially over that many steps.
  int64_t poly_total_steps = 0;
  double poly_power = 0.9;
};

// Owns the model, optimizer and epoch stream; every random draw is derived
// from (seed, epoch, sample ordinal), so the counters in a checkpoint pin
// the whole training trajectory and resumes are bit-exact.
class Trainer {
 public:
  Trainer(const ModelConfig& model_config, const TrainOptions& options, uint64_t init_seed);

  // The index is not owned and must outlive the trainer. If a checkpoint
  // left an epoch half-finished this reopens the stream at the saved spot.
  void attach_data(const DatasetIndex& index);

  bool epoch_open() const { return epoch_open_; }
  void begin_epoch();  // opens the stream for the current epoch counter

  // One optimization step; nullopt when the epoch just finished (the epoch
  // counter then advances). Throws on non-finite loss.
  std::optional<LossRecord> step();

  int epoch() const { return epoch_; }
  int64_t global_step() const { return global_step_; }
  SegModel& model() { return *model_; }
  Sgd& optimizer() { return *optimizer_; }
  const ModelConfig& model_config() const { return model_config_; }
  const TrainOptions& options() const { return options_; }
  const std::vector<LoadIssue>& stream_issues() const;

  void save_checkpoint(const std::string& path);
  // expected_num_classes >= 0 enforces a match with the stored model config.
  static std::unique_ptr<Trainer> load_checkpoint(const std::string& path,
                                                  int expected_num_classes = -1);

 private:
  ModelConfig model_config_;
  TrainOptions options_;
  uint64_t init_seed_ = 0;
  std::unique_ptr<SegModel> model_;
  std::unique_ptr<Sgd> optimizer_;
  const DatasetIndex* data_ = nullptr;
  std::unique_ptr<BatchStream> stream_;
  int epoch_ = 0;
  int64_t global_step_ = 0;
  bool epoch_open_ = false;
  // stream position carried over from a checkpoint until data is attached
  size_t pending_cursor_ = 0;
  uint64_t pending_ordinal_ = 0;

  void open_stream(size_t cursor, uint64_t ordinal);
};

}  // namespace steelseg::train
