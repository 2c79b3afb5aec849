#pragma once

#include <array>
#include <string>
#include <vector>

#include "steelseg/dataset.hpp"
#include "steelseg/mask.hpp"
#include "steelseg/model/deeplab.hpp"
#include "steelseg/nn/tensor.hpp"

namespace steelseg::eval {

// Per-sample IoU: mean of per-class IoUs over the classes present in either
// mask. Two defect-free masks score 1.0.
double sample_iou(const LabelMask& prediction, const LabelMask& truth);

// Histogram bin for one IoU value; ten bins [0,0.1) .. [0.9,1.0].
int iou_bin(double iou);

struct SampleEval {
  std::string image_id;
  double iou = 0.0;
};

struct EvalReport {
  double mean_iou = 0.0;
  std::array<double, 4> class_iou{};       // mean over samples with the class
  std::array<int64_t, 4> class_support{};  // samples where the class appears
  std::array<int64_t, 10> histogram{};
  std::vector<SampleEval> samples;  // sorted ascending by IoU
  int64_t sample_count = 0;
};

// Aggregate a list of (prediction, truth) pairs into a report. Throws on an
// empty list. When ids is given it must be pair-aligned.
EvalReport mean_iou(const std::vector<std::pair<LabelMask, LabelMask>>& pairs,
                    const std::vector<std::string>* ids = nullptr);

// Argmax over channels for one batch element.
LabelMask logits_to_mask(const nn::Tensor& logits, int batch_index);

// Pads to the backbone stride, runs the model in eval mode and crops the
// logits back to the input size.
nn::Tensor predict_logits(SegModel& model, const nn::Tensor& input);
LabelMask predict_mask(SegModel& model, const nn::Tensor& input);

struct EvalOptions {
  int target_h = 256;
  int target_w = 256;
  int batch_size = 1;
  bool original_size = false;  // predict at native resolution (padded)
  int64_t limit = 0;           // 0 = all samples in the split
};

EvalReport evaluate_split(SegModel& model, const DatasetIndex& index, Split split,
                          const EvalOptions& options);

void write_report_csv(const std::string& path, const EvalReport& report);

// --- throughput -----------------------------------------------------------

struct ThroughputResult {
  double mean_per_second = 0.0;  // units per second
  double std_per_second = 0.0;
  int measured_units = 0;
  bool data_limited = false;  // fewer units than requested
};

struct BenchmarkOptions {
  int target_h = 256;
  int target_w = 256;
  int original_h = 256;
  int original_w = 1600;
  int train_batch = 16;
  int eval_batch = 1;
  int min_units = 30;
  int warmup = 2;
  double max_seconds_per_section = 120.0;
  uint64_t seed = 7;
};

struct BenchmarkReport {
  std::string backbone;
  std::string variant;
  std::string hardware;
  int train_batch = 16;  // batch sizes actually used
  int eval_batch = 1;
  ThroughputResult train_iterations;  // it/s at train_batch
  ThroughputResult eval_resized;      // img/s at target size
  ThroughputResult eval_original;     // img/s at original (padded) size
};

std::string hardware_descriptor();

// Synthetic-input throughput measurement, one table row per model:
// one row per backbone with train it/s and eval img/s at both resolutions.
BenchmarkReport speed_benchmark(SegModel& model, const BenchmarkOptions& options);

}  // namespace steelseg::eval
