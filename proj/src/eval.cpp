#include "steelseg/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "steelseg/errors.hpp"
#include "steelseg/loss.hpp"
#include "steelseg/rng.hpp"

namespace steelseg::eval {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Per-class intersection/union for one pair of masks.
struct ClassOverlap {
  int64_t inter = 0;
  int64_t uni = 0;
};

std::array<ClassOverlap, 4> overlaps(const LabelMask& pred, const LabelMask& truth) {
  std::array<ClassOverlap, 4> out{};
  const size_t n = pred.labels.size();
  for (size_t i = 0; i < n; ++i) {
    const int p = pred.labels[i], t = truth.labels[i];
    if (p >= 1) ++out[static_cast<size_t>(p - 1)].uni;
    if (t >= 1) {
      ++out[static_cast<size_t>(t - 1)].uni;
      if (p == t) {
        ++out[static_cast<size_t>(t - 1)].inter;
        --out[static_cast<size_t>(t - 1)].uni;  // counted twice above
      }
    }
  }
  return out;
}

// Accumulates per-sample results and finalizes the report invariants.
class ReportBuilder {
 public:
  void add(const std::string& id, const LabelMask& pred, const LabelMask& truth) {
    const double iou = sample_iou(pred, truth);
    report_.samples.push_back({id, iou});
    ++report_.histogram[static_cast<size_t>(iou_bin(iou))];
    ++report_.sample_count;
    iou_total_ += iou;
    const auto ov = overlaps(pred, truth);
    for (size_t k = 0; k < 4; ++k) {
      if (ov[k].uni == 0) continue;
      class_sum_[k] += static_cast<double>(ov[k].inter) / static_cast<double>(ov[k].uni);
      ++report_.class_support[k];
    }
  }

  EvalReport finish() {
    report_.mean_iou = report_.sample_count > 0
                           ? iou_total_ / static_cast<double>(report_.sample_count)
                           : 0.0;
    for (size_t k = 0; k < 4; ++k)
      report_.class_iou[k] = report_.class_support[k] > 0
                                 ? class_sum_[k] / static_cast<double>(report_.class_support[k])
                                 : 0.0;
    std::stable_sort(report_.samples.begin(), report_.samples.end(),
                     [](const SampleEval& a, const SampleEval& b) { return a.iou < b.iou; });
    return std::move(report_);
  }

 private:
  EvalReport report_;
  std::array<double, 4> class_sum_{};
  double iou_total_ = 0.0;
};

}  // namespace

double sample_iou(const LabelMask& prediction, const LabelMask& truth) {
  if (prediction.height != truth.height || prediction.width != truth.width)
    throw ValidationError("sample_iou: mask shapes differ");
  const auto ov = overlaps(prediction, truth);
  double sum = 0.0;
  int present = 0;
  for (const auto& o : ov) {
    if (o.uni == 0) continue;  // class absent from both masks
    sum += static_cast<double>(o.inter) / static_cast<double>(o.uni);
    ++present;
  }
  if (present == 0) return 1.0;  // both defect-free: perfect agreement
  return sum / present;
}

int iou_bin(double iou) {
  int b = static_cast<int>(iou * 10.0);
  return std::clamp(b, 0, 9);
}

LabelMask logits_to_mask(const nn::Tensor& logits, int batch_index) {
  const int64_t cls = logits.c(), h = logits.h(), w = logits.w();
  LabelMask mask(static_cast<int>(h), static_cast<int>(w));
  for (int64_t r = 0; r < h; ++r) {
    for (int64_t c = 0; c < w; ++c) {
      int best = 0;
      double best_v = logits.at(batch_index, 0, r, c);
      for (int64_t k = 1; k < cls; ++k) {
        const double v = logits.at(batch_index, k, r, c);
        if (v > best_v) {
          best_v = v;
          best = static_cast<int>(k);
        }
      }
      mask.at(static_cast<int>(r), static_cast<int>(c)) = static_cast<uint8_t>(best);
    }
  }
  return mask;
}

nn::Tensor predict_logits(SegModel& model, const nn::Tensor& input) {
  const bool was_training = model.training();
  model.set_training(false);
  const int stride = model.backbone_spec().high_level_stride;
  nn::Tensor padded = pad_to_stride(input, stride);
  nn::Tensor logits = model.forward(padded);
  model.set_training(was_training);
  return crop_logits(logits, input.h(), input.w());
}

LabelMask predict_mask(SegModel& model, const nn::Tensor& input) {
  return logits_to_mask(predict_logits(model, input), 0);
}

EvalReport mean_iou(const std::vector<std::pair<LabelMask, LabelMask>>& pairs,
                    const std::vector<std::string>* ids) {
  if (pairs.empty()) throw ValidationError("mean_iou over an empty sample list");
  if (ids && ids->size() != pairs.size())
    throw ValidationError("mean_iou: ids not aligned with pairs");
  ReportBuilder builder;
  for (size_t i = 0; i < pairs.size(); ++i)
    builder.add(ids ? (*ids)[i] : "sample_" + std::to_string(i), pairs[i].first,
                pairs[i].second);
  return builder.finish();
}

EvalReport evaluate_split(SegModel& model, const DatasetIndex& index, Split split,
                          const EvalOptions& options) {
  ReportBuilder builder;
  const auto& spec = model.backbone_spec();
  int64_t seen = 0;

  if (options.original_size) {
    // Stream records one at a time at native resolution.
    std::vector<LoadIssue> issues;
    for (size_t i : index.split_indices(split)) {
      if (options.limit > 0 && seen >= options.limit) break;
      auto sample = materialize(index.records[i], &issues);
      if (!sample) continue;
      nn::Tensor input = image_to_tensor(sample->image, spec.input_mean, spec.input_std);
      builder.add(sample->image_id, predict_mask(model, input), sample->mask);
      ++seen;
    }
  } else {
    BatchOptions bopt;
    bopt.split = split;
    bopt.batch_size = options.batch_size;
    bopt.target_h = options.target_h;
    bopt.target_w = options.target_w;
    bopt.shuffle_seed = -1;
    bopt.mean = spec.input_mean;
    bopt.std = spec.input_std;
    BatchStream stream(index, bopt);
    while (auto batch = stream.next()) {
      if (options.limit > 0 && seen >= options.limit) break;
      nn::Tensor logits = predict_logits(model, batch->images);
      for (int64_t b = 0; b < logits.n(); ++b) {
        if (options.limit > 0 && seen >= options.limit) break;
        builder.add(batch->image_ids[static_cast<size_t>(b)],
                    logits_to_mask(logits, static_cast<int>(b)),
                    batch->masks[static_cast<size_t>(b)]);
        ++seen;
      }
    }
  }
  if (seen == 0)
    throw ValidationError("no readable samples to evaluate in split '" + to_string(split) + "'");
  return builder.finish();
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  out << "image_id,iou\n";
  for (const auto& s : report.samples) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", s.iou);
    out << s.image_id << ',' << buf << '\n';
  }
}

std::string hardware_descriptor() {
  std::string model_name = "unknown cpu";
  int cores = 0;
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      ++cores;
      auto colon = line.find(':');
      if (colon != std::string::npos && model_name == "unknown cpu") {
        model_name = line.substr(colon + 1);
        const size_t b = model_name.find_first_not_of(' ');
        if (b != std::string::npos) model_name = model_name.substr(b);
      }
    }
  }

  double mem_gb = 0.0;
  std::ifstream meminfo("/proc/meminfo");
  while (std::getline(meminfo, line)) {
    if (line.rfind("MemTotal:", 0) == 0) {
      std::istringstream ss(line.substr(9));
      double kb = 0;
      ss >> kb;
      mem_gb = kb / (1024.0 * 1024.0);
      break;
    }
  }

  std::ostringstream out;
  out << model_name << ", " << (cores > 0 ? cores : 1) << " logical core"
      << (cores == 1 ? "" : "s");
  if (mem_gb > 0) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", mem_gb);
    out << ", " << buf << " GB RAM";
  }
  return out.str();
}

namespace {

// Calls fn repeatedly, timing each call, until the unit budget or the time
// budget is exhausted. Each call covers `units_per_call` work units.
ThroughputResult measure(const std::function<void()>& fn, int units_per_call, int min_units,
                         int warmup, double max_seconds) {
  for (int i = 0; i < warmup; ++i) fn();

  std::vector<double> rates;
  int units = 0;
  const auto t0 = Clock::now();
  while (units < min_units && seconds_since(t0) < max_seconds) {
    const auto c0 = Clock::now();
    fn();
    const double dt = seconds_since(c0);
    rates.push_back(static_cast<double>(units_per_call) / std::max(dt, 1e-12));
    units += units_per_call;
  }

  ThroughputResult result;
  result.measured_units = units;
  result.data_limited = units < min_units;
  if (rates.empty()) return result;
  double mean = 0.0;
  for (double r : rates) mean += r;
  mean /= static_cast<double>(rates.size());
  double var = 0.0;
  for (double r : rates) var += (r - mean) * (r - mean);
  var = rates.size() > 1 ? var / static_cast<double>(rates.size() - 1) : 0.0;
  result.mean_per_second = mean;
  result.std_per_second = std::sqrt(var);
  return result;
}

nn::Tensor random_input(int64_t b, int64_t h, int64_t w, Rng& rng) {
  nn::Tensor t(b, 3, h, w);
  for (int64_t i = 0; i < t.numel(); ++i) t[static_cast<size_t>(i)] = rng.normal() * 0.5;
  return t;
}

std::vector<LabelMask> random_masks(int64_t b, int64_t h, int64_t w, int num_classes,
                                    Rng& rng) {
  std::vector<LabelMask> masks;
  for (int64_t i = 0; i < b; ++i) {
    LabelMask m(static_cast<int>(h), static_cast<int>(w));
    for (auto& v : m.labels)
      v = static_cast<uint8_t>(rng.uniform_int(static_cast<uint64_t>(num_classes)));
    masks.push_back(std::move(m));
  }
  return masks;
}

}  // namespace

BenchmarkReport speed_benchmark(SegModel& model, const BenchmarkOptions& options) {
  BenchmarkReport report;
  report.backbone = model.config().backbone;
  report.variant = to_string(model.config().variant);
  report.hardware = hardware_descriptor();
  report.train_batch = options.train_batch;
  report.eval_batch = options.eval_batch;

  const int stride = model.backbone_spec().high_level_stride;
  Rng rng(options.seed);

  // Train: forward + loss + backward + a plain SGD update per iteration.
  {
    nn::Tensor input = random_input(options.train_batch, options.target_h, options.target_w, rng);
    auto masks = random_masks(options.train_batch, options.target_h, options.target_w,
                              model.config().num_classes, rng);
    model.set_training(true);
    auto params = model.params();
    auto step = [&]() {
      model.zero_grad();
      nn::Tensor logits = model.forward(input);
      nn::Tensor grad;
      softmax_cross_entropy(logits, masks, &grad);
      model.backward(grad);
      for (auto& p : params) {
        if (!p.param->trainable || p.param->grad.empty()) continue;
        double* w = p.param->value.data();
        const double* g = p.param->grad.data();
        for (int64_t i = 0; i < p.param->value.numel(); ++i) w[i] -= 1e-6 * g[i];
      }
    };
    report.train_iterations = measure(step, 1, options.min_units, options.warmup,
                                      options.max_seconds_per_section);
  }

  model.set_training(false);

  // Eval at the working resolution.
  {
    nn::Tensor input = random_input(options.eval_batch, options.target_h, options.target_w, rng);
    auto step = [&]() { model.forward(input); };
    report.eval_resized = measure(step, options.eval_batch, options.min_units, options.warmup,
                                  options.max_seconds_per_section);
  }

  // Eval at the native resolution through the padded path.
  {
    nn::Tensor input = random_input(options.eval_batch, options.original_h, options.original_w, rng);
    auto step = [&]() {
      nn::Tensor logits = model.forward(pad_to_stride(input, stride));
      crop_logits(logits, input.h(), input.w());
    };
    report.eval_original = measure(step, options.eval_batch, options.min_units, options.warmup,
                                   options.max_seconds_per_section);
  }

  model.set_training(true);
  return report;
}

}  // namespace steelseg::eval
