#pragma once

#include <memory>
#include <string>
#include <vector>

#include "steelseg/nn/tensor.hpp"
#include "steelseg/rng.hpp"

namespace steelseg::nn {

// How a parameter is filled by initialize(); fan is the fan-out for
// Kaiming-normal conv inits.
struct InitSpec {
  enum Kind { kKaimingConv, kZero, kOne } kind = kZero;
  double fan = 0.0;
};

struct Param {
  Tensor value;
  Tensor grad;  // allocated lazily on first backward
  bool trainable = true;
  InitSpec init;

  void ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros_like(value);
  }
  void zero_grad() {
    if (!grad.empty()) grad.zero();
  }
};

struct NamedParam {
  std::string name;
  Param* param;
};

// A layer with cached-activation backprop. forward() must be called before
// backward(); caches are only kept in training mode.
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& gy) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<NamedParam>& out) {}
  virtual void set_training(bool t) { training_ = t; }
  bool training() const { return training_; }

 protected:
  bool training_ = true;
};

// Fills every parameter in order from one RNG stream; call once per model.
void initialize_params(const std::vector<NamedParam>& params, Rng& rng);

class Conv2d : public Module {
 public:
  Conv2d(int64_t in_ch, int64_t out_ch, int kernel, int stride = 1, int padding = 0,
         int dilation = 1, int64_t groups = 1, bool bias = true);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& gy) override;
  void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  void im2col(const Tensor& x, int64_t n, int64_t g, double* col, int64_t ho, int64_t wo) const;
  void col2im_acc(const double* col, Tensor& gx, int64_t n, int64_t g, int64_t ho,
                  int64_t wo) const;

  int64_t in_ch_, out_ch_, groups_;
  int kernel_, stride_, padding_, dilation_;
  bool has_bias_;
  Param weight_;  // (out_ch, in_ch/groups, k, k)
  Param bias_;    // (out_ch, 1, 1, 1)
  Tensor cached_input_;
};

class BatchNorm2d : public Module {
 public:
  explicit BatchNorm2d(int64_t channels, double eps = 1e-5, double momentum = 0.1);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& gy) override;
  void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;

 private:
  int64_t channels_;
  double eps_, momentum_;
  Param gamma_, beta_;
  Param running_mean_, running_var_;  // buffers, not trainable
  Tensor cached_xhat_;
  std::vector<double> cached_invstd_;
};

class ReLU : public Module {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& gy) override;

 private:
  std::vector<uint8_t> mask_;
};

// x * sigmoid(x), the EfficientNet activation.
class SiLU : public Module {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& gy) override;

 private:
  Tensor cached_input_;
};

class MaxPool2d : public Module {
 public:
  MaxPool2d(int kernel, int stride, int padding = 0);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& gy) override;

 private:
  int kernel_, stride_, padding_;
  int64_t in_h_ = 0, in_w_ = 0;
  std::vector<int64_t> argmax_;  // flat index into the input plane, per output element
};

class AvgPool2d : public Module {
 public:
  AvgPool2d(int kernel, int stride, int padding = 0);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& gy) override;

 private:
  int kernel_, stride_, padding_;
  int64_t in_h_ = 0, in_w_ = 0;
};

class Sequential : public Module {
 public:
  Sequential() = default;
  void add(std::unique_ptr<Module> m) { children_.push_back(std::move(m)); }
  size_t size() const { return children_.size(); }
  Module& child(size_t i) { return *children_[i]; }

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& gy) override;
  void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
  void set_training(bool t) override;

 private:
  std::vector<std::unique_ptr<Module>> children_;
};

// Parameter-free kernels used for model-level wiring (the caller keeps the
// shape bookkeeping needed for the backward pass).

// Bilinear resample to (out_h, out_w), half-pixel centers, edge-clamped.
Tensor upsample_bilinear(const Tensor& x, int64_t out_h, int64_t out_w);
Tensor upsample_bilinear_backward(const Tensor& gy, int64_t in_h, int64_t in_w);

Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Tensor& gy, int64_t in_h, int64_t in_w);

Tensor concat_channels(const std::vector<const Tensor*>& xs);
std::vector<Tensor> split_channels(const Tensor& gy, const std::vector<int64_t>& channels);

Tensor sigmoid(const Tensor& x);

}  // namespace steelseg::nn
