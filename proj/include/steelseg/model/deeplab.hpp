#pragma once

#include <memory>
#include <string>
#include <vector>

#include "steelseg/model/backbone.hpp"
#include "steelseg/nn/layers.hpp"

namespace steelseg {

enum class ModelVariant { kBaseline, kDeepLabV3Plus };

std::string to_string(ModelVariant v);
ModelVariant variant_from_string(const std::string& s);

struct ModelConfig {
  std::string backbone = "resnet101";
  ModelVariant variant = ModelVariant::kDeepLabV3Plus;
  int num_classes = 5;  // background + 4 defect classes
  std::vector<int> aspp_rates = {12, 24, 36};  // the three 3x3 branches
  int64_t aspp_channels = 256;
  int64_t decoder_channels = 256;
  int64_t decoder_low_channels = 48;
};

// Parallel multi-rate context head: 1x1 conv, three 3x3 atrous convs, and a
// global-pooling branch, concatenated and fused by a 1x1 projection.
class Aspp : public nn::Module {
 public:
  Aspp(int64_t in_ch, int64_t out_ch, const std::vector<int>& rates);

  nn::Tensor forward(const nn::Tensor& x) override;
  nn::Tensor backward(const nn::Tensor& gy) override;
  void collect_params(const std::string& prefix, std::vector<nn::NamedParam>& out) override;
  void set_training(bool t) override;

 private:
  int64_t out_ch_;
  nn::Sequential branch1x1_;
  std::vector<std::unique_ptr<nn::Sequential>> atrous_;
  nn::Sequential pool_conv_;  // applied after global average pooling
  nn::Sequential project_;
  int64_t in_h_ = 0, in_w_ = 0;
};

// The full segmentation network: backbone taps feeding either the bare
// two-conv head (baseline) or the ASPP encoder + skip decoder.
class SegModel {
 public:
  SegModel(ModelConfig config);

  // Input H and W must be divisible by the backbone's high-level stride;
  // otherwise a ValidationError is thrown (see pad_to_stride).
  nn::Tensor forward(const nn::Tensor& images);
  void backward(const nn::Tensor& dlogits);

  const ModelConfig& config() const { return config_; }
  const BackboneSpec& backbone_spec() const { return backbone_->spec(); }
  std::vector<nn::NamedParam> params();
  void set_training(bool t);
  bool training() const { return training_; }
  int64_t count_parameters();  // trainable scalars
  uint64_t weight_checksum();
  void zero_grad();
  // Asserts the declared tap channels/strides against an actual forward pass.
  void verify_backbone_probe();

 private:
  nn::Tensor forward_baseline(const FeatureTaps& taps, int64_t out_h, int64_t out_w);
  nn::Tensor forward_deeplab(const FeatureTaps& taps, int64_t out_h, int64_t out_w);

  ModelConfig config_;
  std::unique_ptr<Backbone> backbone_;
  bool training_ = true;

  // baseline head
  nn::Sequential head_;

  // deeplab head
  std::unique_ptr<Aspp> aspp_;
  nn::Sequential low_proj_;
  nn::Sequential refine_;
  std::unique_ptr<nn::Conv2d> classifier_;

  // shape bookkeeping for the functional ops in backward
  int64_t in_h_ = 0, in_w_ = 0;
  int64_t low_h_ = 0, low_w_ = 0, high_h_ = 0, high_w_ = 0;
};

// Builds the network, randomly initializes all parameters from `seed`, and
// verifies the backbone's declared channels and strides with a probe forward
// pass. With pretrained=true, named weights are loaded from `weights_path`
// after random init (missing file -> DataError).
std::unique_ptr<SegModel> build_model(const ModelConfig& config, bool pretrained = false,
                                      uint64_t seed = 0, const std::string& weights_path = "");

// Dump the model's named weights in the format build_model loads.
void save_named_weights(SegModel& model, const std::string& path);

// Reflect-pad an NCHW batch on the bottom/right to the next multiple of
// `stride`; crop_logits undoes it on the network output.
nn::Tensor pad_to_stride(const nn::Tensor& images, int stride);
nn::Tensor crop_logits(const nn::Tensor& logits, int64_t out_h, int64_t out_w);

}  // namespace steelseg
