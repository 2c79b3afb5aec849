#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "steelseg/nn/layers.hpp"

namespace steelseg {

// Declared geometry of a feature extractor. Channel counts and strides are
// verified against an actual probe forward pass when a model is built.
struct BackboneSpec {
  std::string name;
  int64_t low_level_channels = 0;
  int64_t high_level_channels = 0;
  int low_level_stride = 4;
  int high_level_stride = 16;
  std::array<double, 3> input_mean{0.485, 0.456, 0.406};
  std::array<double, 3> input_std{0.229, 0.224, 0.225};
};

struct FeatureTaps {
  nn::Tensor low;   // stride low_level_stride
  nn::Tensor high;  // stride high_level_stride
};

// A stage pipeline with one intermediate (low-level) tap.
class Backbone {
 public:
  Backbone(BackboneSpec spec, std::vector<std::unique_ptr<nn::Module>> stages, int tap_after);

  const BackboneSpec& spec() const { return spec_; }
  FeatureTaps forward(const nn::Tensor& x);
  // g_low may be empty (treated as zero) for heads that ignore the low tap.
  nn::Tensor backward(const nn::Tensor& g_low, const nn::Tensor& g_high);
  void collect_params(const std::string& prefix, std::vector<nn::NamedParam>& out);
  void set_training(bool t);

 private:
  BackboneSpec spec_;
  std::vector<std::unique_ptr<nn::Module>> stages_;
  int tap_after_;
};

// Registered names: resnet101, densenet201, efficientnet_b1, tiny.
// Throws ValidationError listing the registry for unknown names.
std::unique_ptr<Backbone> build_backbone(const std::string& name);
std::vector<std::string> registered_backbones();
BackboneSpec backbone_spec(const std::string& name);

}  // namespace steelseg
