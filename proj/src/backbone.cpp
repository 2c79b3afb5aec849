#include "steelseg/model/backbone.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "steelseg/errors.hpp"

namespace steelseg {

using nn::AvgPool2d;
using nn::BatchNorm2d;
using nn::Conv2d;
using nn::MaxPool2d;
using nn::Module;
using nn::NamedParam;
using nn::ReLU;
using nn::Sequential;
using nn::SiLU;
using nn::Tensor;

namespace {

std::unique_ptr<Sequential> make_seq(std::vector<std::unique_ptr<Module>> ms) {
  auto seq = std::make_unique<Sequential>();
  for (auto& m : ms) seq->add(std::move(m));
  return seq;
}

// ResNet bottleneck, stride on the 3x3 conv.
class Bottleneck : public Module {
 public:
  Bottleneck(int64_t in_ch, int64_t planes, int stride, int dilation, bool downsample)
      : conv1_(in_ch, planes, 1, 1, 0, 1, 1, false),
        bn1_(planes),
        conv2_(planes, planes, 3, stride, dilation, dilation, 1, false),
        bn2_(planes),
        conv3_(planes, planes * 4, 1, 1, 0, 1, 1, false),
        bn3_(planes * 4) {
    if (downsample) {
      down_conv_ = std::make_unique<Conv2d>(in_ch, planes * 4, 1, stride, 0, 1, 1, false);
      down_bn_ = std::make_unique<BatchNorm2d>(planes * 4);
    }
  }

  Tensor forward(const Tensor& x) override {
    Tensor main = relu2_.forward(bn2_.forward(conv2_.forward(
        relu1_.forward(bn1_.forward(conv1_.forward(x))))));
    main = bn3_.forward(conv3_.forward(main));
    Tensor skip = down_conv_ ? down_bn_->forward(down_conv_->forward(x)) : x;
    main.add_(skip);
    return relu_out_.forward(main);
  }

  Tensor backward(const Tensor& gy) override {
    Tensor g = relu_out_.backward(gy);
    Tensor gx = down_conv_ ? down_conv_->backward(down_bn_->backward(g)) : g;
    Tensor gm = conv3_.backward(bn3_.backward(g));
    gm = relu2_.backward(gm);
    gm = conv2_.backward(bn2_.backward(gm));
    gm = relu1_.backward(gm);
    gm = conv1_.backward(bn1_.backward(gm));
    gx.add_(gm);
    return gx;
  }

  void collect_params(const std::string& p, std::vector<NamedParam>& out) override {
    conv1_.collect_params(p + ".conv1", out);
    bn1_.collect_params(p + ".bn1", out);
    conv2_.collect_params(p + ".conv2", out);
    bn2_.collect_params(p + ".bn2", out);
    conv3_.collect_params(p + ".conv3", out);
    bn3_.collect_params(p + ".bn3", out);
    if (down_conv_) {
      down_conv_->collect_params(p + ".downsample.0", out);
      down_bn_->collect_params(p + ".downsample.1", out);
    }
  }

  void set_training(bool t) override {
    Module::set_training(t);
    for (Module* m : {static_cast<Module*>(&conv1_), static_cast<Module*>(&bn1_),
                      static_cast<Module*>(&conv2_), static_cast<Module*>(&bn2_),
                      static_cast<Module*>(&conv3_), static_cast<Module*>(&bn3_),
                      static_cast<Module*>(&relu1_), static_cast<Module*>(&relu2_),
                      static_cast<Module*>(&relu_out_)})
      m->set_training(t);
    if (down_conv_) {
      down_conv_->set_training(t);
      down_bn_->set_training(t);
    }
  }

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  Conv2d conv3_;
  BatchNorm2d bn3_;
  ReLU relu1_, relu2_, relu_out_;
  std::unique_ptr<Conv2d> down_conv_;
  std::unique_ptr<BatchNorm2d> down_bn_;
};

// DenseNet composite layer: BN-ReLU-1x1 / BN-ReLU-3x3, output concatenated
// onto the input.
class DenseLayer : public Module {
 public:
  DenseLayer(int64_t in_ch, int growth, int bn_size, int dilation)
      : in_ch_(in_ch),
        bn1_(in_ch),
        conv1_(in_ch, static_cast<int64_t>(bn_size) * growth, 1, 1, 0, 1, 1, false),
        bn2_(static_cast<int64_t>(bn_size) * growth),
        conv2_(static_cast<int64_t>(bn_size) * growth, growth, 3, 1, dilation, dilation, 1,
               false) {}

  Tensor forward(const Tensor& x) override {
    Tensor fresh = conv2_.forward(relu2_.forward(bn2_.forward(
        conv1_.forward(relu1_.forward(bn1_.forward(x))))));
    return nn::concat_channels({&x, &fresh});
  }

  Tensor backward(const Tensor& gy) override {
    auto parts = nn::split_channels(gy, {in_ch_, gy.c() - in_ch_});
    Tensor g = conv2_.backward(parts[1]);
    g = relu2_.backward(g);
    g = bn2_.backward(g);
    g = conv1_.backward(g);
    g = relu1_.backward(g);
    g = bn1_.backward(g);
    g.add_(parts[0]);
    return g;
  }

  void collect_params(const std::string& p, std::vector<NamedParam>& out) override {
    bn1_.collect_params(p + ".norm1", out);
    conv1_.collect_params(p + ".conv1", out);
    bn2_.collect_params(p + ".norm2", out);
    conv2_.collect_params(p + ".conv2", out);
  }

  void set_training(bool t) override {
    Module::set_training(t);
    bn1_.set_training(t);
    relu1_.set_training(t);
    conv1_.set_training(t);
    bn2_.set_training(t);
    relu2_.set_training(t);
    conv2_.set_training(t);
  }

 private:
  int64_t in_ch_;
  BatchNorm2d bn1_;
  ReLU relu1_;
  Conv2d conv1_;
  BatchNorm2d bn2_;
  ReLU relu2_;
  Conv2d conv2_;
};

// Channel-wise recalibration: global pool, two 1x1 convs, sigmoid gate.
class SqueezeExcite : public Module {
 public:
  SqueezeExcite(int64_t channels, int64_t squeezed)
      : reduce_(channels, squeezed, 1), expand_(squeezed, channels, 1) {}

  Tensor forward(const Tensor& x) override {
    Tensor s = nn::global_avg_pool(x);
    s = act_.forward(reduce_.forward(s));
    scale_ = nn::sigmoid(expand_.forward(s));
    Tensor y = Tensor::zeros_like(x);
    const int64_t hw = x.h() * x.w();
    for (int64_t n = 0; n < x.n(); ++n)
      for (int64_t c = 0; c < x.c(); ++c) {
        double sc = scale_.at(n, c, 0, 0);
        const double* px = x.plane(n, c);
        double* py = y.plane(n, c);
        for (int64_t i = 0; i < hw; ++i) py[i] = px[i] * sc;
      }
    if (training_) cached_input_ = x;
    return y;
  }

  Tensor backward(const Tensor& gy) override {
    const Tensor& x = cached_input_;
    const int64_t hw = x.h() * x.w();
    Tensor gx = Tensor::zeros_like(x);
    Tensor gscale(x.n(), x.c(), 1, 1);
    for (int64_t n = 0; n < x.n(); ++n)
      for (int64_t c = 0; c < x.c(); ++c) {
        double sc = scale_.at(n, c, 0, 0);
        const double* pg = gy.plane(n, c);
        const double* px = x.plane(n, c);
        double* pgx = gx.plane(n, c);
        double ds = 0;
        for (int64_t i = 0; i < hw; ++i) {
          pgx[i] = pg[i] * sc;
          ds += pg[i] * px[i];
        }
        // through the sigmoid
        gscale.at(n, c, 0, 0) = ds * sc * (1.0 - sc);
      }
    Tensor g = expand_.backward(gscale);
    g = act_.backward(g);
    g = reduce_.backward(g);
    gx.add_(nn::global_avg_pool_backward(g, x.h(), x.w()));
    return gx;
  }

  void collect_params(const std::string& p, std::vector<NamedParam>& out) override {
    reduce_.collect_params(p + ".fc1", out);
    expand_.collect_params(p + ".fc2", out);
  }

  void set_training(bool t) override {
    Module::set_training(t);
    reduce_.set_training(t);
    act_.set_training(t);
    expand_.set_training(t);
  }

 private:
  Conv2d reduce_;
  SiLU act_;
  Conv2d expand_;
  Tensor cached_input_;
  Tensor scale_;
};

// EfficientNet inverted-residual block with squeeze-excitation.
class MBConv : public Module {
 public:
  MBConv(int64_t in_ch, int64_t out_ch, int kernel, int stride, int dilation, int expand_ratio)
      : use_skip_(stride == 1 && in_ch == out_ch) {
    int64_t mid = in_ch * expand_ratio;
    if (expand_ratio != 1) {
      expand_conv_ = std::make_unique<Conv2d>(in_ch, mid, 1, 1, 0, 1, 1, false);
      expand_bn_ = std::make_unique<BatchNorm2d>(mid);
      expand_act_ = std::make_unique<SiLU>();
    }
    int pad = dilation * (kernel - 1) / 2;
    dw_conv_ = std::make_unique<Conv2d>(mid, mid, kernel, stride, pad, dilation, mid, false);
    dw_bn_ = std::make_unique<BatchNorm2d>(mid);
    dw_act_ = std::make_unique<SiLU>();
    se_ = std::make_unique<SqueezeExcite>(mid, std::max<int64_t>(1, in_ch / 4));
    project_conv_ = std::make_unique<Conv2d>(mid, out_ch, 1, 1, 0, 1, 1, false);
    project_bn_ = std::make_unique<BatchNorm2d>(out_ch);
  }

  Tensor forward(const Tensor& x) override {
    Tensor cur = x;
    if (expand_conv_) cur = expand_act_->forward(expand_bn_->forward(expand_conv_->forward(cur)));
    cur = dw_act_->forward(dw_bn_->forward(dw_conv_->forward(cur)));
    cur = se_->forward(cur);
    cur = project_bn_->forward(project_conv_->forward(cur));
    if (use_skip_) cur.add_(x);
    return cur;
  }

  Tensor backward(const Tensor& gy) override {
    Tensor g = project_conv_->backward(project_bn_->backward(gy));
    g = se_->backward(g);
    g = dw_act_->backward(g);
    g = dw_conv_->backward(dw_bn_->backward(g));
    if (expand_conv_) {
      g = expand_act_->backward(g);
      g = expand_conv_->backward(expand_bn_->backward(g));
    }
    if (use_skip_) g.add_(gy);
    return g;
  }

  void collect_params(const std::string& p, std::vector<NamedParam>& out) override {
    if (expand_conv_) {
      expand_conv_->collect_params(p + ".expand_conv", out);
      expand_bn_->collect_params(p + ".expand_bn", out);
    }
    dw_conv_->collect_params(p + ".dw_conv", out);
    dw_bn_->collect_params(p + ".dw_bn", out);
    se_->collect_params(p + ".se", out);
    project_conv_->collect_params(p + ".project_conv", out);
    project_bn_->collect_params(p + ".project_bn", out);
  }

  void set_training(bool t) override {
    Module::set_training(t);
    if (expand_conv_) {
      expand_conv_->set_training(t);
      expand_bn_->set_training(t);
      expand_act_->set_training(t);
    }
    dw_conv_->set_training(t);
    dw_bn_->set_training(t);
    dw_act_->set_training(t);
    se_->set_training(t);
    project_conv_->set_training(t);
    project_bn_->set_training(t);
  }

 private:
  bool use_skip_;
  std::unique_ptr<Conv2d> expand_conv_;
  std::unique_ptr<BatchNorm2d> expand_bn_;
  std::unique_ptr<SiLU> expand_act_;
  std::unique_ptr<Conv2d> dw_conv_;
  std::unique_ptr<BatchNorm2d> dw_bn_;
  std::unique_ptr<SiLU> dw_act_;
  std::unique_ptr<SqueezeExcite> se_;
  std::unique_ptr<Conv2d> project_conv_;
  std::unique_ptr<BatchNorm2d> project_bn_;
};

std::unique_ptr<Module> resnet_stage(int64_t in_ch, int64_t planes, int blocks, int stride,
                                     int dilation) {
  auto seq = std::make_unique<Sequential>();
  seq->add(std::make_unique<Bottleneck>(in_ch, planes, stride, dilation, true));
  for (int i = 1; i < blocks; ++i)
    seq->add(std::make_unique<Bottleneck>(planes * 4, planes, 1, dilation, false));
  return seq;
}

// Output stride is held at 16 by dilating the final stage instead of striding.
std::unique_ptr<Backbone> build_resnet101() {
  std::vector<std::unique_ptr<Module>> stages;
  {
    std::vector<std::unique_ptr<Module>> stem;
    stem.push_back(std::make_unique<Conv2d>(3, 64, 7, 2, 3, 1, 1, false));
    stem.push_back(std::make_unique<BatchNorm2d>(64));
    stem.push_back(std::make_unique<ReLU>());
    stem.push_back(std::make_unique<MaxPool2d>(3, 2, 1));
    stages.push_back(make_seq(std::move(stem)));
  }
  stages.push_back(resnet_stage(64, 64, 3, 1, 1));      // stride 4, 256 ch (low tap)
  stages.push_back(resnet_stage(256, 128, 4, 2, 1));    // stride 8
  stages.push_back(resnet_stage(512, 256, 23, 2, 1));   // stride 16
  stages.push_back(resnet_stage(1024, 512, 3, 1, 2));   // stride 16, dilated
  BackboneSpec spec{"resnet101", 256, 2048, 4, 16};
  return std::make_unique<Backbone>(spec, std::move(stages), 1);
}

std::unique_ptr<Sequential> dense_block(int64_t in_ch, int layers, int growth, int dilation) {
  auto seq = std::make_unique<Sequential>();
  for (int i = 0; i < layers; ++i)
    seq->add(std::make_unique<DenseLayer>(in_ch + static_cast<int64_t>(i) * growth, growth, 4,
                                          dilation));
  return seq;
}

std::unique_ptr<Sequential> dense_transition(int64_t in_ch, int64_t out_ch, bool pool) {
  std::vector<std::unique_ptr<Module>> ms;
  ms.push_back(std::make_unique<BatchNorm2d>(in_ch));
  ms.push_back(std::make_unique<ReLU>());
  ms.push_back(std::make_unique<Conv2d>(in_ch, out_ch, 1, 1, 0, 1, 1, false));
  if (pool) ms.push_back(std::make_unique<AvgPool2d>(2, 2));
  return make_seq(std::move(ms));
}

std::unique_ptr<Backbone> build_densenet201() {
  const int growth = 32;
  std::vector<std::unique_ptr<Module>> stages;
  {
    std::vector<std::unique_ptr<Module>> stem;
    stem.push_back(std::make_unique<Conv2d>(3, 64, 7, 2, 3, 1, 1, false));
    stem.push_back(std::make_unique<BatchNorm2d>(64));
    stem.push_back(std::make_unique<ReLU>());
    stem.push_back(std::make_unique<MaxPool2d>(3, 2, 1));
    stages.push_back(make_seq(std::move(stem)));
  }
  stages.push_back(dense_block(64, 6, growth, 1));  // 256 ch at stride 4 (low tap)
  {
    std::vector<std::unique_ptr<Module>> s;
    s.push_back(dense_transition(256, 128, true));
    s.push_back(dense_block(128, 12, growth, 1));  // 512 at stride 8
    stages.push_back(make_seq(std::move(s)));
  }
  {
    std::vector<std::unique_ptr<Module>> s;
    s.push_back(dense_transition(512, 256, true));
    s.push_back(dense_block(256, 48, growth, 1));  // 1792 at stride 16
    stages.push_back(make_seq(std::move(s)));
  }
  {
    // Last transition keeps stride 16: no pooling, dilated final block.
    std::vector<std::unique_ptr<Module>> s;
    s.push_back(dense_transition(1792, 896, false));
    s.push_back(dense_block(896, 32, growth, 2));  // 1920
    s.push_back(std::make_unique<BatchNorm2d>(1920));
    s.push_back(std::make_unique<ReLU>());
    stages.push_back(make_seq(std::move(s)));
  }
  BackboneSpec spec{"densenet201", 256, 1920, 4, 16};
  return std::make_unique<Backbone>(spec, std::move(stages), 1);
}

std::unique_ptr<Sequential> mbconv_stage(int64_t in_ch, int64_t out_ch, int kernel, int stride,
                                         int dilation, int expand, int repeats) {
  auto seq = std::make_unique<Sequential>();
  seq->add(std::make_unique<MBConv>(in_ch, out_ch, kernel, stride, dilation, expand));
  for (int i = 1; i < repeats; ++i)
    seq->add(std::make_unique<MBConv>(out_ch, out_ch, kernel, 1, dilation, expand));
  return seq;
}

std::unique_ptr<Backbone> build_efficientnet_b1() {
  std::vector<std::unique_ptr<Module>> stages;
  {
    std::vector<std::unique_ptr<Module>> stem;
    stem.push_back(std::make_unique<Conv2d>(3, 32, 3, 2, 1, 1, 1, false));
    stem.push_back(std::make_unique<BatchNorm2d>(32));
    stem.push_back(std::make_unique<SiLU>());
    stages.push_back(make_seq(std::move(stem)));
  }
  // B1 depth multiplier 1.1 applied to the B0 stage repeats [1,2,2,3,3,4,1].
  stages.push_back(mbconv_stage(32, 16, 3, 1, 1, 1, 2));   // stride 2
  stages.push_back(mbconv_stage(16, 24, 3, 2, 1, 6, 3));   // stride 4 (low tap)
  stages.push_back(mbconv_stage(24, 40, 5, 2, 1, 6, 3));   // stride 8
  stages.push_back(mbconv_stage(40, 80, 3, 2, 1, 6, 4));   // stride 16
  stages.push_back(mbconv_stage(80, 112, 5, 1, 1, 6, 4));  // stride 16
  // Native stride would reach 32 here; dilate instead.
  stages.push_back(mbconv_stage(112, 192, 5, 1, 2, 6, 5));
  stages.push_back(mbconv_stage(192, 320, 3, 1, 2, 6, 2));
  BackboneSpec spec{"efficientnet_b1", 24, 320, 4, 16};
  return std::make_unique<Backbone>(spec, std::move(stages), 2);
}

// Test-scale backbone: two conv blocks behind the stem, strides 2/4 so the
// whole model stays cheap enough for finite-difference checks.
std::unique_ptr<Backbone> build_tiny() {
  std::vector<std::unique_ptr<Module>> stages;
  {
    std::vector<std::unique_ptr<Module>> stem;
    stem.push_back(std::make_unique<Conv2d>(3, 16, 3, 2, 1, 1, 1, false));
    stem.push_back(std::make_unique<BatchNorm2d>(16));
    stem.push_back(std::make_unique<ReLU>());
    stages.push_back(make_seq(std::move(stem)));
  }
  {
    std::vector<std::unique_ptr<Module>> b;
    b.push_back(std::make_unique<Conv2d>(16, 16, 3, 1, 1, 1, 1, false));
    b.push_back(std::make_unique<BatchNorm2d>(16));
    b.push_back(std::make_unique<ReLU>());
    stages.push_back(make_seq(std::move(b)));  // stride 2 (low tap)
  }
  {
    std::vector<std::unique_ptr<Module>> b;
    b.push_back(std::make_unique<Conv2d>(16, 32, 3, 2, 1, 1, 1, false));
    b.push_back(std::make_unique<BatchNorm2d>(32));
    b.push_back(std::make_unique<ReLU>());
    b.push_back(std::make_unique<Conv2d>(32, 32, 3, 1, 1, 1, 1, false));
    b.push_back(std::make_unique<BatchNorm2d>(32));
    b.push_back(std::make_unique<ReLU>());
    stages.push_back(make_seq(std::move(b)));  // stride 4
  }
  BackboneSpec spec{"tiny", 16, 32, 2, 4, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
  return std::make_unique<Backbone>(spec, std::move(stages), 1);
}

using Builder = std::function<std::unique_ptr<Backbone>()>;

const std::vector<std::pair<std::string, Builder>>& registry() {
  static const std::vector<std::pair<std::string, Builder>> reg = {
      {"resnet101", build_resnet101},
      {"densenet201", build_densenet201},
      {"efficientnet_b1", build_efficientnet_b1},
      {"tiny", build_tiny},
  };
  return reg;
}

}  // namespace

Backbone::Backbone(BackboneSpec spec, std::vector<std::unique_ptr<Module>> stages, int tap_after)
    : spec_(std::move(spec)), stages_(std::move(stages)), tap_after_(tap_after) {}

FeatureTaps Backbone::forward(const Tensor& x) {
  FeatureTaps taps;
  Tensor cur = x;
  for (size_t i = 0; i < stages_.size(); ++i) {
    cur = stages_[i]->forward(cur);
    if (static_cast<int>(i) == tap_after_) taps.low = cur;
  }
  taps.high = std::move(cur);
  return taps;
}

Tensor Backbone::backward(const Tensor& g_low, const Tensor& g_high) {
  Tensor g = g_high;
  for (int i = static_cast<int>(stages_.size()) - 1; i > tap_after_; --i)
    g = stages_[i]->backward(g);
  if (!g_low.empty()) g.add_(g_low);
  for (int i = tap_after_; i >= 0; --i) g = stages_[i]->backward(g);
  return g;
}

void Backbone::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
  for (size_t i = 0; i < stages_.size(); ++i)
    stages_[i]->collect_params(prefix + ".stage" + std::to_string(i), out);
}

void Backbone::set_training(bool t) {
  for (auto& s : stages_) s->set_training(t);
}

std::unique_ptr<Backbone> build_backbone(const std::string& name) {
  for (const auto& [n, builder] : registry())
    if (n == name) return builder();
  std::string names;
  for (const auto& [n, _] : registry()) names += (names.empty() ? "" : ", ") + n;
  throw ValidationError("unknown backbone '" + name + "'; registered: " + names);
}

std::vector<std::string> registered_backbones() {
  std::vector<std::string> names;
  for (const auto& [n, _] : registry()) names.push_back(n);
  return names;
}

BackboneSpec backbone_spec(const std::string& name) {
  // Specs are cheap to materialize only via the builder for the tiny net;
  // keep a static table instead so callers can query without building.
  static const std::map<std::string, BackboneSpec> specs = {
      {"resnet101", {"resnet101", 256, 2048, 4, 16}},
      {"densenet201", {"densenet201", 256, 1920, 4, 16}},
      {"efficientnet_b1", {"efficientnet_b1", 24, 320, 4, 16}},
      {"tiny", {"tiny", 16, 32, 2, 4, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}}},
  };
  auto it = specs.find(name);
  if (it == specs.end()) build_backbone(name);  // throws with the registry listing
  return it->second;
}

}  // namespace steelseg
