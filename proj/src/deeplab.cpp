#include "steelseg/model/deeplab.hpp"

#include <fstream>

#include "steelseg/errors.hpp"

namespace steelseg {

using nn::BatchNorm2d;
using nn::Conv2d;
using nn::NamedParam;
using nn::ReLU;
using nn::Sequential;
using nn::Tensor;

std::string to_string(ModelVariant v) {
  return v == ModelVariant::kBaseline ? "baseline" : "deeplabv3plus";
}

ModelVariant variant_from_string(const std::string& s) {
  if (s == "baseline") return ModelVariant::kBaseline;
  if (s == "deeplabv3plus") return ModelVariant::kDeepLabV3Plus;
  throw ValidationError("unknown model variant '" + s + "' (baseline|deeplabv3plus)");
}

namespace {
void add_conv_bn_relu(Sequential& seq, int64_t in_ch, int64_t out_ch, int kernel, int pad = 0,
                      int dilation = 1) {
  seq.add(std::make_unique<Conv2d>(in_ch, out_ch, kernel, 1, pad, dilation, 1, false));
  seq.add(std::make_unique<BatchNorm2d>(out_ch));
  seq.add(std::make_unique<ReLU>());
}
}  // namespace

// ---------------------------------------------------------------------------
// Aspp

Aspp::Aspp(int64_t in_ch, int64_t out_ch, const std::vector<int>& rates) : out_ch_(out_ch) {
  if (rates.size() != 3) throw ValidationError("aspp expects exactly 3 atrous rates");
  for (int r : rates)
    if (r < 1) throw ValidationError("aspp rates must be positive");
  add_conv_bn_relu(branch1x1_, in_ch, out_ch, 1);
  for (int r : rates) {
    auto b = std::make_unique<Sequential>();
    add_conv_bn_relu(*b, in_ch, out_ch, 3, r, r);
    atrous_.push_back(std::move(b));
  }
  add_conv_bn_relu(pool_conv_, in_ch, out_ch, 1);
  add_conv_bn_relu(project_, 5 * out_ch, out_ch, 1);
}

Tensor Aspp::forward(const Tensor& x) {
  in_h_ = x.h();
  in_w_ = x.w();
  Tensor b0 = branch1x1_.forward(x);
  std::vector<Tensor> bs;
  for (auto& b : atrous_) bs.push_back(b->forward(x));
  Tensor pooled = pool_conv_.forward(nn::global_avg_pool(x));
  Tensor bp = nn::upsample_bilinear(pooled, x.h(), x.w());
  Tensor cat = nn::concat_channels({&b0, &bs[0], &bs[1], &bs[2], &bp});
  return project_.forward(cat);
}

Tensor Aspp::backward(const Tensor& gy) {
  Tensor gcat = project_.backward(gy);
  auto parts = nn::split_channels(gcat, {out_ch_, out_ch_, out_ch_, out_ch_, out_ch_});
  Tensor gx = branch1x1_.backward(parts[0]);
  for (size_t i = 0; i < atrous_.size(); ++i) gx.add_(atrous_[i]->backward(parts[1 + i]));
  Tensor gpool = nn::upsample_bilinear_backward(parts[4], 1, 1);
  gx.add_(nn::global_avg_pool_backward(pool_conv_.backward(gpool), in_h_, in_w_));
  return gx;
}

void Aspp::collect_params(const std::string& p, std::vector<NamedParam>& out) {
  branch1x1_.collect_params(p + ".branch0", out);
  for (size_t i = 0; i < atrous_.size(); ++i)
    atrous_[i]->collect_params(p + ".branch" + std::to_string(i + 1), out);
  pool_conv_.collect_params(p + ".pool", out);
  project_.collect_params(p + ".project", out);
}

void Aspp::set_training(bool t) {
  Module::set_training(t);
  branch1x1_.set_training(t);
  for (auto& b : atrous_) b->set_training(t);
  pool_conv_.set_training(t);
  project_.set_training(t);
}

// ---------------------------------------------------------------------------
// SegModel

SegModel::SegModel(ModelConfig config) : config_(std::move(config)) {
  if (config_.num_classes < 2) throw ValidationError("num_classes must be >= 2");
  backbone_ = build_backbone(config_.backbone);
  const BackboneSpec& spec = backbone_->spec();
  if (config_.variant == ModelVariant::kBaseline) {
    // Two 3x3 conv+BN+ReLU stages then a 1x1 classifier, upsampled in one
    // bilinear step back to input resolution.
    add_conv_bn_relu(head_, spec.high_level_channels, 256, 3, 1);
    add_conv_bn_relu(head_, 256, 256, 3, 1);
    head_.add(std::make_unique<Conv2d>(256, config_.num_classes, 1));
  } else {
    aspp_ = std::make_unique<Aspp>(spec.high_level_channels, config_.aspp_channels,
                                   config_.aspp_rates);
    add_conv_bn_relu(low_proj_, spec.low_level_channels, config_.decoder_low_channels, 1);
    add_conv_bn_relu(refine_, config_.aspp_channels + config_.decoder_low_channels,
                     config_.decoder_channels, 3, 1);
    add_conv_bn_relu(refine_, config_.decoder_channels, config_.decoder_channels, 3, 1);
    classifier_ = std::make_unique<Conv2d>(config_.decoder_channels, config_.num_classes, 1);
  }
}

Tensor SegModel::forward(const Tensor& images) {
  const BackboneSpec& spec = backbone_->spec();
  if (images.c() != 3)
    throw ValidationError("model expects 3-channel input, got " + std::to_string(images.c()));
  if (images.h() % spec.high_level_stride != 0 || images.w() % spec.high_level_stride != 0)
    throw ValidationError("input " + images.shape_str() + " not divisible by stride " +
                          std::to_string(spec.high_level_stride) +
                          "; use pad_to_stride/crop_logits for arbitrary sizes");
  in_h_ = images.h();
  in_w_ = images.w();
  FeatureTaps taps = backbone_->forward(images);
  low_h_ = taps.low.h();
  low_w_ = taps.low.w();
  high_h_ = taps.high.h();
  high_w_ = taps.high.w();
  return config_.variant == ModelVariant::kBaseline ? forward_baseline(taps, in_h_, in_w_)
                                                    : forward_deeplab(taps, in_h_, in_w_);
}

Tensor SegModel::forward_baseline(const FeatureTaps& taps, int64_t out_h, int64_t out_w) {
  Tensor logits = head_.forward(taps.high);
  return nn::upsample_bilinear(logits, out_h, out_w);
}

Tensor SegModel::forward_deeplab(const FeatureTaps& taps, int64_t out_h, int64_t out_w) {
  Tensor enc = aspp_->forward(taps.high);
  Tensor enc_up = nn::upsample_bilinear(enc, taps.low.h(), taps.low.w());
  Tensor low = low_proj_.forward(taps.low);
  Tensor cat = nn::concat_channels({&enc_up, &low});
  Tensor fused = refine_.forward(cat);
  Tensor logits = classifier_->forward(fused);
  return nn::upsample_bilinear(logits, out_h, out_w);
}

void SegModel::backward(const Tensor& dlogits) {
  if (config_.variant == ModelVariant::kBaseline) {
    Tensor g = nn::upsample_bilinear_backward(dlogits, high_h_, high_w_);
    g = head_.backward(g);
    backbone_->backward(Tensor(), g);
    return;
  }
  Tensor g = nn::upsample_bilinear_backward(dlogits, low_h_, low_w_);
  g = classifier_->backward(g);
  g = refine_.backward(g);
  auto parts = nn::split_channels(g, {config_.aspp_channels, config_.decoder_low_channels});
  Tensor g_low = low_proj_.backward(parts[1]);
  Tensor g_enc = nn::upsample_bilinear_backward(parts[0], high_h_, high_w_);
  Tensor g_high = aspp_->backward(g_enc);
  backbone_->backward(g_low, g_high);
}

std::vector<NamedParam> SegModel::params() {
  std::vector<NamedParam> out;
  backbone_->collect_params("backbone", out);
  if (config_.variant == ModelVariant::kBaseline) {
    head_.collect_params("head", out);
  } else {
    aspp_->collect_params("aspp", out);
    low_proj_.collect_params("decoder.low_proj", out);
    refine_.collect_params("decoder.refine", out);
    classifier_->collect_params("decoder.classifier", out);
  }
  return out;
}

void SegModel::set_training(bool t) {
  training_ = t;
  backbone_->set_training(t);
  head_.set_training(t);
  if (aspp_) aspp_->set_training(t);
  low_proj_.set_training(t);
  refine_.set_training(t);
  if (classifier_) classifier_->set_training(t);
}

int64_t SegModel::count_parameters() {
  int64_t total = 0;
  for (const NamedParam& np : params())
    if (np.param->trainable) total += np.param->value.numel();
  return total;
}

uint64_t SegModel::weight_checksum() {
  uint64_t h = 1469598103934665603ull;
  for (const NamedParam& np : params()) {
    uint64_t c = np.param->value.checksum();
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void SegModel::zero_grad() {
  for (const NamedParam& np : params()) np.param->zero_grad();
}

// ---------------------------------------------------------------------------

namespace {

void load_named_weights(SegModel& model, const std::string& path);

}  // namespace

void SegModel::verify_backbone_probe() {
  const BackboneSpec& spec = backbone_->spec();
  const int hs = spec.high_level_stride;
  Tensor probe(1, 3, 2 * hs, 2 * hs);
  bool was_training = training_;
  set_training(false);
  FeatureTaps taps = backbone_->forward(probe);
  set_training(was_training);
  auto expect = [](int64_t got, int64_t want, const std::string& what) {
    if (got != want)
      throw ValidationError("backbone probe: " + what + " is " + std::to_string(got) +
                            ", spec declares " + std::to_string(want));
  };
  expect(taps.low.c(), spec.low_level_channels, "low-level channels");
  expect(taps.high.c(), spec.high_level_channels, "high-level channels");
  expect(taps.low.h(), probe.h() / spec.low_level_stride, "low-level height");
  expect(taps.low.w(), probe.w() / spec.low_level_stride, "low-level width");
  expect(taps.high.h(), probe.h() / hs, "high-level height");
  expect(taps.high.w(), probe.w() / hs, "high-level width");
}

std::unique_ptr<SegModel> build_model(const ModelConfig& config, bool pretrained, uint64_t seed,
                                      const std::string& weights_path) {
  auto model = std::make_unique<SegModel>(config);
  Rng rng(seed);
  nn::initialize_params(model->params(), rng);
  if (pretrained) {
    if (weights_path.empty())
      throw DataError("pretrained=true requires a weights file path");
    load_named_weights(*model, weights_path);
  }
  model->verify_backbone_probe();
  return model;
}

namespace {

// Weight files share the checkpoint container's tensor-map layout:
// magic, count, then (name, 4 dims, raw doubles) per entry.
constexpr char kWeightsMagic[8] = {'S', 'S', 'E', 'G', 'W', 'T', 'S', '1'};

void load_named_weights(SegModel& model, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open weights file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != std::string(kWeightsMagic, 8))
    throw DataError("not a weights file: " + path);
  uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  std::vector<NamedParam> params = model.params();
  auto find = [&](const std::string& name) -> nn::Param* {
    for (auto& np : params)
      if (np.name == name) return np.param;
    return nullptr;
  };
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    int64_t dims[4];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    Tensor t(dims[0], dims[1], dims[2], dims[3]);
    in.read(reinterpret_cast<char*>(t.data()), t.numel() * sizeof(double));
    if (!in) throw DataError("truncated weights file: " + path);
    nn::Param* p = find(name);
    if (!p) continue;  // extra tensors are skipped
    if (!p->value.same_shape(t))
      throw DataError("weights shape mismatch for '" + name + "': file " + t.shape_str() +
                      " vs model " + p->value.shape_str());
    p->value = std::move(t);
  }
}

}  // namespace

void save_named_weights(SegModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write weights file: " + path);
  out.write(kWeightsMagic, 8);
  std::vector<NamedParam> params = model.params();
  uint64_t count = params.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& np : params) {
    uint32_t name_len = static_cast<uint32_t>(np.name.size());
    out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    out.write(np.name.data(), name_len);
    const Tensor& t = np.param->value;
    int64_t dims[4] = {t.n(), t.c(), t.h(), t.w()};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(t.data()), t.numel() * sizeof(double));
  }
}

Tensor pad_to_stride(const Tensor& images, int stride) {
  int64_t ph = (images.h() + stride - 1) / stride * stride;
  int64_t pw = (images.w() + stride - 1) / stride * stride;
  if (ph == images.h() && pw == images.w()) return images;
  Tensor out(images.n(), images.c(), ph, pw);
  for (int64_t n = 0; n < images.n(); ++n)
    for (int64_t c = 0; c < images.c(); ++c) {
      const double* src = images.plane(n, c);
      double* dst = out.plane(n, c);
      for (int64_t r = 0; r < ph; ++r) {
        // reflect rows/cols past the edge
        int64_t sr = r < images.h() ? r : 2 * images.h() - 2 - r;
        if (sr < 0) sr = 0;
        for (int64_t cc = 0; cc < pw; ++cc) {
          int64_t sc = cc < images.w() ? cc : 2 * images.w() - 2 - cc;
          if (sc < 0) sc = 0;
          dst[r * pw + cc] = src[sr * images.w() + sc];
        }
      }
    }
  return out;
}

Tensor crop_logits(const Tensor& logits, int64_t out_h, int64_t out_w) {
  if (logits.h() == out_h && logits.w() == out_w) return logits;
  Tensor out(logits.n(), logits.c(), out_h, out_w);
  for (int64_t n = 0; n < logits.n(); ++n)
    for (int64_t c = 0; c < logits.c(); ++c)
      for (int64_t r = 0; r < out_h; ++r)
        std::copy(logits.plane(n, c) + r * logits.w(), logits.plane(n, c) + r * logits.w() + out_w,
                  out.plane(n, c) + r * out_w);
  return out;
}

}  // namespace steelseg
