#include "doctest.h"

#include <algorithm>
#include <filesystem>

#include "fixtures.hpp"
#include "steelseg/errors.hpp"
#include "steelseg/model/deeplab.hpp"
#include "steelseg/rng.hpp"

using namespace steelseg;

namespace {

ModelConfig tiny_config(ModelVariant variant = ModelVariant::kDeepLabV3Plus) {
  ModelConfig cfg;
  cfg.backbone = "tiny";
  cfg.variant = variant;
  cfg.aspp_rates = {2, 4, 6};  // small dilations for small test inputs
  cfg.aspp_channels = 8;
  cfg.decoder_channels = 8;
  cfg.decoder_low_channels = 4;
  return cfg;
}

}  // namespace

TEST_CASE("the backbone registry knows the catalog and rejects strangers") {
  auto names = registered_backbones();
  for (const char* want : {"resnet101", "densenet201", "efficientnet_b1", "tiny"})
    CHECK(std::find(names.begin(), names.end(), want) != names.end());

  CHECK_THROWS_WITH_AS(build_backbone("vgg16"), doctest::Contains("resnet101"),
                       ValidationError);

  for (const auto& name : names) {
    auto spec = backbone_spec(name);
    CHECK(spec.name == name);
    CHECK(spec.low_level_channels > 0);
    CHECK(spec.high_level_channels > 0);
    // the debug-scale backbone sits at strides 2/4, the real ones at 4/16
    CHECK(spec.low_level_stride == (name == "tiny" ? 2 : 4));
    CHECK(spec.high_level_stride == (name == "tiny" ? 4 : 16));
  }
}

TEST_CASE("model variant names round-trip") {
  CHECK(to_string(ModelVariant::kBaseline) == "baseline");
  CHECK(to_string(ModelVariant::kDeepLabV3Plus) == "deeplabv3plus");
  CHECK(variant_from_string("baseline") == ModelVariant::kBaseline);
  CHECK(variant_from_string("deeplabv3plus") == ModelVariant::kDeepLabV3Plus);
  CHECK_THROWS_AS(variant_from_string("unet"), ValidationError);
}

TEST_CASE("both heads map B x 3 x H x W to B x num_classes x H x W") {
  for (auto variant : {ModelVariant::kBaseline, ModelVariant::kDeepLabV3Plus}) {
    auto model = build_model(tiny_config(variant), false, 1);
    for (auto [h, w] : {std::pair{32, 32}, {48, 64}}) {
      nn::Tensor x(2, 3, h, w);
      Rng rng(5);
      for (int64_t i = 0; i < x.numel(); ++i) x[static_cast<size_t>(i)] = rng.normal() * 0.1;
      nn::Tensor y = model->forward(x);
      CHECK(y.n() == 2);
      CHECK(y.c() == 5);
      CHECK(y.h() == h);
      CHECK(y.w() == w);
      CHECK(y.all_finite());
    }
  }
}

TEST_CASE("indivisible inputs fail with a pointer to the padding helpers") {
  auto model = build_model(tiny_config(), false, 1);
  nn::Tensor x(1, 3, 30, 32);  // 30 % 4 != 0 (tiny has stride 4)
  CHECK_THROWS_WITH_AS(model->forward(x), doctest::Contains("pad_to_stride"),
                       ValidationError);
  nn::Tensor gray(1, 1, 32, 32);
  CHECK_THROWS_AS(model->forward(gray), ValidationError);
}

TEST_CASE("pad_to_stride reflects and crop_logits undoes it") {
  nn::Tensor x(1, 2, 5, 6);
  Rng rng(6);
  for (int64_t i = 0; i < x.numel(); ++i) x[static_cast<size_t>(i)] = rng.normal();

  nn::Tensor padded = pad_to_stride(x, 4);
  CHECK(padded.h() == 8);
  CHECK(padded.w() == 8);
  // original content is intact ...
  for (int64_t c = 0; c < 2; ++c)
    for (int64_t r = 0; r < 5; ++r)
      for (int64_t col = 0; col < 6; ++col)
        CHECK(padded.at(0, c, r, col) == x.at(0, c, r, col));
  // ... and the first padded row mirrors the row above the edge
  CHECK(padded.at(0, 0, 5, 0) == x.at(0, 0, 3, 0));
  CHECK(padded.at(0, 0, 0, 6) == x.at(0, 0, 0, 4));

  nn::Tensor cropped = crop_logits(padded, 5, 6);
  REQUIRE(cropped.same_shape(x));
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(cropped[static_cast<size_t>(i)] == x[static_cast<size_t>(i)]);

  // already divisible: padding is the identity
  nn::Tensor even(1, 1, 8, 8);
  CHECK(pad_to_stride(even, 4).same_shape(even));
}

TEST_CASE("initialization is seed-deterministic") {
  auto a = build_model(tiny_config(), false, 11);
  auto b = build_model(tiny_config(), false, 11);
  auto c = build_model(tiny_config(), false, 12);
  CHECK(a->count_parameters() > 0);
  CHECK(a->count_parameters() == b->count_parameters());
  CHECK(a->weight_checksum() == b->weight_checksum());
  CHECK(a->weight_checksum() != c->weight_checksum());
}

TEST_CASE("named weights round-trip through the pretrained loader") {
  namespace fs = std::filesystem;
  const fs::path dir = fixtures::fresh_dir("weights");
  const std::string path = (dir / "tiny.wts").string();

  auto src = build_model(tiny_config(), false, 21);
  save_named_weights(*src, path);

  auto loaded = build_model(tiny_config(), true, 99, path);
  CHECK(loaded->weight_checksum() == src->weight_checksum());

  CHECK_THROWS_AS(build_model(tiny_config(), true, 0, (dir / "absent.wts").string()),
                  DataError);
  CHECK_THROWS_AS(build_model(tiny_config(), true, 0, ""), DataError);
}

TEST_CASE("backward populates gradients for every trainable parameter") {
  auto model = build_model(tiny_config(), false, 31);
  // batch >= 2: with a single sample the global-pool branch's batchnorm
  // collapses to its (zero) shift and the trailing relu blocks every gradient
  nn::Tensor x(2, 3, 32, 32);
  Rng rng(32);
  for (int64_t i = 0; i < x.numel(); ++i) x[static_cast<size_t>(i)] = rng.normal() * 0.1;

  model->zero_grad();
  nn::Tensor y = model->forward(x);
  nn::Tensor gy = nn::Tensor::zeros_like(y);
  for (int64_t i = 0; i < gy.numel(); ++i) gy[static_cast<size_t>(i)] = rng.normal();
  model->backward(gy);

  int64_t with_grad = 0, trainable = 0;
  for (auto& np : model->params()) {
    if (!np.param->trainable) continue;
    ++trainable;
    if (np.param->grad.empty()) continue;
    double sum = 0;
    for (int64_t i = 0; i < np.param->grad.numel(); ++i)
      sum += std::abs(np.param->grad[static_cast<size_t>(i)]);
    if (sum > 0) ++with_grad;
  }
  CHECK(trainable > 0);
  // every trainable parameter takes part in the graph
  CHECK(with_grad == trainable);
}

TEST_CASE("eval mode switches the whole tree") {
  auto model = build_model(tiny_config(), false, 41);
  CHECK(model->training());
  model->set_training(false);
  CHECK_FALSE(model->training());

  // eval forward is repeatable (no running-stat drift)
  nn::Tensor x(1, 3, 32, 32);
  x.fill(0.2);
  nn::Tensor y1 = model->forward(x);
  nn::Tensor y2 = model->forward(x);
  CHECK(y1.checksum() == y2.checksum());
}

TEST_CASE("config validation rejects nonsense") {
  auto cfg = tiny_config();
  cfg.num_classes = 1;
  CHECK_THROWS_AS(build_model(cfg, false, 1), ValidationError);
  cfg = tiny_config();
  cfg.aspp_rates = {1, 2};
  CHECK_THROWS_AS(build_model(cfg, false, 1), ValidationError);
  cfg = tiny_config();
  cfg.backbone = "nope";
  CHECK_THROWS_AS(build_model(cfg, false, 1), ValidationError);
}
