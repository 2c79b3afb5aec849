#include "steelseg/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "steelseg/errors.hpp"
#include "steelseg/loss.hpp"
#include "steelseg/rng.hpp"

namespace steelseg::train {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'S', 'E', 'G', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;
constexpr uint64_t kShuffleSalt = 0x73687500ull;
constexpr uint64_t kAugSalt = 0x61756700ull;

json options_to_json(const TrainOptions& o) {
  return json{{"batch_size", o.batch_size},
              {"target_h", o.target_h},
              {"target_w", o.target_w},
              {"lr", o.sgd.lr},
              {"momentum", o.sgd.momentum},
              {"weight_decay", o.sgd.weight_decay},
              {"seed", o.seed},
              {"augment", o.augment},
              {"debug_augment", o.debug_augment},
              {"poly_total_steps", o.poly_total_steps},
              {"poly_power", o.poly_power},
              {"policy",
               {{"class_share", o.policy.class_share},
                {"action_weights", o.policy.action_weights},
                {"rotation_range_deg", o.policy.rotation_range_deg},
                {"crop_h", o.policy.crop_h},
                {"crop_w", o.policy.crop_w}}}};
}

TrainOptions options_from_json(const json& j) {
  TrainOptions o;
  o.batch_size = j.at("batch_size").get<int>();
  o.target_h = j.at("target_h").get<int>();
  o.target_w = j.at("target_w").get<int>();
  o.sgd.lr = j.at("lr").get<double>();
  o.sgd.momentum = j.at("momentum").get<double>();
  o.sgd.weight_decay = j.at("weight_decay").get<double>();
  o.seed = j.at("seed").get<uint64_t>();
  o.augment = j.at("augment").get<bool>();
  o.debug_augment = j.at("debug_augment").get<bool>();
  o.poly_total_steps = j.at("poly_total_steps").get<int64_t>();
  o.poly_power = j.at("poly_power").get<double>();
  const auto& p = j.at("policy");
  o.policy.class_share = p.at("class_share").get<std::array<double, 4>>();
  o.policy.action_weights = p.at("action_weights").get<std::array<double, 3>>();
  o.policy.rotation_range_deg = p.at("rotation_range_deg").get<double>();
  o.policy.crop_h = p.at("crop_h").get<int>();
  o.policy.crop_w = p.at("crop_w").get<int>();
  return o;
}

json model_to_json(const ModelConfig& m) {
  return json{{"backbone", m.backbone},
              {"variant", to_string(m.variant)},
              {"num_classes", m.num_classes},
              {"aspp_rates", m.aspp_rates},
              {"aspp_channels", m.aspp_channels},
              {"decoder_channels", m.decoder_channels},
              {"decoder_low_channels", m.decoder_low_channels}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.backbone = j.at("backbone").get<std::string>();
  m.variant = variant_from_string(j.at("variant").get<std::string>());
  m.num_classes = j.at("num_classes").get<int>();
  m.aspp_rates = j.at("aspp_rates").get<std::vector<int>>();
  m.aspp_channels = j.at("aspp_channels").get<int64_t>();
  m.decoder_channels = j.at("decoder_channels").get<int64_t>();
  m.decoder_low_channels = j.at("decoder_low_channels").get<int64_t>();
  return m;
}

void write_tensor(std::ofstream& out, const nn::Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

void read_tensor(std::ifstream& in, nn::Tensor& t) {
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!in) throw DataError("checkpoint truncated while reading tensor data");
}

}  // namespace

Sgd::Sgd(std::vector<nn::NamedParam> params, SgdOptions options)
    : params_(std::move(params)), options_(options) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.push_back(nn::Tensor::zeros_like(p.param->value));
}

void Sgd::step() {
  for (size_t i = 0; i < params_.size(); ++i) {
    nn::Param& p = *params_[i].param;
    if (!p.trainable || p.grad.empty()) continue;
    nn::Tensor& v = velocity_[i];
    double* vd = v.data();
    double* wd = p.value.data();
    const double* gd = p.grad.data();
    const double m = options_.momentum, decay = options_.weight_decay, lr = options_.lr;
    for (int64_t k = 0; k < p.value.numel(); ++k) {
      vd[k] = m * vd[k] + gd[k] + decay * wd[k];
      wd[k] -= lr * vd[k];
    }
  }
}

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write loss log: " + path);
  out << "epoch,step,loss,lr\n";
  for (const auto& r : records) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g,%.17g\n", r.epoch,
                  static_cast<long long>(r.step), r.loss, r.lr);
    out << buf;
  }
}

std::vector<LossRecord> read_loss_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read loss log: " + path);
  std::vector<LossRecord> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    LossRecord r;
    long long step = 0;
    if (std::sscanf(line.c_str(), "%d,%lld,%lg,%lg", &r.epoch, &step, &r.loss, &r.lr) != 4)
      throw DataError("malformed loss log line: " + line);
    r.step = step;
    records.push_back(r);
  }
  return records;
}

Trainer::Trainer(const ModelConfig& model_config, const TrainOptions& options,
                 uint64_t init_seed)
    : model_config_(model_config), options_(options), init_seed_(init_seed) {
  if (options_.augment) validate_policy(options_.policy);
  model_ = build_model(model_config_, false, init_seed_);
  optimizer_ = std::make_unique<Sgd>(model_->params(), options_.sgd);
}

void Trainer::attach_data(const DatasetIndex& index) {
  data_ = &index;
  if (epoch_open_) open_stream(pending_cursor_, pending_ordinal_);
}

void Trainer::open_stream(size_t cursor, uint64_t ordinal) {
  if (!data_) throw ValidationError("no dataset attached to trainer");
  BatchOptions bopt;
  bopt.split = Split::kTrain;
  bopt.batch_size = options_.batch_size;
  bopt.target_h = options_.target_h;
  bopt.target_w = options_.target_w;
  bopt.shuffle_seed = static_cast<int64_t>(
      Rng::mix(options_.seed, kShuffleSalt + static_cast<uint64_t>(epoch_)) >> 1);
  const auto& spec = model_->backbone_spec();
  bopt.mean = spec.input_mean;
  bopt.std = spec.input_std;
  if (options_.augment) {
    const uint64_t epoch_seed =
        Rng::mix(options_.seed, kAugSalt + static_cast<uint64_t>(epoch_));
    const AugmentationPolicy policy = options_.policy;
    const bool debug = options_.debug_augment;
    const int epoch = epoch_;
    bopt.transform = [epoch_seed, policy, debug, epoch](ImageU8& img, LabelMask& mask,
                                                        uint64_t ord) {
      auto classes = mask.label_set();
      classes.erase(0);
      Rng rng = Rng::substream(epoch_seed, ord);
      auto result = maybe_augment(img, mask, classes, policy, rng);
      if (debug) {
        for (const auto& a : result.actions) {
          switch (a.kind) {
            case AugKind::kCrop:
              std::fprintf(stderr, "[augment] epoch=%d ordinal=%llu action=crop top=%d left=%d h=%d w=%d\n",
                           epoch, static_cast<unsigned long long>(ord), a.top, a.left,
                           a.height, a.width);
              break;
            case AugKind::kVerticalFlip:
              std::fprintf(stderr, "[augment] epoch=%d ordinal=%llu action=vflip\n", epoch,
                           static_cast<unsigned long long>(ord));
              break;
            case AugKind::kRotate:
              std::fprintf(stderr, "[augment] epoch=%d ordinal=%llu action=rotate angle=%.3f\n",
                           epoch, static_cast<unsigned long long>(ord), a.angle_deg);
              break;
          }
        }
        if (!result.applied)
          std::fprintf(stderr, "[augment] epoch=%d ordinal=%llu action=none\n", epoch,
                       static_cast<unsigned long long>(ord));
      }
    };
  }
  stream_ = std::make_unique<BatchStream>(*data_, bopt);
  stream_->set_position(cursor, ordinal);
  epoch_open_ = true;
}

void Trainer::begin_epoch() {
  open_stream(0, 0);
}

const std::vector<LoadIssue>& Trainer::stream_issues() const {
  static const std::vector<LoadIssue> kEmpty;
  return stream_ ? stream_->issues() : kEmpty;
}

std::optional<LossRecord> Trainer::step() {
  if (!epoch_open_ || !stream_) throw ValidationError("no open epoch; call begin_epoch first");
  auto batch = stream_->next();
  if (!batch) {
    epoch_open_ = false;
    stream_.reset();
    ++epoch_;
    return std::nullopt;
  }

  double lr = options_.sgd.lr;
  if (options_.poly_total_steps > 0) {
    const double frac = std::min(
        1.0, static_cast<double>(global_step_) / static_cast<double>(options_.poly_total_steps));
    lr = options_.sgd.lr * std::pow(1.0 - frac, options_.poly_power);
  }
  optimizer_->options().lr = lr;

  model_->set_training(true);
  model_->zero_grad();
  nn::Tensor logits = model_->forward(batch->images);
  nn::Tensor grad;
  const double loss = softmax_cross_entropy(logits, batch->masks, &grad);
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite loss (" << loss << ") at epoch " << epoch_ << " global step "
        << (global_step_ + 1) << "; batch:";
    for (const auto& id : batch->image_ids) msg << ' ' << id;
    throw std::runtime_error(msg.str());
  }
  model_->backward(grad);
  optimizer_->step();
  ++global_step_;

  LossRecord record;
  record.epoch = epoch_;
  record.step = global_step_;
  record.loss = loss;
  record.lr = lr;
  return record;
}

void Trainer::save_checkpoint(const std::string& path) {
  auto params = model_->params();
  json header;
  header["model"] = model_to_json(model_config_);
  header["options"] = options_to_json(options_);
  header["init_seed"] = init_seed_;
  header["epoch"] = epoch_;
  header["global_step"] = global_step_;
  header["epoch_open"] = epoch_open_;
  header["cursor"] = epoch_open_ && stream_ ? stream_->cursor() : 0;
  header["ordinal"] = epoch_open_ && stream_ ? stream_->ordinal() : 0;
  header["weight_checksum"] = model_->weight_checksum();
  json names = json::array();
  for (const auto& p : params) {
    names.push_back({{"name", p.name},
                     {"shape", {p.param->value.n(), p.param->value.c(), p.param->value.h(),
                                p.param->value.w()}}});
  }
  header["params"] = std::move(names);
  const std::string header_text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + tmp);
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    const uint64_t len = header_text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_text.data(), static_cast<std::streamsize>(len));
    for (const auto& p : params) write_tensor(out, p.param->value);
    for (const auto& v : optimizer_->velocity()) write_tensor(out, v);
    if (!out) throw DataError("short write while saving checkpoint: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<Trainer> Trainer::load_checkpoint(const std::string& path,
                                                  int expected_num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint not found: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file: " + path);
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " (expected " + std::to_string(kVersion) + ")");
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_text(len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("checkpoint header truncated: " + path);

  json header = json::parse(header_text);
  const ModelConfig mcfg = model_from_json(header.at("model"));
  if (expected_num_classes >= 0 && mcfg.num_classes != expected_num_classes)
    throw DataError("checkpoint was trained with num_classes=" +
                    std::to_string(mcfg.num_classes) + " but " +
                    std::to_string(expected_num_classes) + " was requested");
  const TrainOptions topt = options_from_json(header.at("options"));

  auto trainer =
      std::make_unique<Trainer>(mcfg, topt, header.at("init_seed").get<uint64_t>());
  trainer->epoch_ = header.at("epoch").get<int>();
  trainer->global_step_ = header.at("global_step").get<int64_t>();
  trainer->epoch_open_ = header.at("epoch_open").get<bool>();
  trainer->pending_cursor_ = header.at("cursor").get<size_t>();
  trainer->pending_ordinal_ = header.at("ordinal").get<uint64_t>();

  auto params = trainer->model_->params();
  const auto& names = header.at("params");
  if (names.size() != params.size())
    throw DataError("checkpoint parameter count mismatch: file has " +
                    std::to_string(names.size()) + ", model has " +
                    std::to_string(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    if (names[i].at("name").get<std::string>() != params[i].name)
      throw DataError("checkpoint parameter order mismatch at '" + params[i].name + "'");
    const auto shape = names[i].at("shape").get<std::vector<int64_t>>();
    const auto& v = params[i].param->value;
    if (shape != std::vector<int64_t>{v.n(), v.c(), v.h(), v.w()})
      throw DataError("checkpoint shape mismatch for '" + params[i].name + "'");
  }
  for (auto& p : params) read_tensor(in, p.param->value);
  for (auto& v : trainer->optimizer_->velocity()) read_tensor(in, v);

  const uint64_t want = header.at("weight_checksum").get<uint64_t>();
  const uint64_t got = trainer->model_->weight_checksum();
  if (want != got) throw DataError("checkpoint weight checksum mismatch (corrupt file?)");
  return trainer;
}

}  // namespace steelseg::train
