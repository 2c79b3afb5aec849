#include "steelseg/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "steelseg/errors.hpp"

namespace steelseg {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ValidationError("unknown config key '" + key + "' in " + where);
}

}  // namespace

std::string RunConfig::csv_path() const {
  return (std::filesystem::path(data_root) / csv_name).string();
}

std::string RunConfig::image_path() const {
  return (std::filesystem::path(data_root) / image_dir_name).string();
}

RunConfig default_run_config() {
  RunConfig config;
  if (const char* env = std::getenv(kDataRootEnv)) config.data_root = env;
  return config;
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["data_root"] = c.data_root;
  j["csv_name"] = c.csv_name;
  j["image_dir_name"] = c.image_dir_name;
  j["split_ratios"] = c.split_ratios;
  j["split_seed"] = c.split_seed;
  j["epochs"] = c.epochs;
  j["checkpoint_every_steps"] = c.checkpoint_every_steps;
  j["eval_batch"] = c.eval_batch;
  j["output_dir"] = c.output_dir;
  j["model"] = {{"backbone", c.model.backbone},
                {"variant", to_string(c.model.variant)},
                {"num_classes", c.model.num_classes},
                {"aspp_rates", c.model.aspp_rates},
                {"aspp_channels", c.model.aspp_channels},
                {"decoder_channels", c.model.decoder_channels},
                {"decoder_low_channels", c.model.decoder_low_channels}};
  j["train"] = {{"batch_size", c.train.batch_size},
                {"target_h", c.train.target_h},
                {"target_w", c.train.target_w},
                {"lr", c.train.sgd.lr},
                {"momentum", c.train.sgd.momentum},
                {"weight_decay", c.train.sgd.weight_decay},
                {"seed", c.train.seed},
                {"augment", c.train.augment},
                {"debug_augment", c.train.debug_augment},
                {"poly_total_steps", c.train.poly_total_steps},
                {"poly_power", c.train.poly_power},
                {"policy",
                 {{"class_share", c.train.policy.class_share},
                  {"action_weights", c.train.policy.action_weights},
                  {"rotation_range_deg", c.train.policy.rotation_range_deg},
                  {"crop_h", c.train.policy.crop_h},
                  {"crop_w", c.train.policy.crop_w}}}};
  return j.dump(2) + "\n";
}

namespace {

RunConfig parse_checked(const json& j);

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_checked(j);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
}

namespace {

RunConfig parse_checked(const json& j) {
  check_keys(j, {"data_root", "csv_name", "image_dir_name", "split_ratios", "split_seed",
                 "epochs", "checkpoint_every_steps", "eval_batch", "output_dir", "model",
                 "train"},
             "top level");

  RunConfig c = default_run_config();
  if (j.contains("data_root")) c.data_root = j["data_root"].get<std::string>();
  if (j.contains("csv_name")) c.csv_name = j["csv_name"].get<std::string>();
  if (j.contains("image_dir_name")) c.image_dir_name = j["image_dir_name"].get<std::string>();
  if (j.contains("split_ratios")) c.split_ratios = j["split_ratios"].get<std::array<double, 3>>();
  if (j.contains("split_seed")) c.split_seed = j["split_seed"].get<uint64_t>();
  if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
  if (j.contains("checkpoint_every_steps"))
    c.checkpoint_every_steps = j["checkpoint_every_steps"].get<int>();
  if (j.contains("eval_batch")) c.eval_batch = j["eval_batch"].get<int>();
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();

  if (j.contains("model")) {
    const auto& m = j["model"];
    check_keys(m, {"backbone", "variant", "num_classes", "aspp_rates", "aspp_channels",
                   "decoder_channels", "decoder_low_channels"},
               "model");
    if (m.contains("backbone")) c.model.backbone = m["backbone"].get<std::string>();
    if (m.contains("variant")) c.model.variant = variant_from_string(m["variant"].get<std::string>());
    if (m.contains("num_classes")) c.model.num_classes = m["num_classes"].get<int>();
    if (m.contains("aspp_rates")) c.model.aspp_rates = m["aspp_rates"].get<std::vector<int>>();
    if (m.contains("aspp_channels")) c.model.aspp_channels = m["aspp_channels"].get<int64_t>();
    if (m.contains("decoder_channels"))
      c.model.decoder_channels = m["decoder_channels"].get<int64_t>();
    if (m.contains("decoder_low_channels"))
      c.model.decoder_low_channels = m["decoder_low_channels"].get<int64_t>();
  }

  if (j.contains("train")) {
    const auto& t = j["train"];
    check_keys(t, {"batch_size", "target_h", "target_w", "lr", "momentum", "weight_decay",
                   "seed", "augment", "debug_augment", "poly_total_steps", "poly_power",
                   "policy"},
               "train");
    if (t.contains("batch_size")) c.train.batch_size = t["batch_size"].get<int>();
    if (t.contains("target_h")) c.train.target_h = t["target_h"].get<int>();
    if (t.contains("target_w")) c.train.target_w = t["target_w"].get<int>();
    if (t.contains("lr")) c.train.sgd.lr = t["lr"].get<double>();
    if (t.contains("momentum")) c.train.sgd.momentum = t["momentum"].get<double>();
    if (t.contains("weight_decay")) c.train.sgd.weight_decay = t["weight_decay"].get<double>();
    if (t.contains("seed")) c.train.seed = t["seed"].get<uint64_t>();
    if (t.contains("augment")) c.train.augment = t["augment"].get<bool>();
    if (t.contains("debug_augment")) c.train.debug_augment = t["debug_augment"].get<bool>();
    if (t.contains("poly_total_steps"))
      c.train.poly_total_steps = t["poly_total_steps"].get<int64_t>();
    if (t.contains("poly_power")) c.train.poly_power = t["poly_power"].get<double>();
    if (t.contains("policy")) {
      const auto& p = t["policy"];
      check_keys(p, {"class_share", "action_weights", "rotation_range_deg", "crop_h", "crop_w"},
                 "train.policy");
      if (p.contains("class_share"))
        c.train.policy.class_share = p["class_share"].get<std::array<double, 4>>();
      if (p.contains("action_weights"))
        c.train.policy.action_weights = p["action_weights"].get<std::array<double, 3>>();
      if (p.contains("rotation_range_deg"))
        c.train.policy.rotation_range_deg = p["rotation_range_deg"].get<double>();
      if (p.contains("crop_h")) c.train.policy.crop_h = p["crop_h"].get<int>();
      if (p.contains("crop_w")) c.train.policy.crop_w = p["crop_w"].get<int>();
    }
  }
  return c;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("config file not found: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

void save_run_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config: " + path);
  out << run_config_to_json(config);
}

}  // namespace steelseg
