#include "steelseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "steelseg/errors.hpp"
#include "steelseg/rle.hpp"
#include "steelseg/rng.hpp"

namespace fs = std::filesystem;

namespace steelseg {
namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp";
}

// "xyz.jpg_3" -> {"xyz.jpg", 3}; returns class 0 when the suffix is absent.
std::pair<std::string, int> split_legacy_id(const std::string& field) {
  size_t us = field.rfind('_');
  if (us == std::string::npos || us + 1 >= field.size()) return {field, 0};
  const std::string tail = field.substr(us + 1);
  if (tail.size() != 1 || !std::isdigit(static_cast<unsigned char>(tail[0]))) return {field, 0};
  return {field.substr(0, us), tail[0] - '0'};
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kEval: return "eval";
    case Split::kTest: return "test";
  }
  return "?";
}

std::vector<size_t> DatasetIndex::split_indices(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < records.size(); ++i) {
    auto it = split_assignment.find(records[i].image_id);
    // An unsplit index exposes everything through the train slot.
    Split assigned = it == split_assignment.end() ? Split::kTrain : it->second;
    if (assigned == s) out.push_back(i);
  }
  return out;
}

DatasetIndex load_annotations(const std::string& csv_path, const std::string& image_directory) {
  DatasetIndex index;
  if (!fs::is_directory(image_directory))
    throw DataError("image directory not found: " + image_directory);

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(image_directory)) {
    if (entry.is_regular_file() && is_image_file(entry.path()))
      names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());

  std::map<std::string, size_t> by_id;
  index.records.reserve(names.size());
  for (const auto& name : names) {
    by_id[name] = index.records.size();
    index.records.push_back({name, (fs::path(image_directory) / name).string(), {}});
  }

  std::ifstream csv(csv_path);
  if (!csv) throw DataError("annotation csv not found: " + csv_path);

  std::string line;
  int line_no = 0;
  while (std::getline(csv, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_row(line);

    std::string image_id, rle_text;
    int class_id = 0;
    if (fields.size() >= 3) {
      image_id = fields[0];
      try {
        class_id = std::stoi(fields[1]);
      } catch (const std::exception&) {
        class_id = -1;
      }
      rle_text = fields[2];
    } else if (fields.size() == 2) {
      std::tie(image_id, class_id) = split_legacy_id(fields[0]);
      rle_text = fields[1];
    } else {
      index.issues.push_back({"", "line " + std::to_string(line_no) + ": expected 2 or 3 columns"});
      continue;
    }

    if (line_no == 1 && (image_id == "ImageId" || image_id == "ImageId_ClassId")) continue;
    if (rle_text.empty()) continue;  // explicit "no defect" row

    if (class_id < 1 || class_id > 4) {
      index.issues.push_back(
          {image_id, "line " + std::to_string(line_no) + ": bad class id '" +
                         (fields.size() >= 3 ? fields[1] : fields[0]) + "'"});
      continue;
    }
    auto it = by_id.find(image_id);
    if (it == by_id.end()) {
      index.issues.push_back({image_id, "annotated image file missing from " + image_directory});
      continue;
    }
    try {
      parse_rle(rle_text);  // malformed text is rejected here, bounds at decode
    } catch (const std::exception& e) {
      index.issues.push_back(
          {image_id, "class " + std::to_string(class_id) + ": " + e.what()});
      continue;
    }
    auto& rec = index.records[it->second];
    if (!rec.rle_by_class.emplace(class_id, rle_text).second)
      index.issues.push_back(
          {image_id, "duplicate annotation for class " + std::to_string(class_id)});
  }
  return index;
}

DatasetIndex split_dataset(const DatasetIndex& index, std::array<double, 3> ratios,
                           uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("split ratios must sum to 1, got " + std::to_string(sum));
  for (double r : ratios)
    if (r < 0.0) throw ValidationError("split ratios must be non-negative");

  const auto n = static_cast<int64_t>(index.records.size());
  const auto n_eval = static_cast<int64_t>(std::llround(ratios[1] * static_cast<double>(n)));
  const auto n_test = static_cast<int64_t>(std::llround(ratios[2] * static_cast<double>(n)));
  if (n_eval + n_test > n) throw ValidationError("split ratios leave no room for train");
  const int64_t n_train = n - n_eval - n_test;

  std::vector<size_t> order(index.records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  DatasetIndex out = index;
  out.split_seed = seed;
  out.split_assignment.clear();
  for (int64_t i = 0; i < n; ++i) {
    Split s = i < n_train            ? Split::kTrain
              : i < n_train + n_eval ? Split::kEval
                                     : Split::kTest;
    out.split_assignment[index.records[order[static_cast<size_t>(i)]].image_id] = s;
  }
  return out;
}

std::optional<SampleRecord> materialize(const AnnotationRecord& record,
                                        std::vector<LoadIssue>* issues) {
  auto image = load_image(record.image_path);
  if (!image) {
    if (issues) issues->push_back({record.image_id, "unreadable image: " + record.image_path});
    return std::nullopt;
  }

  std::map<ClassId, BinaryMask> layers;
  for (const auto& [class_id, text] : record.rle_by_class) {
    try {
      layers.emplace(ClassId(class_id),
                     rle_decode(parse_rle(text), image->height, image->width));
    } catch (const std::exception& e) {
      if (issues)
        issues->push_back({record.image_id, "class " + std::to_string(class_id) + ": " + e.what()});
      return std::nullopt;
    }
  }

  SampleRecord sample;
  sample.image_id = record.image_id;
  sample.mask = compose_label_mask(layers, image->height, image->width);
  sample.image = std::move(*image);
  for (const auto& [class_id, _] : record.rle_by_class) sample.defect_classes_present.insert(class_id);
  return sample;
}

int count_regions_4conn(const BinaryMask& mask) {
  const int h = mask.height, w = mask.width;
  std::vector<uint8_t> seen(static_cast<size_t>(h) * w, 0);
  int regions = 0;
  std::deque<std::pair<int, int>> queue;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const size_t idx = static_cast<size_t>(r) * w + c;
      if (!mask.pixels[idx] || seen[idx]) continue;
      ++regions;
      seen[idx] = 1;
      queue.emplace_back(r, c);
      while (!queue.empty()) {
        auto [cr, cc] = queue.front();
        queue.pop_front();
        constexpr int dr[4] = {-1, 1, 0, 0};
        constexpr int dc[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int nr = cr + dr[k], nc = cc + dc[k];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          const size_t nidx = static_cast<size_t>(nr) * w + nc;
          if (!mask.pixels[nidx] || seen[nidx]) continue;
          seen[nidx] = 1;
          queue.emplace_back(nr, nc);
        }
      }
    }
  }
  return regions;
}

DefectStats compute_stats(const DatasetIndex& index, std::vector<LoadIssue>* issues,
                          std::optional<Split> only_split) {
  DefectStats stats;
  for (const auto& record : index.records) {
    if (only_split) {
      auto it = index.split_assignment.find(record.image_id);
      Split assigned = it == index.split_assignment.end() ? Split::kTrain : it->second;
      if (assigned != *only_split) continue;
    }
    ++stats.image_count;
    if (record.rle_by_class.empty()) continue;

    auto image = load_image(record.image_path);
    if (!image) {
      if (issues) issues->push_back({record.image_id, "unreadable image: " + record.image_path});
      continue;
    }

    bool any = false;
    for (const auto& [class_id, text] : record.rle_by_class) {
      BinaryMask layer;
      try {
        layer = rle_decode(parse_rle(text), image->height, image->width);
      } catch (const std::exception& e) {
        if (issues)
          issues->push_back(
              {record.image_id, "class " + std::to_string(class_id) + ": " + e.what()});
        continue;
      }
      const int64_t area = layer.area();
      if (area == 0) continue;
      const int segments = count_regions_4conn(layer);
      const int k = class_id - 1;
      stats.region_count[k] += segments;
      stats.area_pixels[k] += area;
      stats.segments_per_image[k][segments] += 1;
      any = true;
    }
    if (any) ++stats.images_with_defect;
  }

  stats.total_regions = 0;
  int64_t total_area = 0;
  for (int k = 0; k < 4; ++k) {
    stats.total_regions += stats.region_count[k];
    total_area += stats.area_pixels[k];
  }
  for (int k = 0; k < 4; ++k) {
    stats.count_share[k] = stats.total_regions > 0
                               ? static_cast<double>(stats.region_count[k]) /
                                     static_cast<double>(stats.total_regions)
                               : 0.0;
    stats.area_share[k] = total_area > 0 ? static_cast<double>(stats.area_pixels[k]) /
                                               static_cast<double>(total_area)
                                         : 0.0;
  }
  return stats;
}

nn::Tensor image_to_tensor(const ImageU8& img, const std::array<double, 3>& mean,
                           const std::array<double, 3>& std) {
  nn::Tensor t(1, 3, img.height, img.width);
  for (int ch = 0; ch < 3; ++ch) {
    double* plane = t.plane(0, ch);
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c)
        plane[static_cast<size_t>(r) * img.width + c] =
            (img.at(r, c, ch) / 255.0 - mean[static_cast<size_t>(ch)]) /
            std[static_cast<size_t>(ch)];
  }
  return t;
}

BatchStream::BatchStream(const DatasetIndex& index, BatchOptions options)
    : index_(index), options_(std::move(options)) {
  if (options_.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (options_.target_h < 1 || options_.target_w < 1)
    throw ValidationError("batch target dimensions must be >= 1");
  reset();
}

void BatchStream::reset() {
  order_ = index_.split_indices(options_.split);
  if (options_.shuffle_seed >= 0) {
    Rng rng(static_cast<uint64_t>(options_.shuffle_seed));
    rng.shuffle(order_);
  }
  cursor_ = 0;
  ordinal_ = 0;
}

std::optional<Batch> BatchStream::next() {
  std::vector<SampleRecord> samples;
  std::vector<uint64_t> ordinals;
  while (cursor_ < order_.size() && static_cast<int>(samples.size()) < options_.batch_size) {
    const auto& record = index_.records[order_[cursor_++]];
    const uint64_t ordinal = ordinal_++;
    auto sample = materialize(record, &issues_);
    if (!sample) continue;  // skip unreadable, issue already logged
    samples.push_back(std::move(*sample));
    ordinals.push_back(ordinal);
  }
  if (samples.empty()) return std::nullopt;

  Batch batch;
  batch.images = nn::Tensor(static_cast<int>(samples.size()), 3, options_.target_h,
                            options_.target_w);
  for (size_t i = 0; i < samples.size(); ++i) {
    auto& sample = samples[i];
    if (options_.transform) options_.transform(sample.image, sample.mask, ordinals[i]);
    if (sample.image.height != options_.target_h || sample.image.width != options_.target_w) {
      sample.image = resize_image(sample.image, options_.target_h, options_.target_w);
      sample.mask = resize_mask(sample.mask, options_.target_h, options_.target_w);
    }
    nn::Tensor t = image_to_tensor(sample.image, options_.mean, options_.std);
    std::copy(t.data(), t.data() + t.numel(),
              batch.images.data() + static_cast<int64_t>(i) * t.numel());
    batch.masks.push_back(std::move(sample.mask));
    batch.image_ids.push_back(std::move(sample.image_id));
  }
  return batch;
}

}  // namespace steelseg
