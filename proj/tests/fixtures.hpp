// Synthetic dataset fixtures shared by the test binaries.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "steelseg/image.hpp"
#include "steelseg/mask.hpp"
#include "steelseg/rle.hpp"
#include "steelseg/rng.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline fs::path fresh_dir(const std::string& tag) {
  static uint64_t counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("steelseg_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Sample {
  std::string image_id;
  steelseg::ImageU8 image;
  steelseg::LabelMask mask;
};

// One geometric defect per class: rectangle (1), horizontal stripe (2),
// disk (3), diagonal band (4). Each class gets a distinctive intensity so a
// small model can overfit the mapping quickly.
inline Sample make_sample(int idx, int h, int w, steelseg::Rng& rng) {
  Sample s;
  s.image_id = "img_" + std::to_string(idx) + ".png";
  s.image = steelseg::ImageU8(h, w);
  s.mask = steelseg::LabelMask(h, w);

  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch)
        s.image.at(r, c, ch) =
            static_cast<uint8_t>(100 + static_cast<int>(rng.uniform_int(20)));

  const int cls = idx % 4 + 1;
  const int cy = static_cast<int>(rng.uniform_int(h / 2)) + h / 4;
  const int cx = static_cast<int>(rng.uniform_int(w / 2)) + w / 4;
  const int size = std::max(4, h / 6 + static_cast<int>(rng.uniform_int(h / 8 + 1)));
  // Per-class grayscale signatures far apart in intensity.
  const uint8_t shade[5] = {0, 230, 25, 180, 70};

  auto paint = [&](int r, int c) {
    if (r < 0 || r >= h || c < 0 || c >= w) return;
    s.mask.at(r, c) = static_cast<uint8_t>(cls);
    for (int ch = 0; ch < 3; ++ch) s.image.at(r, c, ch) = shade[cls];
  };

  switch (cls) {
    case 1:
      for (int r = cy - size / 2; r < cy + size / 2; ++r)
        for (int c = cx - size / 2; c < cx + size / 2; ++c) paint(r, c);
      break;
    case 2:
      for (int r = cy - size / 4; r < cy + size / 4; ++r)
        for (int c = 0; c < w; ++c) paint(r, c);
      break;
    case 3:
      for (int r = cy - size / 2; r <= cy + size / 2; ++r)
        for (int c = cx - size / 2; c <= cx + size / 2; ++c)
          if ((r - cy) * (r - cy) + (c - cx) * (c - cx) <= size * size / 4) paint(r, c);
      break;
    case 4:
      for (int d = -w; d < w; ++d)
        for (int t = 0; t < size / 2; ++t) paint(cy + d + t, cx + d);
      break;
  }
  return s;
}

// Writes images + train.csv in the layout the loader expects; returns the
// ground-truth samples (ordered by image id, matching directory order).
inline std::vector<Sample> write_dataset(const fs::path& root, int n_images, int h, int w,
                                         uint64_t seed) {
  fs::create_directories(root / "train_images");
  steelseg::Rng rng(seed);
  std::vector<Sample> samples;
  std::ofstream csv(root / "train.csv");
  csv << "ImageId,ClassId,EncodedPixels\n";
  for (int i = 0; i < n_images; ++i) {
    Sample s = make_sample(i, h, w, rng);
    steelseg::save_image(s.image, (root / "train_images" / s.image_id).string());
    for (int cls : s.mask.label_set()) {
      if (cls == 0) continue;
      const auto rle = steelseg::rle_encode(s.mask.class_mask(cls));
      csv << s.image_id << ',' << cls << ',' << steelseg::format_rle(rle) << '\n';
    }
    samples.push_back(std::move(s));
  }
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.image_id < b.image_id; });
  return samples;
}

inline steelseg::BinaryMask random_binary_mask(int h, int w, steelseg::Rng& rng,
                                               double density = 0.35) {
  steelseg::BinaryMask m(h, w);
  for (auto& v : m.pixels) v = rng.uniform() < density ? 1 : 0;
  return m;
}

inline steelseg::LabelMask random_label_mask(int h, int w, steelseg::Rng& rng,
                                             double background = 0.5) {
  steelseg::LabelMask m(h, w);
  for (auto& v : m.labels)
    v = rng.uniform() < background ? 0 : static_cast<uint8_t>(1 + rng.uniform_int(4));
  return m;
}

}  // namespace fixtures
