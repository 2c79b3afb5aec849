#include "steelseg/mask.hpp"

#include <numeric>

#include "steelseg/errors.hpp"

namespace steelseg {

ClassId::ClassId(int value) : value_(value) {
  if (value < 1 || value > kNumDefectClasses)
    throw ValidationError("class id must be in 1..4, got " + std::to_string(value));
}

int64_t BinaryMask::area() const {
  return std::accumulate(pixels.begin(), pixels.end(), int64_t{0});
}

std::set<int> LabelMask::label_set() const {
  std::set<int> s;
  for (uint8_t v : labels) s.insert(v);
  return s;
}

BinaryMask LabelMask::class_mask(int label) const {
  BinaryMask m(height, width);
  for (size_t i = 0; i < labels.size(); ++i) m.pixels[i] = (labels[i] == label) ? 1 : 0;
  return m;
}

LabelMask compose_label_mask(const std::map<ClassId, BinaryMask>& per_class, int height,
                             int width) {
  if (height <= 0 || width <= 0) throw ValidationError("compose_label_mask: non-positive dims");
  LabelMask out(height, width);
  // std::map iterates in ascending class id, so later (higher) classes
  // overwrite earlier ones: highest class id wins on overlap.
  for (const auto& [cls, mask] : per_class) {
    if (mask.height != height || mask.width != width)
      throw ValidationError("compose_label_mask: mask size " + std::to_string(mask.height) +
                            "x" + std::to_string(mask.width) + " != " + std::to_string(height) +
                            "x" + std::to_string(width));
    for (size_t i = 0; i < mask.pixels.size(); ++i)
      if (mask.pixels[i]) out.labels[i] = static_cast<uint8_t>(cls.value());
  }
  return out;
}

LabelMask resize_mask(const LabelMask& mask, int new_height, int new_width) {
  if (new_height <= 0 || new_width <= 0)
    throw ValidationError("resize_mask: non-positive target dims");
  if (new_height == mask.height && new_width == mask.width) return mask;
  LabelMask out(new_height, new_width);
  const double sy = static_cast<double>(mask.height) / new_height;
  const double sx = static_cast<double>(mask.width) / new_width;
  for (int r = 0; r < new_height; ++r) {
    // Pixel-center mapping: output center (r + 0.5) lands at source row
    // (r + 0.5) * sy; the containing source pixel is its floor.
    int sr = static_cast<int>((r + 0.5) * sy);
    if (sr >= mask.height) sr = mask.height - 1;
    for (int c = 0; c < new_width; ++c) {
      int sc = static_cast<int>((c + 0.5) * sx);
      if (sc >= mask.width) sc = mask.width - 1;
      out.at(r, c) = mask.at(sr, sc);
    }
  }
  return out;
}

}  // namespace steelseg
