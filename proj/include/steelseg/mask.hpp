#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

namespace steelseg {

inline constexpr int kNumDefectClasses = 4;  // defect labels 1..4, background 0

// Defect class id, always in {1, 2, 3, 4}.
class ClassId {
 public:
  explicit ClassId(int value);
  int value() const { return value_; }
  bool operator<(const ClassId& o) const { return value_ < o.value_; }
  bool operator==(const ClassId& o) const { return value_ == o.value_; }

 private:
  int value_;
};

// Row-major H x W binary mask, entries 0/1.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;  // size height * width

  BinaryMask() = default;
  BinaryMask(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w, 0) {}

  uint8_t& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
  uint8_t at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
  int64_t area() const;
  bool operator==(const BinaryMask& o) const = default;
};

// Row-major H x W labeled mask; 0 = background, 1..4 = defect class.
struct LabelMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> labels;  // size height * width

  LabelMask() = default;
  LabelMask(int h, int w) : height(h), width(w), labels(static_cast<size_t>(h) * w, 0) {}

  uint8_t& at(int r, int c) { return labels[static_cast<size_t>(r) * width + c]; }
  uint8_t at(int r, int c) const { return labels[static_cast<size_t>(r) * width + c]; }

  std::set<int> label_set() const;
  // Binary mask of pixels equal to `label`.
  BinaryMask class_mask(int label) const;
  bool operator==(const LabelMask& o) const = default;
};

// Stack per-class binary masks into one labeled mask. Where several classes
// claim a pixel the highest class id wins; untouched pixels stay 0.
LabelMask compose_label_mask(const std::map<ClassId, BinaryMask>& per_class, int height,
                             int width);

// Nearest-neighbor label resize (pixel-center mapping). Never invents labels.
LabelMask resize_mask(const LabelMask& mask, int new_height, int new_width);

}  // namespace steelseg
