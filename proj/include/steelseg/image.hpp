#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steelseg/mask.hpp"

namespace steelseg {

// Row-major H x W x 3 RGB image, 8-bit.
struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> rgb;  // size height * width * 3

  ImageU8() = default;
  ImageU8(int h, int w) : height(h), width(w), rgb(static_cast<size_t>(h) * w * 3, 0) {}

  uint8_t& at(int r, int c, int ch) { return rgb[(static_cast<size_t>(r) * width + c) * 3 + ch]; }
  uint8_t at(int r, int c, int ch) const {
    return rgb[(static_cast<size_t>(r) * width + c) * 3 + ch];
  }
  bool operator==(const ImageU8&) const = default;
};

// Bilinear resize with half-pixel-center sampling (edge-clamped). The mask
// counterpart is resize_mask() in mask.hpp, which uses the same center
// convention with nearest-neighbor lookup.
ImageU8 resize_image(const ImageU8& img, int new_height, int new_width);

// Rotation by `degrees` CCW about the image center, same canvas size.
// Out-of-canvas samples are black (image) / background (mask). Both overloads
// share one inverse mapping so image and mask stay aligned.
ImageU8 rotate_image(const ImageU8& img, double degrees);
LabelMask rotate_mask(const LabelMask& mask, double degrees);

ImageU8 flip_vertical(const ImageU8& img);
LabelMask flip_vertical(const LabelMask& mask);

ImageU8 crop_image(const ImageU8& img, int top, int left, int out_h, int out_w);
LabelMask crop_mask(const LabelMask& mask, int top, int left, int out_h, int out_w);

// File I/O (any format OpenCV can decode/encode; color order converted to RGB).
std::optional<ImageU8> load_image(const std::string& path);
bool save_image(const ImageU8& img, const std::string& path);

// Grayscale PNG with raw label values 0..4 per pixel.
bool save_mask_png(const LabelMask& mask, const std::string& path);
std::optional<LabelMask> load_mask_png(const std::string& path);

// Fixed per-class overlay palette (class 1..4), documented in the README.
std::array<uint8_t, 3> class_color(int class_id);
ImageU8 overlay_mask(const ImageU8& img, const LabelMask& mask, double alpha = 0.5);

}  // namespace steelseg
