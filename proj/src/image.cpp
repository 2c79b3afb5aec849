#include "steelseg/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "steelseg/errors.hpp"

namespace steelseg {

ImageU8 resize_image(const ImageU8& img, int new_height, int new_width) {
  if (new_height <= 0 || new_width <= 0)
    throw ValidationError("resize_image: non-positive target dims");
  if (new_height == img.height && new_width == img.width) return img;
  ImageU8 out(new_height, new_width);
  const double sy = static_cast<double>(img.height) / new_height;
  const double sx = static_cast<double>(img.width) / new_width;
  for (int r = 0; r < new_height; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::clamp(y0, 0, img.height - 1);
    int y1c = std::clamp(y0 + 1, 0, img.height - 1);
    for (int c = 0; c < new_width; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::clamp(x0, 0, img.width - 1);
      int x1c = std::clamp(x0 + 1, 0, img.width - 1);
      for (int ch = 0; ch < 3; ++ch) {
        double v = (1 - wy) * ((1 - wx) * img.at(y0c, x0c, ch) + wx * img.at(y0c, x1c, ch)) +
                   wy * ((1 - wx) * img.at(y1c, x0c, ch) + wx * img.at(y1c, x1c, ch));
        out.at(r, c, ch) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

namespace {

// Inverse map of a CCW rotation about the pixel-center midpoint: the source
// coordinate whose value lands at output (r, c).
struct RotationMap {
  double cos_a, sin_a, cy, cx;
  explicit RotationMap(int h, int w, double degrees)
      : cos_a(std::cos(degrees * M_PI / 180.0)),
        sin_a(std::sin(degrees * M_PI / 180.0)),
        cy((h - 1) * 0.5),
        cx((w - 1) * 0.5) {}
  void source(int r, int c, double& sr, double& sc) const {
    double dy = r - cy, dx = c - cx;
    sr = cy + cos_a * dy - sin_a * dx;
    sc = cx + sin_a * dy + cos_a * dx;
  }
};

}  // namespace

ImageU8 rotate_image(const ImageU8& img, double degrees) {
  ImageU8 out(img.height, img.width);
  RotationMap map(img.height, img.width, degrees);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      double sr, sc;
      map.source(r, c, sr, sc);
      int y0 = static_cast<int>(std::floor(sr));
      int x0 = static_cast<int>(std::floor(sc));
      double wy = sr - y0, wx = sc - x0;
      for (int ch = 0; ch < 3; ++ch) {
        double v = 0;
        for (int dy = 0; dy <= 1; ++dy)
          for (int dx = 0; dx <= 1; ++dx) {
            int yy = y0 + dy, xx = x0 + dx;
            double wgt = (dy ? wy : 1 - wy) * (dx ? wx : 1 - wx);
            if (yy >= 0 && yy < img.height && xx >= 0 && xx < img.width)
              v += wgt * img.at(yy, xx, ch);
          }
        out.at(r, c, ch) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  return out;
}

LabelMask rotate_mask(const LabelMask& mask, double degrees) {
  LabelMask out(mask.height, mask.width);
  RotationMap map(mask.height, mask.width, degrees);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c) {
      double sr, sc;
      map.source(r, c, sr, sc);
      int yy = static_cast<int>(std::lround(sr));
      int xx = static_cast<int>(std::lround(sc));
      out.at(r, c) =
          (yy >= 0 && yy < mask.height && xx >= 0 && xx < mask.width) ? mask.at(yy, xx) : 0;
    }
  return out;
}

ImageU8 flip_vertical(const ImageU8& img) {
  ImageU8 out(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    std::copy_n(&img.rgb[static_cast<size_t>(img.height - 1 - r) * img.width * 3],
                static_cast<size_t>(img.width) * 3, &out.rgb[static_cast<size_t>(r) * img.width * 3]);
  return out;
}

LabelMask flip_vertical(const LabelMask& mask) {
  LabelMask out(mask.height, mask.width);
  for (int r = 0; r < mask.height; ++r)
    std::copy_n(&mask.labels[static_cast<size_t>(mask.height - 1 - r) * mask.width], mask.width,
                &out.labels[static_cast<size_t>(r) * mask.width]);
  return out;
}

ImageU8 crop_image(const ImageU8& img, int top, int left, int out_h, int out_w) {
  if (top < 0 || left < 0 || top + out_h > img.height || left + out_w > img.width)
    throw ValidationError("crop_image: window out of bounds");
  ImageU8 out(out_h, out_w);
  for (int r = 0; r < out_h; ++r)
    std::copy_n(&img.rgb[(static_cast<size_t>(top + r) * img.width + left) * 3],
                static_cast<size_t>(out_w) * 3, &out.rgb[static_cast<size_t>(r) * out_w * 3]);
  return out;
}

LabelMask crop_mask(const LabelMask& mask, int top, int left, int out_h, int out_w) {
  if (top < 0 || left < 0 || top + out_h > mask.height || left + out_w > mask.width)
    throw ValidationError("crop_mask: window out of bounds");
  LabelMask out(out_h, out_w);
  for (int r = 0; r < out_h; ++r)
    std::copy_n(&mask.labels[static_cast<size_t>(top + r) * mask.width + left], out_w,
                &out.labels[static_cast<size_t>(r) * out_w]);
  return out;
}

std::array<uint8_t, 3> class_color(int class_id) {
  static const std::array<std::array<uint8_t, 3>, 4> palette = {{
      {230, 25, 75},   // class 1: red
      {60, 180, 75},   // class 2: green
      {0, 130, 200},   // class 3: blue
      {255, 225, 25},  // class 4: yellow
  }};
  if (class_id < 1 || class_id > 4) throw ValidationError("class_color: id out of range");
  return palette[class_id - 1];
}

ImageU8 overlay_mask(const ImageU8& img, const LabelMask& mask, double alpha) {
  if (img.height != mask.height || img.width != mask.width)
    throw ValidationError("overlay_mask: image/mask size mismatch");
  ImageU8 out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      int label = mask.at(r, c);
      if (!label) continue;
      auto color = class_color(label);
      for (int ch = 0; ch < 3; ++ch)
        out.at(r, c, ch) = static_cast<uint8_t>(
            std::lround((1 - alpha) * img.at(r, c, ch) + alpha * color[ch]));
    }
  return out;
}

}  // namespace steelseg
