#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "steelseg/image.hpp"

namespace steelseg {

std::optional<ImageU8> load_image(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) return std::nullopt;
  ImageU8 out(bgr.rows, bgr.cols);
  for (int r = 0; r < bgr.rows; ++r)
    for (int c = 0; c < bgr.cols; ++c) {
      const cv::Vec3b& px = bgr.at<cv::Vec3b>(r, c);
      out.at(r, c, 0) = px[2];
      out.at(r, c, 1) = px[1];
      out.at(r, c, 2) = px[0];
    }
  return out;
}

bool save_image(const ImageU8& img, const std::string& path) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      bgr.at<cv::Vec3b>(r, c) = {img.at(r, c, 2), img.at(r, c, 1), img.at(r, c, 0)};
  return cv::imwrite(path, bgr);
}

bool save_mask_png(const LabelMask& mask, const std::string& path) {
  cv::Mat gray(mask.height, mask.width, CV_8UC1);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c) gray.at<uint8_t>(r, c) = mask.at(r, c);
  return cv::imwrite(path, gray);
}

std::optional<LabelMask> load_mask_png(const std::string& path) {
  cv::Mat gray = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (gray.empty()) return std::nullopt;
  LabelMask out(gray.rows, gray.cols);
  for (int r = 0; r < gray.rows; ++r)
    for (int c = 0; c < gray.cols; ++c) out.at(r, c) = gray.at<uint8_t>(r, c);
  return out;
}

}  // namespace steelseg
