#include "steelseg/plot.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace steelseg {
namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 60;

const cv::Scalar kBarColor(180, 119, 31);   // BGR
const cv::Scalar kLineColor(14, 127, 255);
const cv::Scalar kAxisColor(60, 60, 60);
const cv::Scalar kGridColor(220, 220, 220);

cv::Mat blank_canvas() { return cv::Mat(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255)); }

void draw_title(cv::Mat& canvas, const std::string& title) {
  cv::putText(canvas, title, {kMarginLeft, 30}, cv::FONT_HERSHEY_SIMPLEX, 0.7, kAxisColor, 1,
              cv::LINE_AA);
}

void draw_axes(cv::Mat& canvas) {
  cv::line(canvas, {kMarginLeft, kMarginTop}, {kMarginLeft, kHeight - kMarginBottom}, kAxisColor);
  cv::line(canvas, {kMarginLeft, kHeight - kMarginBottom},
           {kWidth - kMarginRight, kHeight - kMarginBottom}, kAxisColor);
}

}  // namespace

bool plot_iou_histogram(const std::array<int64_t, 10>& bins, const std::string& title,
                        const std::string& path) {
  cv::Mat canvas = blank_canvas();
  draw_title(canvas, title);

  const int64_t peak = std::max<int64_t>(1, *std::max_element(bins.begin(), bins.end()));
  const int plot_w = kWidth - kMarginLeft - kMarginRight;
  const int plot_h = kHeight - kMarginTop - kMarginBottom;
  const double bar_w = plot_w / 10.0;

  for (int g = 0; g <= 4; ++g) {
    const int y = kHeight - kMarginBottom - g * plot_h / 4;
    cv::line(canvas, {kMarginLeft, y}, {kWidth - kMarginRight, y}, kGridColor);
    char label[32];
    std::snprintf(label, sizeof(label), "%lld", static_cast<long long>(peak * g / 4));
    cv::putText(canvas, label, {8, y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.45, kAxisColor, 1,
                cv::LINE_AA);
  }

  for (int b = 0; b < 10; ++b) {
    const int x0 = kMarginLeft + static_cast<int>(b * bar_w) + 3;
    const int x1 = kMarginLeft + static_cast<int>((b + 1) * bar_w) - 3;
    const int h = static_cast<int>(std::llround(
        static_cast<double>(bins[static_cast<size_t>(b)]) / static_cast<double>(peak) * plot_h));
    const int y0 = kHeight - kMarginBottom - h;
    cv::rectangle(canvas, {x0, y0}, {x1, kHeight - kMarginBottom}, kBarColor, cv::FILLED);
    char label[16];
    std::snprintf(label, sizeof(label), "%.1f", b / 10.0);
    cv::putText(canvas, label, {x0, kHeight - kMarginBottom + 20}, cv::FONT_HERSHEY_SIMPLEX,
                0.45, kAxisColor, 1, cv::LINE_AA);
  }
  cv::putText(canvas, "IoU", {kWidth / 2 - 15, kHeight - 15}, cv::FONT_HERSHEY_SIMPLEX, 0.55,
              kAxisColor, 1, cv::LINE_AA);
  draw_axes(canvas);
  return cv::imwrite(path, canvas);
}

bool plot_loss_curve(const std::vector<train::LossRecord>& records, const std::string& path) {
  cv::Mat canvas = blank_canvas();
  draw_title(canvas, "Training loss");
  draw_axes(canvas);

  if (!records.empty()) {
    double lo = records[0].loss, hi = records[0].loss;
    for (const auto& r : records) {
      lo = std::min(lo, r.loss);
      hi = std::max(hi, r.loss);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;

    const int plot_w = kWidth - kMarginLeft - kMarginRight;
    const int plot_h = kHeight - kMarginTop - kMarginBottom;
    const int64_t s0 = records.front().step;
    const int64_t s1 = std::max(records.back().step, s0 + 1);

    auto to_point = [&](const train::LossRecord& r) {
      const int x = kMarginLeft + static_cast<int>(static_cast<double>(r.step - s0) /
                                                   static_cast<double>(s1 - s0) * plot_w);
      const int y = kHeight - kMarginBottom -
                    static_cast<int>((r.loss - lo) / (hi - lo) * plot_h);
      return cv::Point(x, y);
    };

    for (size_t i = 1; i < records.size(); ++i)
      cv::line(canvas, to_point(records[i - 1]), to_point(records[i]), kLineColor, 2,
               cv::LINE_AA);

    char label[48];
    std::snprintf(label, sizeof(label), "%.4g", hi);
    cv::putText(canvas, label, {8, kMarginTop + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.45, kAxisColor,
                1, cv::LINE_AA);
    std::snprintf(label, sizeof(label), "%.4g", lo);
    cv::putText(canvas, label, {8, kHeight - kMarginBottom + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                kAxisColor, 1, cv::LINE_AA);
    std::snprintf(label, sizeof(label), "step %lld", static_cast<long long>(records.back().step));
    cv::putText(canvas, label, {kWidth - 170, kHeight - 15}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                kAxisColor, 1, cv::LINE_AA);
  }
  return cv::imwrite(path, canvas);
}

}  // namespace steelseg
