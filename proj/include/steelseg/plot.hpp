#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "steelseg/train.hpp"

namespace steelseg {

// Ten-bin IoU distribution as a bar chart PNG.
bool plot_iou_histogram(const std::array<int64_t, 10>& bins, const std::string& title,
                        const std::string& path);

// Loss-vs-step line plot PNG.
bool plot_loss_curve(const std::vector<train::LossRecord>& records, const std::string& path);

}  // namespace steelseg
