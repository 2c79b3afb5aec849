#pragma once

#include <array>
#include <set>
#include <vector>

#include "steelseg/dataset.hpp"
#include "steelseg/image.hpp"
#include "steelseg/mask.hpp"
#include "steelseg/rng.hpp"

namespace steelseg {

enum class AugKind { kCrop, kVerticalFlip, kRotate };

// One applied transform with enough parameters to replay it exactly.
struct AugAction {
  AugKind kind = AugKind::kVerticalFlip;
  int top = 0, left = 0, height = 0, width = 0;  // crop window
  double angle_deg = 0.0;                        // rotation
};

// Class-balanced augmentation: rare classes trigger more often. The trigger
// probability for a sample is max over its present classes of (1 - share_c);
// defect-free samples pass through untouched. When triggered exactly one
// action is drawn according to action_weights (crop, vertical flip, rotate).
struct AugmentationPolicy {
  std::array<double, 4> class_share{};             // classes 1..4
  std::array<double, 3> action_weights{1, 1, 1};   // crop, vflip, rotate
  double rotation_range_deg = 15.0;
  int crop_h = 256;
  int crop_w = 256;
};

void validate_policy(const AugmentationPolicy& policy);

// Shares come from the per-class region counts of the training data.
AugmentationPolicy derive_policy(const DefectStats& stats);

double trigger_probability(const AugmentationPolicy& policy,
                           const std::set<int>& classes_present);

struct AugmentResult {
  bool applied = false;
  std::vector<AugAction> actions;
};

// Mutates image and mask in place; both always stay aligned.
AugmentResult maybe_augment(ImageU8& image, LabelMask& mask,
                            const std::set<int>& classes_present,
                            const AugmentationPolicy& policy, Rng& rng);

void apply_action(const AugAction& action, ImageU8& image, LabelMask& mask);

}  // namespace steelseg
