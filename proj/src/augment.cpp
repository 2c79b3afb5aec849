#include "steelseg/augment.hpp"

#include <algorithm>

#include "steelseg/errors.hpp"

namespace steelseg {

void validate_policy(const AugmentationPolicy& policy) {
  for (double p : policy.class_share)
    if (p < 0.0 || p > 1.0) throw ValidationError("class share outside [0, 1]");
  double wsum = 0.0;
  for (double w : policy.action_weights) {
    if (w < 0.0) throw ValidationError("action weights must be non-negative");
    wsum += w;
  }
  if (wsum <= 0.0) throw ValidationError("action weights must not all be zero");
  if (policy.rotation_range_deg < 0.0) throw ValidationError("rotation range must be >= 0");
  if (policy.crop_h < 1 || policy.crop_w < 1) throw ValidationError("crop size must be >= 1");
}

AugmentationPolicy derive_policy(const DefectStats& stats) {
  if (stats.total_regions <= 0)
    throw ValidationError("cannot derive augmentation policy: no defect regions in stats");
  AugmentationPolicy policy;
  policy.class_share = stats.count_share;
  return policy;
}

double trigger_probability(const AugmentationPolicy& policy,
                           const std::set<int>& classes_present) {
  double trigger = 0.0;
  for (int c : classes_present) {
    if (c < 1 || c > 4) throw ValidationError("class id outside 1..4");
    trigger = std::max(trigger, 1.0 - policy.class_share[static_cast<size_t>(c - 1)]);
  }
  return trigger;
}

void apply_action(const AugAction& action, ImageU8& image, LabelMask& mask) {
  switch (action.kind) {
    case AugKind::kCrop:
      image = crop_image(image, action.top, action.left, action.height, action.width);
      mask = crop_mask(mask, action.top, action.left, action.height, action.width);
      break;
    case AugKind::kVerticalFlip:
      image = flip_vertical(image);
      mask = flip_vertical(mask);
      break;
    case AugKind::kRotate:
      image = rotate_image(image, action.angle_deg);
      mask = rotate_mask(mask, action.angle_deg);
      break;
  }
}

AugmentResult maybe_augment(ImageU8& image, LabelMask& mask,
                            const std::set<int>& classes_present,
                            const AugmentationPolicy& policy, Rng& rng) {
  validate_policy(policy);
  AugmentResult result;
  if (classes_present.empty()) return result;  // defect-free: leave untouched

  const double trigger = trigger_probability(policy, classes_present);
  if (rng.uniform() >= trigger) return result;

  const auto& w = policy.action_weights;
  const double wsum = w[0] + w[1] + w[2];
  const double pick = rng.uniform() * wsum;

  AugAction action;
  if (pick < w[0]) {
    action.kind = AugKind::kCrop;
    action.height = std::min(policy.crop_h, image.height);
    action.width = std::min(policy.crop_w, image.width);
    action.top = static_cast<int>(rng.uniform_int(image.height - action.height + 1));
    action.left = static_cast<int>(rng.uniform_int(image.width - action.width + 1));
  } else if (pick < w[0] + w[1]) {
    action.kind = AugKind::kVerticalFlip;
  } else {
    action.kind = AugKind::kRotate;
    action.angle_deg = (2.0 * rng.uniform() - 1.0) * policy.rotation_range_deg;
  }

  apply_action(action, image, mask);
  result.applied = true;
  result.actions.push_back(action);
  return result;
}

}  // namespace steelseg
