#pragma once

#include <vector>

#include "steelseg/mask.hpp"
#include "steelseg/nn/tensor.hpp"

namespace steelseg {

// Mean per-pixel softmax cross-entropy of B x C x H x W logits against B
// labeled masks. When grad is non-null it receives d loss / d logits.
// Labels >= C throw a ValidationError naming the offending label.
double softmax_cross_entropy(const nn::Tensor& logits, const std::vector<LabelMask>& targets,
                             nn::Tensor* grad = nullptr);

}  // namespace steelseg
