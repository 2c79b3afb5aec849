#include "steelseg/loss.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "steelseg/errors.hpp"

namespace steelseg {

double softmax_cross_entropy(const nn::Tensor& logits, const std::vector<LabelMask>& targets,
                             nn::Tensor* grad) {
  const int64_t b = logits.n(), cls = logits.c(), h = logits.h(), w = logits.w();
  if (static_cast<int64_t>(targets.size()) != b)
    throw ValidationError("loss: batch size mismatch between logits and targets");
  for (const auto& t : targets)
    if (t.height != h || t.width != w)
      throw ValidationError("loss: target mask shape does not match logits");

  if (grad) {
    *grad = nn::Tensor(b, cls, h, w);
  }
  const double inv_count = 1.0 / static_cast<double>(b * h * w);
  double loss = 0.0;
  std::vector<double> p(static_cast<size_t>(cls));

  for (int64_t n = 0; n < b; ++n) {
    const LabelMask& target = targets[static_cast<size_t>(n)];
    for (int64_t r = 0; r < h; ++r) {
      for (int64_t c = 0; c < w; ++c) {
        const int label = target.at(static_cast<int>(r), static_cast<int>(c));
        if (label >= cls)
          throw ValidationError("loss: label " + std::to_string(label) +
                                " >= num_classes " + std::to_string(cls));
        double mx = logits.at(n, 0, r, c);
        for (int64_t k = 1; k < cls; ++k) mx = std::max(mx, logits.at(n, k, r, c));
        double z = 0.0;
        for (int64_t k = 0; k < cls; ++k) {
          p[static_cast<size_t>(k)] = std::exp(logits.at(n, k, r, c) - mx);
          z += p[static_cast<size_t>(k)];
        }
        loss -= (logits.at(n, label, r, c) - mx - std::log(z));
        if (grad) {
          for (int64_t k = 0; k < cls; ++k) {
            double g = p[static_cast<size_t>(k)] / z;
            if (k == label) g -= 1.0;
            grad->at(n, k, r, c) = g * inv_count;
          }
        }
      }
    }
  }
  return loss * inv_count;
}

}  // namespace steelseg
