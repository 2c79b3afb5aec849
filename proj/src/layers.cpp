#include "steelseg/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "steelseg/errors.hpp"

namespace steelseg::nn {

namespace {
int64_t conv_out_dim(int64_t in, int kernel, int stride, int padding, int dilation) {
  return (in + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
}
}  // namespace

void initialize_params(const std::vector<NamedParam>& params, Rng& rng) {
  for (const NamedParam& np : params) {
    Tensor& t = np.param->value;
    switch (np.param->init.kind) {
      case InitSpec::kKaimingConv: {
        double std = std::sqrt(2.0 / np.param->init.fan);
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, std);
        break;
      }
      case InitSpec::kZero:
        t.zero();
        break;
      case InitSpec::kOne:
        t.fill(1.0);
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int64_t in_ch, int64_t out_ch, int kernel, int stride, int padding, int dilation,
               int64_t groups, bool bias)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      groups_(groups),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      dilation_(dilation),
      has_bias_(bias) {
  if (in_ch % groups != 0 || out_ch % groups != 0)
    throw ValidationError("conv: channels not divisible by groups");
  if (dilation < 1) throw ValidationError("conv: dilation must be >= 1");
  weight_.value = Tensor(out_ch, in_ch / groups, kernel, kernel);
  weight_.init = {InitSpec::kKaimingConv,
                  static_cast<double>(out_ch / groups) * kernel * kernel};
  if (has_bias_) {
    bias_.value = Tensor(out_ch, 1, 1, 1);
    bias_.init = {InitSpec::kZero, 0.0};
  }
}

void Conv2d::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".weight", &weight_});
  if (has_bias_) out.push_back({prefix + ".bias", &bias_});
}

void Conv2d::im2col(const Tensor& x, int64_t n, int64_t g, double* col, int64_t ho,
                    int64_t wo) const {
  const int64_t cg = in_ch_ / groups_;
  const int64_t hw = ho * wo;
  for (int64_t ci = 0; ci < cg; ++ci) {
    const double* plane = x.plane(n, g * cg + ci);
    for (int kr = 0; kr < kernel_; ++kr) {
      for (int kc = 0; kc < kernel_; ++kc) {
        double* dst = col + ((ci * kernel_ + kr) * kernel_ + kc) * hw;
        for (int64_t r = 0; r < ho; ++r) {
          int64_t ir = r * stride_ - padding_ + static_cast<int64_t>(kr) * dilation_;
          if (ir < 0 || ir >= x.h()) {
            std::fill(dst + r * wo, dst + (r + 1) * wo, 0.0);
            continue;
          }
          const double* src_row = plane + ir * x.w();
          for (int64_t c = 0; c < wo; ++c) {
            int64_t ic = c * stride_ - padding_ + static_cast<int64_t>(kc) * dilation_;
            dst[r * wo + c] = (ic >= 0 && ic < x.w()) ? src_row[ic] : 0.0;
          }
        }
      }
    }
  }
}

void Conv2d::col2im_acc(const double* col, Tensor& gx, int64_t n, int64_t g, int64_t ho,
                        int64_t wo) const {
  const int64_t cg = in_ch_ / groups_;
  const int64_t hw = ho * wo;
  for (int64_t ci = 0; ci < cg; ++ci) {
    double* plane = gx.plane(n, g * cg + ci);
    for (int kr = 0; kr < kernel_; ++kr) {
      for (int kc = 0; kc < kernel_; ++kc) {
        const double* src = col + ((ci * kernel_ + kr) * kernel_ + kc) * hw;
        for (int64_t r = 0; r < ho; ++r) {
          int64_t ir = r * stride_ - padding_ + static_cast<int64_t>(kr) * dilation_;
          if (ir < 0 || ir >= gx.h()) continue;
          double* dst_row = plane + ir * gx.w();
          for (int64_t c = 0; c < wo; ++c) {
            int64_t ic = c * stride_ - padding_ + static_cast<int64_t>(kc) * dilation_;
            if (ic >= 0 && ic < gx.w()) dst_row[ic] += src[r * wo + c];
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.c() != in_ch_)
    throw ValidationError("conv: expected " + std::to_string(in_ch_) + " input channels, got " +
                          std::to_string(x.c()));
  const int64_t ho = conv_out_dim(x.h(), kernel_, stride_, padding_, dilation_);
  const int64_t wo = conv_out_dim(x.w(), kernel_, stride_, padding_, dilation_);
  if (ho <= 0 || wo <= 0)
    throw ValidationError("conv: input " + x.shape_str() + " too small for kernel");
  Tensor y(x.n(), out_ch_, ho, wo);
  const int64_t cg = in_ch_ / groups_;
  const int64_t og = out_ch_ / groups_;
  const int64_t kk = cg * kernel_ * kernel_;
  std::vector<double> col(static_cast<size_t>(kk) * ho * wo);
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t g = 0; g < groups_; ++g) {
      im2col(x, n, g, col.data(), ho, wo);
      matmul(weight_.value.data() + g * og * kk, col.data(), y.plane(n, g * og), og, kk,
             ho * wo);
    }
    if (has_bias_) {
      for (int64_t oc = 0; oc < out_ch_; ++oc) {
        double b = bias_.value[oc];
        double* plane = y.plane(n, oc);
        for (int64_t i = 0; i < ho * wo; ++i) plane[i] += b;
      }
    }
  }
  if (training_) cached_input_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  const Tensor& x = cached_input_;
  const int64_t ho = gy.h(), wo = gy.w();
  const int64_t cg = in_ch_ / groups_;
  const int64_t og = out_ch_ / groups_;
  const int64_t kk = cg * kernel_ * kernel_;
  weight_.ensure_grad();
  if (has_bias_) bias_.ensure_grad();
  Tensor gx = Tensor::zeros_like(x);
  std::vector<double> col(static_cast<size_t>(kk) * ho * wo);
  std::vector<double> gcol(static_cast<size_t>(kk) * ho * wo);
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t g = 0; g < groups_; ++g) {
      im2col(x, n, g, col.data(), ho, wo);
      // dW += gy . col^T
      matmul_bt_acc(gy.plane(n, g * og), col.data(), weight_.grad.data() + g * og * kk, og,
                    ho * wo, kk);
      // dcol = W^T . gy
      matmul_at(weight_.value.data() + g * og * kk, gy.plane(n, g * og), gcol.data(), kk, og,
                ho * wo);
      col2im_acc(gcol.data(), gx, n, g, ho, wo);
    }
    if (has_bias_) {
      for (int64_t oc = 0; oc < out_ch_; ++oc) {
        const double* plane = gy.plane(n, oc);
        double s = 0;
        for (int64_t i = 0; i < ho * wo; ++i) s += plane[i];
        bias_.grad[oc] += s;
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int64_t channels, double eps, double momentum)
    : channels_(channels), eps_(eps), momentum_(momentum) {
  gamma_.value = Tensor(channels, 1, 1, 1);
  gamma_.init = {InitSpec::kOne, 0.0};
  beta_.value = Tensor(channels, 1, 1, 1);
  beta_.init = {InitSpec::kZero, 0.0};
  running_mean_.value = Tensor(channels, 1, 1, 1);
  running_mean_.trainable = false;
  running_mean_.init = {InitSpec::kZero, 0.0};
  running_var_.value = Tensor(channels, 1, 1, 1);
  running_var_.trainable = false;
  running_var_.init = {InitSpec::kOne, 0.0};
}

void BatchNorm2d::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".weight", &gamma_});
  out.push_back({prefix + ".bias", &beta_});
  out.push_back({prefix + ".running_mean", &running_mean_});
  out.push_back({prefix + ".running_var", &running_var_});
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  if (x.c() != channels_) throw ValidationError("batchnorm: channel mismatch");
  Tensor y = Tensor::zeros_like(x);
  const int64_t hw = x.h() * x.w();
  const int64_t m = x.n() * hw;
  if (training_) {
    cached_xhat_ = Tensor::zeros_like(x);
    cached_invstd_.assign(channels_, 0.0);
    for (int64_t c = 0; c < channels_; ++c) {
      double mean = 0;
      for (int64_t n = 0; n < x.n(); ++n) {
        const double* p = x.plane(n, c);
        for (int64_t i = 0; i < hw; ++i) mean += p[i];
      }
      mean /= m;
      double var = 0;
      for (int64_t n = 0; n < x.n(); ++n) {
        const double* p = x.plane(n, c);
        for (int64_t i = 0; i < hw; ++i) {
          double d = p[i] - mean;
          var += d * d;
        }
      }
      var /= m;
      double invstd = 1.0 / std::sqrt(var + eps_);
      cached_invstd_[c] = invstd;
      double g = gamma_.value[c], b = beta_.value[c];
      for (int64_t n = 0; n < x.n(); ++n) {
        const double* p = x.plane(n, c);
        double* xh = cached_xhat_.plane(n, c);
        double* py = y.plane(n, c);
        for (int64_t i = 0; i < hw; ++i) {
          xh[i] = (p[i] - mean) * invstd;
          py[i] = g * xh[i] + b;
        }
      }
      running_mean_.value[c] = (1 - momentum_) * running_mean_.value[c] + momentum_ * mean;
      double var_unbiased = (m > 1) ? var * m / (m - 1) : var;
      running_var_.value[c] = (1 - momentum_) * running_var_.value[c] + momentum_ * var_unbiased;
    }
  } else {
    for (int64_t c = 0; c < channels_; ++c) {
      double invstd = 1.0 / std::sqrt(running_var_.value[c] + eps_);
      double g = gamma_.value[c], b = beta_.value[c], mean = running_mean_.value[c];
      for (int64_t n = 0; n < x.n(); ++n) {
        const double* p = x.plane(n, c);
        double* py = y.plane(n, c);
        for (int64_t i = 0; i < hw; ++i) py[i] = g * (p[i] - mean) * invstd + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
  gamma_.ensure_grad();
  beta_.ensure_grad();
  Tensor gx = Tensor::zeros_like(gy);
  const int64_t hw = gy.h() * gy.w();
  const int64_t m = gy.n() * hw;
  for (int64_t c = 0; c < channels_; ++c) {
    double g = gamma_.value[c];
    double sum_gy = 0, sum_gy_xhat = 0;
    for (int64_t n = 0; n < gy.n(); ++n) {
      const double* pg = gy.plane(n, c);
      const double* xh = cached_xhat_.plane(n, c);
      for (int64_t i = 0; i < hw; ++i) {
        sum_gy += pg[i];
        sum_gy_xhat += pg[i] * xh[i];
      }
    }
    gamma_.grad[c] += sum_gy_xhat;
    beta_.grad[c] += sum_gy;
    double invstd = cached_invstd_[c];
    double k1 = g * invstd;
    for (int64_t n = 0; n < gy.n(); ++n) {
      const double* pg = gy.plane(n, c);
      const double* xh = cached_xhat_.plane(n, c);
      double* pgx = gx.plane(n, c);
      for (int64_t i = 0; i < hw; ++i)
        pgx[i] = k1 * (pg[i] - sum_gy / m - xh[i] * sum_gy_xhat / m);
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Activations

Tensor ReLU::forward(const Tensor& x) {
  Tensor y = x;
  if (training_) mask_.assign(x.numel(), 0);
  for (int64_t i = 0; i < y.numel(); ++i) {
    if (y[i] > 0) {
      if (training_) mask_[i] = 1;
    } else {
      y[i] = 0;
    }
  }
  return y;
}

Tensor ReLU::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (int64_t i = 0; i < gx.numel(); ++i)
    if (!mask_[i]) gx[i] = 0;
  return gx;
}

Tensor SiLU::forward(const Tensor& x) {
  Tensor y = Tensor::zeros_like(x);
  for (int64_t i = 0; i < x.numel(); ++i) {
    double s = 1.0 / (1.0 + std::exp(-x[i]));
    y[i] = x[i] * s;
  }
  if (training_) cached_input_ = x;
  return y;
}

Tensor SiLU::backward(const Tensor& gy) {
  Tensor gx = Tensor::zeros_like(gy);
  for (int64_t i = 0; i < gy.numel(); ++i) {
    double s = 1.0 / (1.0 + std::exp(-cached_input_[i]));
    gx[i] = gy[i] * (s + cached_input_[i] * s * (1 - s));
  }
  return gx;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = Tensor::zeros_like(x);
  for (int64_t i = 0; i < x.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
  return y;
}

// ---------------------------------------------------------------------------
// Pooling

MaxPool2d::MaxPool2d(int kernel, int stride, int padding)
    : kernel_(kernel), stride_(stride), padding_(padding) {}

Tensor MaxPool2d::forward(const Tensor& x) {
  const int64_t ho = conv_out_dim(x.h(), kernel_, stride_, padding_, 1);
  const int64_t wo = conv_out_dim(x.w(), kernel_, stride_, padding_, 1);
  Tensor y(x.n(), x.c(), ho, wo);
  in_h_ = x.h();
  in_w_ = x.w();
  argmax_.assign(static_cast<size_t>(y.numel()), -1);
  int64_t out_idx = 0;
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t c = 0; c < x.c(); ++c) {
      const double* plane = x.plane(n, c);
      for (int64_t r = 0; r < ho; ++r) {
        for (int64_t cc = 0; cc < wo; ++cc, ++out_idx) {
          double best = -std::numeric_limits<double>::infinity();
          int64_t best_idx = -1;
          for (int kr = 0; kr < kernel_; ++kr) {
            int64_t ir = r * stride_ - padding_ + kr;
            if (ir < 0 || ir >= x.h()) continue;
            for (int kc = 0; kc < kernel_; ++kc) {
              int64_t ic = cc * stride_ - padding_ + kc;
              if (ic < 0 || ic >= x.w()) continue;
              double v = plane[ir * x.w() + ic];
              if (v > best) {
                best = v;
                best_idx = ir * x.w() + ic;
              }
            }
          }
          y.plane(n, c)[r * wo + cc] = best;
          argmax_[out_idx] = best_idx;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& gy) {
  Tensor gx(gy.n(), gy.c(), in_h_, in_w_);
  int64_t out_idx = 0;
  const int64_t hw = gy.h() * gy.w();
  for (int64_t n = 0; n < gy.n(); ++n) {
    for (int64_t c = 0; c < gy.c(); ++c) {
      const double* pg = gy.plane(n, c);
      double* pgx = gx.plane(n, c);
      for (int64_t i = 0; i < hw; ++i, ++out_idx) pgx[argmax_[out_idx]] += pg[i];
    }
  }
  return gx;
}

AvgPool2d::AvgPool2d(int kernel, int stride, int padding)
    : kernel_(kernel), stride_(stride), padding_(padding) {}

Tensor AvgPool2d::forward(const Tensor& x) {
  const int64_t ho = conv_out_dim(x.h(), kernel_, stride_, padding_, 1);
  const int64_t wo = conv_out_dim(x.w(), kernel_, stride_, padding_, 1);
  Tensor y(x.n(), x.c(), ho, wo);
  in_h_ = x.h();
  in_w_ = x.w();
  const double inv = 1.0 / (kernel_ * kernel_);
  for (int64_t n = 0; n < x.n(); ++n)
    for (int64_t c = 0; c < x.c(); ++c) {
      const double* plane = x.plane(n, c);
      double* py = y.plane(n, c);
      for (int64_t r = 0; r < ho; ++r)
        for (int64_t cc = 0; cc < wo; ++cc) {
          double s = 0;
          for (int kr = 0; kr < kernel_; ++kr) {
            int64_t ir = r * stride_ - padding_ + kr;
            if (ir < 0 || ir >= x.h()) continue;
            for (int kc = 0; kc < kernel_; ++kc) {
              int64_t ic = cc * stride_ - padding_ + kc;
              if (ic >= 0 && ic < x.w()) s += plane[ir * x.w() + ic];
            }
          }
          py[r * wo + cc] = s * inv;
        }
    }
  return y;
}

Tensor AvgPool2d::backward(const Tensor& gy) {
  Tensor gx(gy.n(), gy.c(), in_h_, in_w_);
  const double inv = 1.0 / (kernel_ * kernel_);
  for (int64_t n = 0; n < gy.n(); ++n)
    for (int64_t c = 0; c < gy.c(); ++c) {
      const double* pg = gy.plane(n, c);
      double* pgx = gx.plane(n, c);
      for (int64_t r = 0; r < gy.h(); ++r)
        for (int64_t cc = 0; cc < gy.w(); ++cc) {
          double g = pg[r * gy.w() + cc] * inv;
          for (int kr = 0; kr < kernel_; ++kr) {
            int64_t ir = r * stride_ - padding_ + kr;
            if (ir < 0 || ir >= in_h_) continue;
            for (int kc = 0; kc < kernel_; ++kc) {
              int64_t ic = cc * stride_ - padding_ + kc;
              if (ic >= 0 && ic < in_w_) pgx[ir * in_w_ + ic] += g;
            }
          }
        }
    }
  return gx;
}

// ---------------------------------------------------------------------------
// Sequential

Tensor Sequential::forward(const Tensor& x) {
  Tensor cur = x;
  for (auto& m : children_) cur = m->forward(cur);
  return cur;
}

Tensor Sequential::backward(const Tensor& gy) {
  Tensor cur = gy;
  for (auto it = children_.rbegin(); it != children_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

void Sequential::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
  for (size_t i = 0; i < children_.size(); ++i)
    children_[i]->collect_params(prefix + "." + std::to_string(i), out);
}

void Sequential::set_training(bool t) {
  Module::set_training(t);
  for (auto& m : children_) m->set_training(t);
}

// ---------------------------------------------------------------------------
// Functional kernels

Tensor upsample_bilinear(const Tensor& x, int64_t out_h, int64_t out_w) {
  Tensor y(x.n(), x.c(), out_h, out_w);
  const double sy = static_cast<double>(x.h()) / out_h;
  const double sx = static_cast<double>(x.w()) / out_w;
  for (int64_t r = 0; r < out_h; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    int64_t y0 = static_cast<int64_t>(std::floor(fy));
    double wy = fy - y0;
    int64_t y0c = std::clamp<int64_t>(y0, 0, x.h() - 1);
    int64_t y1c = std::clamp<int64_t>(y0 + 1, 0, x.h() - 1);
    for (int64_t c = 0; c < out_w; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      int64_t x0 = static_cast<int64_t>(std::floor(fx));
      double wx = fx - x0;
      int64_t x0c = std::clamp<int64_t>(x0, 0, x.w() - 1);
      int64_t x1c = std::clamp<int64_t>(x0 + 1, 0, x.w() - 1);
      for (int64_t n = 0; n < x.n(); ++n)
        for (int64_t ch = 0; ch < x.c(); ++ch) {
          const double* p = x.plane(n, ch);
          y.plane(n, ch)[r * out_w + c] =
              (1 - wy) * ((1 - wx) * p[y0c * x.w() + x0c] + wx * p[y0c * x.w() + x1c]) +
              wy * ((1 - wx) * p[y1c * x.w() + x0c] + wx * p[y1c * x.w() + x1c]);
        }
    }
  }
  return y;
}

Tensor upsample_bilinear_backward(const Tensor& gy, int64_t in_h, int64_t in_w) {
  Tensor gx(gy.n(), gy.c(), in_h, in_w);
  const double sy = static_cast<double>(in_h) / gy.h();
  const double sx = static_cast<double>(in_w) / gy.w();
  for (int64_t r = 0; r < gy.h(); ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    int64_t y0 = static_cast<int64_t>(std::floor(fy));
    double wy = fy - y0;
    int64_t y0c = std::clamp<int64_t>(y0, 0, in_h - 1);
    int64_t y1c = std::clamp<int64_t>(y0 + 1, 0, in_h - 1);
    for (int64_t c = 0; c < gy.w(); ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      int64_t x0 = static_cast<int64_t>(std::floor(fx));
      double wx = fx - x0;
      int64_t x0c = std::clamp<int64_t>(x0, 0, in_w - 1);
      int64_t x1c = std::clamp<int64_t>(x0 + 1, 0, in_w - 1);
      for (int64_t n = 0; n < gy.n(); ++n)
        for (int64_t ch = 0; ch < gy.c(); ++ch) {
          double g = gy.plane(n, ch)[r * gy.w() + c];
          double* p = gx.plane(n, ch);
          p[y0c * in_w + x0c] += (1 - wy) * (1 - wx) * g;
          p[y0c * in_w + x1c] += (1 - wy) * wx * g;
          p[y1c * in_w + x0c] += wy * (1 - wx) * g;
          p[y1c * in_w + x1c] += wy * wx * g;
        }
    }
  }
  return gx;
}

Tensor global_avg_pool(const Tensor& x) {
  Tensor y(x.n(), x.c(), 1, 1);
  const int64_t hw = x.h() * x.w();
  for (int64_t n = 0; n < x.n(); ++n)
    for (int64_t c = 0; c < x.c(); ++c) {
      const double* p = x.plane(n, c);
      double s = 0;
      for (int64_t i = 0; i < hw; ++i) s += p[i];
      y.at(n, c, 0, 0) = s / hw;
    }
  return y;
}

Tensor global_avg_pool_backward(const Tensor& gy, int64_t in_h, int64_t in_w) {
  Tensor gx(gy.n(), gy.c(), in_h, in_w);
  const double inv = 1.0 / (in_h * in_w);
  for (int64_t n = 0; n < gy.n(); ++n)
    for (int64_t c = 0; c < gy.c(); ++c) {
      double g = gy.at(n, c, 0, 0) * inv;
      double* p = gx.plane(n, c);
      for (int64_t i = 0; i < in_h * in_w; ++i) p[i] = g;
    }
  return gx;
}

Tensor concat_channels(const std::vector<const Tensor*>& xs) {
  int64_t total_c = 0;
  for (const Tensor* t : xs) total_c += t->c();
  const Tensor& first = *xs[0];
  Tensor y(first.n(), total_c, first.h(), first.w());
  for (int64_t n = 0; n < first.n(); ++n) {
    int64_t co = 0;
    for (const Tensor* t : xs) {
      if (t->h() != first.h() || t->w() != first.w() || t->n() != first.n())
        throw ValidationError("concat: spatial/batch dims differ");
      for (int64_t c = 0; c < t->c(); ++c, ++co)
        std::copy(t->plane(n, c), t->plane(n, c) + first.h() * first.w(), y.plane(n, co));
    }
  }
  return y;
}

std::vector<Tensor> split_channels(const Tensor& gy, const std::vector<int64_t>& channels) {
  std::vector<Tensor> out;
  int64_t co = 0;
  for (int64_t ch : channels) {
    Tensor t(gy.n(), ch, gy.h(), gy.w());
    for (int64_t n = 0; n < gy.n(); ++n)
      for (int64_t c = 0; c < ch; ++c)
        std::copy(gy.plane(n, co + c), gy.plane(n, co + c) + gy.h() * gy.w(), t.plane(n, c));
    co += ch;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace steelseg::nn
