#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

namespace steelseg::nn {

// Dense NCHW tensor of doubles. All layer math in this library runs in
// double precision; images are converted on entry.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int64_t n, int64_t c, int64_t h, int64_t w)
      : n_(n), c_(c), h_(h), w_(w), data_(static_cast<size_t>(n * c * h * w), 0.0) {}

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.n_, t.c_, t.h_, t.w_); }

  int64_t n() const { return n_; }
  int64_t c() const { return c_; }
  int64_t h() const { return h_; }
  int64_t w() const { return w_; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  bool same_shape(const Tensor& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }
  std::string shape_str() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[((n * c_ + c) * h_ + h) * w_ + w];
  }
  double at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[((n * c_ + c) * h_ + h) * w_ + w];
  }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  // Pointer to the (n, c) spatial plane.
  double* plane(int64_t n, int64_t c) { return data_.data() + (n * c_ + c) * h_ * w_; }
  const double* plane(int64_t n, int64_t c) const {
    return data_.data() + (n * c_ + c) * h_ * w_;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  void add_(const Tensor& o) {
    assert(same_shape(o));
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  }
  void scale_(double s) {
    for (double& v : data_) v *= s;
  }

  bool all_finite() const;
  // Order-dependent FNV-1a over the raw bytes; used for determinism checks.
  uint64_t checksum() const;

 private:
  int64_t n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

// C(m x n) = A(m x k) * B(k x n), all row-major contiguous.
void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
// C += A * B
void matmul_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
// C(m x n) = A^T(k x m) * B(k x n)
void matmul_at(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
// C(m x n) += A(m x k) * B^T(n x k)
void matmul_bt_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);

}  // namespace steelseg::nn
