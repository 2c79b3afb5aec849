#include "steelseg/nn/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace steelseg::nn {

using CMat = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MMat = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(" << n_ << "," << c_ << "," << h_ << "," << w_ << ")";
  return os.str();
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

uint64_t Tensor::checksum() const {
  uint64_t h = 1469598103934665603ull;
  const unsigned char* p = reinterpret_cast<const unsigned char*>(data_.data());
  size_t bytes = data_.size() * sizeof(double);
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  MMat(c, m, n).noalias() = CMat(a, m, k) * CMat(b, k, n);
}

void matmul_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  MMat(c, m, n).noalias() += CMat(a, m, k) * CMat(b, k, n);
}

void matmul_at(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  MMat(c, m, n).noalias() = CMat(a, k, m).transpose() * CMat(b, k, n);
}

void matmul_bt_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  MMat(c, m, n).noalias() += CMat(a, m, k) * CMat(b, n, k).transpose();
}

}  // namespace steelseg::nn
