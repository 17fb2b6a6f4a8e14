#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsc/errors.hpp"
#include "gsc/rng.hpp"

namespace gsc {

/// Dense n-dimensional array of 64-bit reals, row-major with the last axis
/// contiguous. Images and latent grids use (height, width, channels).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(count(shape_)), 0.0);
  }

  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != static_cast<int64_t>(data_.size())) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  static Tensor random_uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = rng.uniform(lo, hi);
    return t;
  }

  static Tensor random_normal(std::vector<int> shape, double stddev, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = stddev * rng.normal();
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(double v) { data_.assign(data_.size(), v); }

  bool all_finite() const;

  std::string shape_str() const { return shape_string(shape_); }

  static std::string shape_string(const std::vector<int>& s);
  static int64_t count(const std::vector<int>& s);

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

/// Throws DimensionError with both shapes if they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// Elementwise helpers used throughout the codec.
void axpy(Tensor& dst, double a, const Tensor& x);   // dst += a*x
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scaled(const Tensor& a, double s);
double dot(const Tensor& a, const Tensor& b);
double sum_sq(const Tensor& a);
double l2_norm(const Tensor& a);
double max_abs(const Tensor& a);

}  // namespace gsc
