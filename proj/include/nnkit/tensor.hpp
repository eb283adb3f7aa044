#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "nnkit/error.hpp"

namespace nnkit {

// Dense n-dimensional array of doubles, row-major. The one value type every
// other module builds on: batches, weights, spectrograms, patches.
//
// Kernels in this module are deterministic: identical inputs give bit-identical
// outputs regardless of thread count (the reduction order within each output
// element is fixed; threading only partitions output elements).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::size_t> shape, double value);
  // Convenience for literals in tests: row-major values.
  static Tensor from(std::vector<std::size_t> shape, std::initializer_list<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t dim) const { return shape_.at(dim); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(double value);
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

enum class Trans { none, yes };

// c = op(a) * op(b) with op in {identity, transpose}. Plain matmul(a, b) is
// c[i][j] = sum_p a[i][p] b[p][j]. Backed by BLAS dgemm.
Tensor matmul(const Tensor& a, const Tensor& b, Trans trans_a = Trans::none,
              Trans trans_b = Trans::none);

// Same-padded stride-1 cross-correlation (no kernel flip).
// input: H x W x Cin, kernels: kh x kw x Cin x Cout (kh, kw odd), bias: Cout.
// Output spatial dims equal the input's.
Tensor conv2d_same(const Tensor& input, const Tensor& kernels, const Tensor& bias);

// Gathers same-padded kh x kw patches of a H x W x Cin input into rows of a
// (H*W) x (kh*kw*Cin) matrix, column order matching the flat kernel layout.
// conv2d_same is this followed by a matmul; the conv backward reuses it.
void im2col_same(const Tensor& input, std::size_t kh, std::size_t kw, Tensor& patches);

// 2x2 mean pooling, stride 2. H and W must be even.
Tensor avg_pool2d(const Tensor& input, std::size_t k = 2);

// Per-channel mean over all spatial positions: H x W x C -> C.
Tensor global_avg_pool(const Tensor& input);

// Elementwise helpers shared by the layer/optimizer code.
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, double s);
void add_inplace(Tensor& a, const Tensor& b);
void axpy_inplace(Tensor& a, double s, const Tensor& b);  // a += s*b
double dot(const Tensor& a, const Tensor& b);
double sum_squares(const Tensor& a);

}  // namespace nnkit
