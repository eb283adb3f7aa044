#include "nnkit/tensor.hpp"

#include <cblas.h>

#include <cmath>
#include <numeric>
#include <sstream>

namespace nnkit {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    n *= e;
  }
  return n;
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     " tensor, got shape " + shape_str(t.shape()));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data) : shape_(std::move(shape)) {
  if (checked_product(shape_) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                     shape_str(shape_));
  }
  data_ = std::move(data);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::initializer_list<double> values) {
  return Tensor(std::move(shape), std::vector<double>(values));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b, Trans trans_a, Trans trans_b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  const std::size_t m = trans_a == Trans::none ? a.extent(0) : a.extent(1);
  const std::size_t ka = trans_a == Trans::none ? a.extent(1) : a.extent(0);
  const std::size_t kb = trans_b == Trans::none ? b.extent(0) : b.extent(1);
  const std::size_t n = trans_b == Trans::none ? b.extent(1) : b.extent(0);
  if (ka != kb) {
    throw ShapeError("matmul: inner extents disagree, " + shape_str(a.shape()) +
                     (trans_a == Trans::yes ? "^T" : "") + " x " + shape_str(b.shape()) +
                     (trans_b == Trans::yes ? "^T" : ""));
  }
  Tensor c({m, n});
  cblas_dgemm(CblasRowMajor, trans_a == Trans::none ? CblasNoTrans : CblasTrans,
              trans_b == Trans::none ? CblasNoTrans : CblasTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(ka), 1.0, a.data(),
              static_cast<int>(a.extent(1)), b.data(), static_cast<int>(b.extent(1)), 0.0,
              c.data(), static_cast<int>(n));
  return c;
}

void im2col_same(const Tensor& input, std::size_t kh, std::size_t kw, Tensor& patches) {
  const std::size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  if (patches.rank() != 2 || patches.extent(0) != h * w || patches.extent(1) != kh * kw * c) {
    throw ShapeError("im2col_same: patches buffer " + shape_str(patches.shape()) +
                     " for input " + shape_str(input.shape()));
  }
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  const std::size_t cols = kh * kw * c;
  const double* in = input.data();
  double* out = patches.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(h); ++r) {
    for (std::size_t col = 0; col < w; ++col) {
      double* row = out + (static_cast<std::size_t>(r) * w + col) * cols;
      std::size_t idx = 0;
      for (std::size_t dr = 0; dr < kh; ++dr) {
        const std::ptrdiff_t rr = r + static_cast<std::ptrdiff_t>(dr) - ph;
        for (std::size_t dc = 0; dc < kw; ++dc) {
          const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(col + dc) - pw;
          if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(h) || cc < 0 ||
              cc >= static_cast<std::ptrdiff_t>(w)) {
            for (std::size_t ci = 0; ci < c; ++ci) row[idx++] = 0.0;
          } else {
            const double* src = in + (static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc)) * c;
            for (std::size_t ci = 0; ci < c; ++ci) row[idx++] = src[ci];
          }
        }
      }
    }
  }
}

Tensor conv2d_same(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  require_rank(input, 3, "conv2d_same input");
  require_rank(kernels, 4, "conv2d_same kernels");
  require_rank(bias, 1, "conv2d_same bias");
  const std::size_t h = input.extent(0), w = input.extent(1), cin = input.extent(2);
  const std::size_t kh = kernels.extent(0), kw = kernels.extent(1);
  const std::size_t kcin = kernels.extent(2), cout = kernels.extent(3);
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ParamError("conv2d_same: kernel extents must be odd, got " + shape_str(kernels.shape()));
  }
  if (kcin != cin) {
    throw ShapeError("conv2d_same: input channels " + shape_str(input.shape()) +
                     " vs kernels " + shape_str(kernels.shape()));
  }
  if (bias.extent(0) != cout) {
    throw ShapeError("conv2d_same: bias " + shape_str(bias.shape()) + " vs kernels " +
                     shape_str(kernels.shape()));
  }

  Tensor patches({h * w, kh * kw * cin});
  im2col_same(input, kh, kw, patches);
  Tensor kmat({kh * kw * cin, cout}, std::vector<double>(kernels.data(), kernels.data() + kernels.size()));
  Tensor flat = matmul(patches, kmat);

  Tensor out({h, w, cout});
  double* o = out.data();
  const double* f = flat.data();
  for (std::size_t p = 0; p < h * w; ++p) {
    for (std::size_t co = 0; co < cout; ++co) o[p * cout + co] = f[p * cout + co] + bias[co];
  }
  return out;
}

Tensor avg_pool2d(const Tensor& input, std::size_t k) {
  require_rank(input, 3, "avg_pool2d input");
  if (k != 2) throw ParamError("avg_pool2d: only 2x2 pooling is supported");
  const std::size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("avg_pool2d: spatial extents must be even, got " + shape_str(input.shape()));
  }
  Tensor out({h / 2, w / 2, c});
  for (std::size_t r = 0; r < h / 2; ++r) {
    for (std::size_t col = 0; col < w / 2; ++col) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        out(r, col, ch) = 0.25 * (input(2 * r, 2 * col, ch) + input(2 * r, 2 * col + 1, ch) +
                                  input(2 * r + 1, 2 * col, ch) + input(2 * r + 1, 2 * col + 1, ch));
      }
    }
  }
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank(input, 3, "global_avg_pool input");
  const std::size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  Tensor out({c});
  const double inv = 1.0 / static_cast<double>(h * w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t col = 0; col < w; ++col)
      for (std::size_t ch = 0; ch < c; ++ch) out[ch] += input(r, col, ch);
  for (std::size_t ch = 0; ch < c; ++ch) out[ch] *= inv;
  return out;
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shapes disagree, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}
}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "tensor add");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "tensor sub");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

Tensor operator*(const Tensor& a, double s) {
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= s;
  return c;
}

void add_inplace(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "tensor add");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void axpy_inplace(Tensor& a, double s, const Tensor& b) {
  require_same_shape(a, b, "tensor axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "tensor dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum_squares(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * a[i];
  return acc;
}

}  // namespace nnkit
