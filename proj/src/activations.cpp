#include "nnkit/activations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace nnkit {

namespace {
constexpr double kSqrt2OverPi = 0.7978845608028653558798921198687;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;
}  // namespace

ActivationKind ActivationKind::elu(double alpha) {
  if (!(alpha > 0.0)) throw ParamError("elu: alpha must be > 0");
  ActivationKind k{Activation::elu};
  k.elu_alpha = alpha;
  return k;
}

ActivationKind ActivationKind::isrlu(double alpha) {
  if (alpha < 1.0 || alpha > 3.0) throw ParamError("isrlu: alpha must be in [1, 3]");
  ActivationKind k{Activation::isrlu};
  k.isrlu_alpha = alpha;
  return k;
}

std::string ActivationKind::name() const {
  switch (variant) {
    case Activation::tanh_fn: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::selu: return "selu";
    case Activation::gelu: return "gelu";
    case Activation::isrlu: return "isrlu";
  }
  return "?";
}

ActivationKind ActivationKind::parse(const std::string& name) {
  std::string s;
  s.reserve(name.size());
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "tanh") return tanh_fn();
  if (s == "sigmoid") return sigmoid();
  if (s == "relu") return relu();
  if (s == "elu") return elu();
  if (s == "selu") return selu();
  if (s == "gelu") return ActivationKind{Activation::gelu};
  if (s == "isrlu") return isrlu();
  throw ParamError("unknown activation '" + name + "'");
}

double act_forward(const ActivationKind& kind, double x) {
  if (!std::isfinite(x)) throw DomainError("act_forward: non-finite input");
  switch (kind.variant) {
    case Activation::tanh_fn:
      return std::tanh(x);
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::elu:
      return x > 0.0 ? x : kind.elu_alpha * (std::exp(x) - 1.0);
    case Activation::selu:
      return x > 0.0 ? kind.selu_lambda * x
                     : kind.selu_lambda * kind.selu_alpha * (std::exp(x) - 1.0);
    case Activation::gelu: {
      const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
      return 0.5 * x * (1.0 + std::tanh(u));
    }
    case Activation::isrlu:
      return x >= 0.0 ? x : x / std::sqrt(1.0 + kind.isrlu_alpha * x * x);
  }
  throw ParamError("act_forward: bad variant");
}

double act_backward(const ActivationKind& kind, double x) {
  if (!std::isfinite(x)) throw DomainError("act_backward: non-finite input");
  switch (kind.variant) {
    case Activation::tanh_fn: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case Activation::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::elu:
      return x > 0.0 ? 1.0 : kind.elu_alpha * std::exp(x);
    case Activation::selu:
      return x > 0.0 ? kind.selu_lambda : kind.selu_lambda * kind.selu_alpha * std::exp(x);
    case Activation::gelu: {
      // 0.5 tanh(u) + 0.5 + 0.5 sqrt(2/pi) x (1 + 3*0.044715 x^2) cosh^-2(u)
      const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
      const double ch = std::cosh(u);
      const double sech2 = 1.0 / (ch * ch);
      return 0.5 * std::tanh(u) + 0.5 +
             0.5 * kSqrt2OverPi * x * (1.0 + 3.0 * kGeluCubic * x * x) * sech2;
    }
    case Activation::isrlu: {
      if (x >= 0.0) return 1.0;
      const double inv = 1.0 / std::sqrt(1.0 + kind.isrlu_alpha * x * x);
      return inv * inv * inv;
    }
  }
  throw ParamError("act_backward: bad variant");
}

namespace {

template <typename F>
Tensor map_checked(const Tensor& t, F&& f, const char* what) {
  Tensor out = t;
  double* d = out.data();
  const std::size_t n = out.size();
  std::size_t bad = n;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    if (!std::isfinite(d[i])) {
#pragma omp critical
      bad = std::min(bad, static_cast<std::size_t>(i));
    } else {
      d[i] = f(d[i]);
    }
  }
  if (bad != n) {
    throw DomainError(std::string(what) + ": non-finite element at index " + std::to_string(bad));
  }
  return out;
}

}  // namespace

Tensor act_map(const ActivationKind& kind, const Tensor& t) {
  return map_checked(t, [&kind](double x) { return act_forward(kind, x); }, "act_map");
}

Tensor act_map_grad(const ActivationKind& kind, const Tensor& t) {
  return map_checked(t, [&kind](double x) { return act_backward(kind, x); }, "act_map_grad");
}

Tensor softmax(const Tensor& z) {
  if (z.rank() != 1 || z.size() == 0) {
    throw ShapeError("softmax: expected non-empty vector, got " + shape_str(z.shape()));
  }
  Tensor out = z;
  double mx = out[0];
  for (std::size_t i = 1; i < out.size(); ++i) mx = std::max(mx, out[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(out[i] - mx);
    denom += out[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= denom;
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) {
    throw ShapeError("softmax_rows: expected N x C tensor, got " + shape_str(logits.shape()));
  }
  const std::size_t n = logits.extent(0), c = logits.extent(1);
  Tensor out = logits;
  for (std::size_t r = 0; r < n; ++r) {
    double mx = out(r, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, out(r, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out(r, j) = std::exp(out(r, j) - mx);
      denom += out(r, j);
    }
    for (std::size_t j = 0; j < c; ++j) out(r, j) /= denom;
  }
  return out;
}

}  // namespace nnkit
