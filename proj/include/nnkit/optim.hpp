#pragma once

#include <span>
#include <vector>

#include "nnkit/layers.hpp"
#include "nnkit/tensor.hpp"

namespace nnkit {

struct LossConfig {
  double l2_lambda = 0.0001;
  // When false (default), the L2 term covers weight tensors only; biases and
  // batch-norm gamma/beta are excluded.
  bool l2_all_params = false;
};

// Mean cross-entropy over the batch plus (lambda/2) * ||params||^2.
// y_hat holds probability rows (each summing to 1 within 1e-6); y is one-hot.
// log arguments are clamped at 1e-12.
double cross_entropy_l2(const Tensor& y_hat, const Tensor& y, std::span<const ParamRef> params,
                        const LossConfig& cfg);

// Gradient of the mean cross-entropy data term with respect to logits when
// the final softmax is fused in: (softmax(logits) - y) / N.
Tensor softmax_ce_grad(const Tensor& logits, const Tensor& y);

// Plain gradient-descent step: w - eta * grad.
Tensor sgd_step(const Tensor& w, const Tensor& grad, double eta);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moments are shaped like
// their parameters; construction order must match the list passed to step().
class AdamState {
 public:
  AdamState(std::span<const ParamRef> params, AdamConfig cfg);

  // Applies one update using the gradients currently stored in the refs.
  void step(std::span<const ParamRef> params);

  std::size_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const Tensor& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor& second_moment(std::size_t i) const { return v_[i]; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t step_ = 0;
};

}  // namespace nnkit
