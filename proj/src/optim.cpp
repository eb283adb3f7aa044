#include "nnkit/optim.hpp"

#include <cmath>

#include "nnkit/activations.hpp"

namespace nnkit {

double cross_entropy_l2(const Tensor& y_hat, const Tensor& y, std::span<const ParamRef> params,
                        const LossConfig& cfg) {
  if (y_hat.rank() != 2 || !y_hat.same_shape(y)) {
    throw ShapeError("cross_entropy_l2: y_hat " + shape_str(y_hat.shape()) + " vs y " +
                     shape_str(y.shape()));
  }
  const std::size_t n = y_hat.extent(0), c = y_hat.extent(1);
  if (n == 0) throw ShapeError("cross_entropy_l2: empty batch");
  for (std::size_t r = 0; r < n; ++r) {
    double row = 0.0;
    for (std::size_t j = 0; j < c; ++j) row += y_hat(r, j);
    if (std::abs(row - 1.0) > 1e-6) {
      throw DomainError("cross_entropy_l2: probability row " + std::to_string(r) + " sums to " +
                        std::to_string(row));
    }
  }
  double data = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j) {
      if (y(r, j) != 0.0) data -= y(r, j) * std::log(std::max(y_hat(r, j), 1e-12));
    }
  data /= static_cast<double>(n);

  double reg = 0.0;
  for (const ParamRef& p : params) {
    if (cfg.l2_all_params || p.weight_decay) reg += sum_squares(*p.value);
  }
  return data + 0.5 * cfg.l2_lambda * reg;
}

Tensor softmax_ce_grad(const Tensor& logits, const Tensor& y) {
  if (logits.rank() != 2 || !logits.same_shape(y)) {
    throw ShapeError("softmax_ce_grad: logits " + shape_str(logits.shape()) + " vs y " +
                     shape_str(y.shape()));
  }
  const std::size_t n = logits.extent(0);
  Tensor g = softmax_rows(logits);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (g[i] - y[i]) * inv;
  return g;
}

Tensor sgd_step(const Tensor& w, const Tensor& grad, double eta) {
  if (!w.same_shape(grad)) {
    throw ShapeError("sgd_step: w " + shape_str(w.shape()) + " vs grad " + shape_str(grad.shape()));
  }
  if (!(eta > 0.0)) throw ParamError("sgd_step: eta must be > 0");
  Tensor out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= eta * grad[i];
  return out;
}

AdamState::AdamState(std::span<const ParamRef> params, AdamConfig cfg) : cfg_(cfg) {
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
    throw ParamError("adam: betas must be in [0, 1)");
  }
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamRef& p : params) {
    m_.emplace_back(p.value->shape());
    v_.emplace_back(p.value->shape());
  }
}

void AdamState::step(std::span<const ParamRef> params) {
  if (params.size() != m_.size()) {
    throw ShapeError("adam step: parameter count " + std::to_string(params.size()) +
                     " vs state " + std::to_string(m_.size()));
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i].value;
    const Tensor& g = *params[i].grad;
    if (!w.same_shape(g) || !w.same_shape(m_[i])) {
      throw ShapeError("adam step: shape mismatch at parameter " + params[i].name);
    }
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace nnkit
