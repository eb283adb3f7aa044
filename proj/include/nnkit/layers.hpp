#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nnkit/activations.hpp"
#include "nnkit/rng.hpp"
#include "nnkit/tensor.hpp"

namespace nnkit {

enum class Mode { train, infer };

// Handle to one trainable tensor and its gradient slot. weight_decay marks
// tensors included in the L2 term (weights yes; biases and batch-norm
// gamma/beta no).
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
  bool weight_decay;
};

// Weight init samplers. Both return a draw function over an Rng so the same
// sampler can fill any number of tensors.
std::function<double(Rng&)> lecun_normal_init(std::size_t n_prev);   // N(0, sqrt(1/n_prev))
std::function<double(Rng&)> uniform_init(double scale = 0.1);        // U(-scale, +scale)

void fill_with(Tensor& t, const std::function<double(Rng&)>& sampler, Rng& rng);

// Base class for trainable / structural layers. forward caches whatever the
// matching backward needs; backward before forward is a StateError.
// Batch convention: leading axis is the batch (N x features for dense data,
// N x H x W x C for images).
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, Mode mode, Rng& rng) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect_params(std::vector<ParamRef>& out) { (void)out; }
  virtual std::string describe() const = 0;
  // Per-sample output shape given a per-sample input shape (no batch axis).
  virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;
};

// Fully-connected layer y = f(x W^T + b), weights n_out x n_in.
// Gradients are summed over the batch; the 1/N lives in the loss.
class DenseLayer : public Layer {
 public:
  DenseLayer(std::size_t n_in, std::size_t n_out, std::optional<ActivationKind> activation);

  void init_weights(const std::function<double(Rng&)>& sampler, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(std::vector<ParamRef>& out) override;
  std::string describe() const override;
  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }
  Tensor& weights() { return w_; }
  Tensor& bias() { return b_; }
  const Tensor& weight_grad() const { return wgrad_; }
  const Tensor& bias_grad() const { return bgrad_; }
  const std::optional<ActivationKind>& activation() const { return act_; }

 private:
  std::size_t n_in_, n_out_;
  std::optional<ActivationKind> act_;
  Tensor w_, b_, wgrad_, bgrad_;
  Tensor x_cache_, z_cache_;
  bool has_cache_ = false;
};

// Same-padded stride-1 convolution with fused activation.
// kernels kh x kw x Cin x Cout; input N x H x W x Cin.
class ConvLayer : public Layer {
 public:
  ConvLayer(std::size_t kh, std::size_t kw, std::size_t c_in, std::size_t c_out,
            std::optional<ActivationKind> activation);

  void init_weights(const std::function<double(Rng&)>& sampler, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(std::vector<ParamRef>& out) override;
  std::string describe() const override;
  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;

  Tensor& kernels() { return k_; }
  Tensor& bias() { return b_; }

 private:
  std::size_t kh_, kw_, cin_, cout_;
  std::optional<ActivationKind> act_;
  Tensor k_, b_, kgrad_, bgrad_;
  Tensor x_cache_, z_cache_;
  bool has_cache_ = false;
};

// Per-channel batch normalization over all leading axes (N for dense data,
// N/H/W for images; channels are the trailing axis).
//
// Train mode normalizes by the batch statistics (biased variance) and updates
// the running stats as running = momentum * running + (1-momentum) * batch.
// Infer mode uses the running stats. Constants: epsilon 1e-5, momentum 0.9.
class BatchNormLayer : public Layer {
 public:
  explicit BatchNormLayer(std::size_t channels, double epsilon = 1e-5, double momentum = 0.9);

  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(std::vector<ParamRef>& out) override;
  std::string describe() const override;
  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;

  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }

 private:
  std::size_t channels_;
  double epsilon_, momentum_;
  Tensor gamma_, beta_, ggrad_, bgrad_;
  Tensor running_mean_, running_var_;
  Tensor xhat_cache_, mean_cache_, var_cache_;
  std::size_t group_size_ = 0;  // N*H*W of the cached batch
  bool has_cache_ = false;
};

// Inverted dropout: train mode zeroes each element with probability `rate`
// and scales survivors by 1/(1-rate); infer mode is the identity.
class DropoutLayer : public Layer {
 public:
  explicit DropoutLayer(double rate);

  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override;
  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;

  double rate() const { return rate_; }

 private:
  double rate_;
  Tensor mask_;
  bool has_cache_ = false;
  bool identity_pass_ = false;
};

// 2x2 mean pooling over each sample of an N x H x W x C batch.
class AvgPoolLayer : public Layer {
 public:
  AvgPoolLayer() = default;
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override;
  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;

 private:
  std::vector<std::size_t> in_shape_;
  bool has_cache_ = false;
};

// Global average pooling: N x H x W x C -> N x C.
class GlobalAvgPoolLayer : public Layer {
 public:
  GlobalAvgPoolLayer() = default;
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override;
  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;

 private:
  std::vector<std::size_t> in_shape_;
  bool has_cache_ = false;
};

}  // namespace nnkit
