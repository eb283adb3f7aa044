#include "nnkit/layers.hpp"

#include <cmath>

namespace nnkit {

std::function<double(Rng&)> lecun_normal_init(std::size_t n_prev) {
  if (n_prev == 0) throw ParamError("lecun_normal_init: n_prev must be >= 1");
  const double sigma = std::sqrt(1.0 / static_cast<double>(n_prev));
  return [sigma](Rng& rng) { return sigma * rng.normal(); };
}

std::function<double(Rng&)> uniform_init(double scale) {
  if (!(scale > 0.0)) throw ParamError("uniform_init: scale must be > 0");
  return [scale](Rng& rng) { return rng.uniform(-scale, scale); };
}

void fill_with(Tensor& t, const std::function<double(Rng&)>& sampler, Rng& rng) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = sampler(rng);
}

// ---------------------------------------------------------------- Dense

DenseLayer::DenseLayer(std::size_t n_in, std::size_t n_out, std::optional<ActivationKind> activation)
    : n_in_(n_in),
      n_out_(n_out),
      act_(std::move(activation)),
      w_({n_out, n_in}),
      b_({n_out}),
      wgrad_({n_out, n_in}),
      bgrad_({n_out}) {
  if (n_in == 0 || n_out == 0) throw ParamError("dense: zero-width layer");
}

void DenseLayer::init_weights(const std::function<double(Rng&)>& sampler, Rng& rng) {
  fill_with(w_, sampler, rng);
  b_.fill(0.0);
}

Tensor DenseLayer::forward(const Tensor& x, Mode, Rng&) {
  if (x.rank() != 2 || x.extent(1) != n_in_) {
    throw ShapeError("dense forward: input " + shape_str(x.shape()) + " vs n_in " +
                     std::to_string(n_in_));
  }
  Tensor z = matmul(x, w_, Trans::none, Trans::yes);  // N x n_out
  const std::size_t n = z.extent(0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < n_out_; ++j) z(r, j) += b_[j];
  x_cache_ = x;
  z_cache_ = z;
  has_cache_ = true;
  return act_ ? act_map(*act_, z) : z;
}

Tensor DenseLayer::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("dense backward called before forward");
  if (!grad_out.same_shape(z_cache_)) {
    throw ShapeError("dense backward: grad " + shape_str(grad_out.shape()) + " vs cached " +
                     shape_str(z_cache_.shape()));
  }
  Tensor delta = grad_out;
  if (act_) {
    const Tensor g = act_map_grad(*act_, z_cache_);
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= g[i];
  }
  wgrad_ = matmul(delta, x_cache_, Trans::yes, Trans::none);  // n_out x n_in
  bgrad_.fill(0.0);
  const std::size_t n = delta.extent(0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < n_out_; ++j) bgrad_[j] += delta(r, j);
  return matmul(delta, w_);  // N x n_in
}

void DenseLayer::collect_params(std::vector<ParamRef>& out) {
  out.push_back({describe() + ".w", &w_, &wgrad_, true});
  out.push_back({describe() + ".b", &b_, &bgrad_, false});
}

std::string DenseLayer::describe() const {
  return "dense" + std::to_string(n_in_) + "x" + std::to_string(n_out_) +
         (act_ ? "-" + act_->name() : "");
}

std::vector<std::size_t> DenseLayer::output_shape(const std::vector<std::size_t>& in) const {
  if (in.size() != 1 || in[0] != n_in_) {
    throw ShapeError("dense: per-sample input " + shape_str(in) + " vs n_in " +
                     std::to_string(n_in_));
  }
  return {n_out_};
}

// ---------------------------------------------------------------- Conv

ConvLayer::ConvLayer(std::size_t kh, std::size_t kw, std::size_t c_in, std::size_t c_out,
                     std::optional<ActivationKind> activation)
    : kh_(kh),
      kw_(kw),
      cin_(c_in),
      cout_(c_out),
      act_(std::move(activation)),
      k_({kh, kw, c_in, c_out}),
      b_({c_out}),
      kgrad_({kh, kw, c_in, c_out}),
      bgrad_({c_out}) {
  if (kh % 2 == 0 || kw % 2 == 0) throw ParamError("conv: kernel extents must be odd");
}

void ConvLayer::init_weights(const std::function<double(Rng&)>& sampler, Rng& rng) {
  fill_with(k_, sampler, rng);
  b_.fill(0.0);
}

namespace {

Tensor slice_sample(const Tensor& batch, std::size_t n) {
  std::vector<std::size_t> shape(batch.shape().begin() + 1, batch.shape().end());
  std::size_t per = 1;
  for (std::size_t e : shape) per *= e;
  std::vector<double> data(batch.data() + n * per, batch.data() + (n + 1) * per);
  return Tensor(std::move(shape), std::move(data));
}

void paste_sample(Tensor& batch, std::size_t n, const Tensor& sample) {
  std::copy(sample.data(), sample.data() + sample.size(), batch.data() + n * sample.size());
}

}  // namespace

Tensor ConvLayer::forward(const Tensor& x, Mode, Rng&) {
  if (x.rank() != 4 || x.extent(3) != cin_) {
    throw ShapeError("conv forward: input " + shape_str(x.shape()) + " vs Cin " +
                     std::to_string(cin_));
  }
  const std::size_t n = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor z({n, h, w, cout_});
  for (std::size_t i = 0; i < n; ++i) {
    paste_sample(z, i, conv2d_same(slice_sample(x, i), k_, b_));
  }
  x_cache_ = x;
  z_cache_ = z;
  has_cache_ = true;
  return act_ ? act_map(*act_, z) : z;
}

Tensor ConvLayer::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("conv backward called before forward");
  if (!grad_out.same_shape(z_cache_)) {
    throw ShapeError("conv backward: grad " + shape_str(grad_out.shape()) + " vs cached " +
                     shape_str(z_cache_.shape()));
  }
  Tensor delta = grad_out;
  if (act_) {
    const Tensor g = act_map_grad(*act_, z_cache_);
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= g[i];
  }

  const std::size_t n = x_cache_.extent(0), h = x_cache_.extent(1), w = x_cache_.extent(2);

  // Spatially flipped, channel-swapped kernels: grad wrt the input is a
  // same-padded correlation of delta with these.
  Tensor kflip({kh_, kw_, cout_, cin_});
  for (std::size_t dr = 0; dr < kh_; ++dr)
    for (std::size_t dc = 0; dc < kw_; ++dc)
      for (std::size_t ci = 0; ci < cin_; ++ci)
        for (std::size_t co = 0; co < cout_; ++co)
          kflip(kh_ - 1 - dr, kw_ - 1 - dc, co, ci) = k_(dr, dc, ci, co);
  Tensor zero_bias({cin_});

  kgrad_.fill(0.0);
  bgrad_.fill(0.0);
  Tensor grad_in({n, h, w, cin_});
  Tensor patches({h * w, kh_ * kw_ * cin_});
  for (std::size_t i = 0; i < n; ++i) {
    Tensor d_i = slice_sample(delta, i);
    paste_sample(grad_in, i, conv2d_same(d_i, kflip, zero_bias));

    // grad_k += patches(x_i)^T * delta_i, flattened over spatial positions.
    Tensor x_i = slice_sample(x_cache_, i);
    im2col_same(x_i, kh_, kw_, patches);
    Tensor dmat({h * w, cout_}, std::vector<double>(d_i.data(), d_i.data() + d_i.size()));
    Tensor kg = matmul(patches, dmat, Trans::yes, Trans::none);
    for (std::size_t j = 0; j < kgrad_.size(); ++j) kgrad_[j] += kg[j];
    for (std::size_t p = 0; p < h * w; ++p)
      for (std::size_t co = 0; co < cout_; ++co) bgrad_[co] += dmat(p, co);
  }
  return grad_in;
}

void ConvLayer::collect_params(std::vector<ParamRef>& out) {
  out.push_back({describe() + ".k", &k_, &kgrad_, true});
  out.push_back({describe() + ".b", &b_, &bgrad_, false});
}

std::string ConvLayer::describe() const {
  return "conv" + std::to_string(kh_) + "x" + std::to_string(kw_) + "-" + std::to_string(cin_) +
         "to" + std::to_string(cout_) + (act_ ? "-" + act_->name() : "");
}

std::vector<std::size_t> ConvLayer::output_shape(const std::vector<std::size_t>& in) const {
  if (in.size() != 3 || in[2] != cin_) {
    throw ShapeError("conv: per-sample input " + shape_str(in) + " vs Cin " + std::to_string(cin_));
  }
  return {in[0], in[1], cout_};
}

// ------------------------------------------------------------- BatchNorm

BatchNormLayer::BatchNormLayer(std::size_t channels, double epsilon, double momentum)
    : channels_(channels),
      epsilon_(epsilon),
      momentum_(momentum),
      gamma_(Tensor::full({channels}, 1.0)),
      beta_({channels}),
      ggrad_({channels}),
      bgrad_({channels}),
      running_mean_({channels}),
      running_var_(Tensor::full({channels}, 1.0)),
      mean_cache_({channels}),
      var_cache_({channels}) {
  if (!(epsilon > 0.0)) throw ParamError("batchnorm: epsilon must be > 0");
}

Tensor BatchNormLayer::forward(const Tensor& x, Mode mode, Rng&) {
  if (x.rank() < 2 || x.shape().back() != channels_) {
    throw ShapeError("batchnorm forward: input " + shape_str(x.shape()) + " vs channels " +
                     std::to_string(channels_));
  }
  const std::size_t groups = x.size() / channels_;  // N (*H*W)
  Tensor out = x;
  if (mode == Mode::train) {
    if (x.extent(0) < 2) {
      throw ParamError("batchnorm: train mode needs batch >= 2, got " +
                       std::to_string(x.extent(0)));
    }
    mean_cache_.fill(0.0);
    var_cache_.fill(0.0);
    const double inv = 1.0 / static_cast<double>(groups);
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t c = 0; c < channels_; ++c) mean_cache_[c] += x[g * channels_ + c];
    for (std::size_t c = 0; c < channels_; ++c) mean_cache_[c] *= inv;
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t c = 0; c < channels_; ++c) {
        const double d = x[g * channels_ + c] - mean_cache_[c];
        var_cache_[c] += d * d;
      }
    for (std::size_t c = 0; c < channels_; ++c) var_cache_[c] *= inv;

    xhat_cache_ = Tensor(x.shape());
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t c = 0; c < channels_; ++c) {
        const double xh =
            (x[g * channels_ + c] - mean_cache_[c]) / std::sqrt(var_cache_[c] + epsilon_);
        xhat_cache_[g * channels_ + c] = xh;
        out[g * channels_ + c] = gamma_[c] * xh + beta_[c];
      }
    for (std::size_t c = 0; c < channels_; ++c) {
      running_mean_[c] = momentum_ * running_mean_[c] + (1.0 - momentum_) * mean_cache_[c];
      running_var_[c] = momentum_ * running_var_[c] + (1.0 - momentum_) * var_cache_[c];
    }
    group_size_ = groups;
    has_cache_ = true;
  } else {
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t c = 0; c < channels_; ++c) {
        const double xh =
            (x[g * channels_ + c] - running_mean_[c]) / std::sqrt(running_var_[c] + epsilon_);
        out[g * channels_ + c] = gamma_[c] * xh + beta_[c];
      }
    has_cache_ = false;
  }
  return out;
}

Tensor BatchNormLayer::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("batchnorm backward called before train-mode forward");
  if (!grad_out.same_shape(xhat_cache_)) {
    throw ShapeError("batchnorm backward: grad " + shape_str(grad_out.shape()) + " vs cached " +
                     shape_str(xhat_cache_.shape()));
  }
  const std::size_t groups = group_size_;
  const double inv = 1.0 / static_cast<double>(groups);

  ggrad_.fill(0.0);
  bgrad_.fill(0.0);
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t c = 0; c < channels_; ++c) {
      const double d = grad_out[g * channels_ + c];
      bgrad_[c] += d;
      ggrad_[c] += d * xhat_cache_[g * channels_ + c];
    }

  // dx = gamma/sqrt(var+eps) * (d - mean(d) - xhat * mean(d*xhat)), means per channel.
  Tensor grad_in(grad_out.shape());
  for (std::size_t c = 0; c < channels_; ++c) {
    const double scale = gamma_[c] / std::sqrt(var_cache_[c] + epsilon_);
    const double mean_d = bgrad_[c] * inv;
    const double mean_dxhat = ggrad_[c] * inv;
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t idx = g * channels_ + c;
      grad_in[idx] = scale * (grad_out[idx] - mean_d - xhat_cache_[idx] * mean_dxhat);
    }
  }
  return grad_in;
}

void BatchNormLayer::collect_params(std::vector<ParamRef>& out) {
  out.push_back({describe() + ".gamma", &gamma_, &ggrad_, false});
  out.push_back({describe() + ".beta", &beta_, &bgrad_, false});
}

std::string BatchNormLayer::describe() const { return "bn" + std::to_string(channels_); }

std::vector<std::size_t> BatchNormLayer::output_shape(const std::vector<std::size_t>& in) const {
  if (in.empty() || in.back() != channels_) {
    throw ShapeError("batchnorm: per-sample input " + shape_str(in) + " vs channels " +
                     std::to_string(channels_));
  }
  return in;
}

// -------------------------------------------------------------- Dropout

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) throw ParamError("dropout: rate must be in [0, 1)");
}

Tensor DropoutLayer::forward(const Tensor& x, Mode mode, Rng& rng) {
  if (mode == Mode::infer || rate_ == 0.0) {
    identity_pass_ = true;
    has_cache_ = true;
    return x;
  }
  identity_pass_ = false;
  mask_ = Tensor(x.shape());
  const double keep = 1.0 - rate_;
  const double scale = 1.0 / keep;
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = rng.uniform() < rate_ ? 0.0 : scale;
    mask_[i] = m;
    out[i] *= m;
  }
  has_cache_ = true;
  return out;
}

Tensor DropoutLayer::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("dropout backward called before forward");
  if (identity_pass_) return grad_out;
  if (!grad_out.same_shape(mask_)) {
    throw ShapeError("dropout backward: grad " + shape_str(grad_out.shape()) + " vs mask " +
                     shape_str(mask_.shape()));
  }
  Tensor grad_in = grad_out;
  for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in[i] *= mask_[i];
  return grad_in;
}

std::string DropoutLayer::describe() const {
  return "dropout" + std::to_string(static_cast<int>(rate_ * 100)) + "pct";
}

std::vector<std::size_t> DropoutLayer::output_shape(const std::vector<std::size_t>& in) const {
  return in;
}

// -------------------------------------------------------------- Pooling

Tensor AvgPoolLayer::forward(const Tensor& x, Mode, Rng&) {
  if (x.rank() != 4) throw ShapeError("avgpool forward: expected N x H x W x C");
  const std::size_t n = x.extent(0);
  in_shape_ = x.shape();
  Tensor out({n, x.extent(1) / 2, x.extent(2) / 2, x.extent(3)});
  for (std::size_t i = 0; i < n; ++i) paste_sample(out, i, avg_pool2d(slice_sample(x, i)));
  has_cache_ = true;
  return out;
}

Tensor AvgPoolLayer::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("avgpool backward called before forward");
  const std::size_t n = in_shape_[0], h = in_shape_[1], w = in_shape_[2], c = in_shape_[3];
  Tensor grad_in({n, h, w, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t col = 0; col < w; ++col)
        for (std::size_t ch = 0; ch < c; ++ch)
          grad_in(i, r, col, ch) = 0.25 * grad_out(i, r / 2, col / 2, ch);
  return grad_in;
}

std::string AvgPoolLayer::describe() const { return "avgpool2x2"; }

std::vector<std::size_t> AvgPoolLayer::output_shape(const std::vector<std::size_t>& in) const {
  if (in.size() != 3 || in[0] % 2 != 0 || in[1] % 2 != 0) {
    throw ShapeError("avgpool: per-sample input must be even H x W x C, got " + shape_str(in));
  }
  return {in[0] / 2, in[1] / 2, in[2]};
}

Tensor GlobalAvgPoolLayer::forward(const Tensor& x, Mode, Rng&) {
  if (x.rank() != 4) throw ShapeError("gap forward: expected N x H x W x C");
  const std::size_t n = x.extent(0), c = x.extent(3);
  in_shape_ = x.shape();
  Tensor out({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    Tensor v = global_avg_pool(slice_sample(x, i));
    for (std::size_t ch = 0; ch < c; ++ch) out(i, ch) = v[ch];
  }
  has_cache_ = true;
  return out;
}

Tensor GlobalAvgPoolLayer::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("gap backward called before forward");
  const std::size_t n = in_shape_[0], h = in_shape_[1], w = in_shape_[2], c = in_shape_[3];
  const double inv = 1.0 / static_cast<double>(h * w);
  Tensor grad_in({n, h, w, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t col = 0; col < w; ++col)
        for (std::size_t ch = 0; ch < c; ++ch) grad_in(i, r, col, ch) = grad_out(i, ch) * inv;
  return grad_in;
}

std::string GlobalAvgPoolLayer::describe() const { return "gap"; }

std::vector<std::size_t> GlobalAvgPoolLayer::output_shape(const std::vector<std::size_t>& in) const {
  if (in.size() != 3) throw ShapeError("gap: per-sample input must be H x W x C, got " + shape_str(in));
  return {in[2]};
}

}  // namespace nnkit
