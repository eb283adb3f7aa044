#pragma once

#include <string>

#include "nnkit/tensor.hpp"

namespace nnkit {

enum class Activation { tanh_fn, sigmoid, relu, elu, selu, gelu, isrlu };

// One of the seven activations together with its constants.
//
// Defaults are the stated ones: ELU alpha = 1, SELU (lambda, alpha) =
// (1.0507, 1.6732), ISRLU alpha = 1 (valid range [1, 3]). The SELU constants
// are kept as the 5-digit truncations; the full-precision originals are
// 1.05070098... / 1.67326324... and are intentionally not used.
struct ActivationKind {
  Activation variant = Activation::relu;
  double elu_alpha = 1.0;
  double selu_lambda = 1.0507;
  double selu_alpha = 1.6732;
  double isrlu_alpha = 1.0;

  static ActivationKind tanh_fn() { return {Activation::tanh_fn}; }
  static ActivationKind sigmoid() { return {Activation::sigmoid}; }
  static ActivationKind relu() { return {Activation::relu}; }
  static ActivationKind elu(double alpha = 1.0);
  static ActivationKind selu() { return {Activation::selu}; }
  static ActivationKind isrlu(double alpha = 1.0);

  std::string name() const;
  // Parses "relu", "ELU", ... ; throws ParamError on unknown names.
  static ActivationKind parse(const std::string& name);
};

// Scalar forward value f(x). Non-finite x raises DomainError.
double act_forward(const ActivationKind& kind, double x);

// Scalar derivative f'(x). Branch conventions follow the printed piecewise
// forms: ReLU' uses x <= 0 -> 0, ELU'/SELU' use x <= 0 for the exponential
// branch, ISRLU uses x >= 0 for the linear branch.
double act_backward(const ActivationKind& kind, double x);

// Elementwise lifts; shape preserved. A non-finite element raises DomainError
// naming the flat element index.
Tensor act_map(const ActivationKind& kind, const Tensor& t);
Tensor act_map_grad(const ActivationKind& kind, const Tensor& t);

// Max-subtracted softmax over a length-n vector; entries in (0, 1], sum 1.
Tensor softmax(const Tensor& z);

// Rowwise softmax over a batch of logits (N x C).
Tensor softmax_rows(const Tensor& logits);

}  // namespace nnkit
