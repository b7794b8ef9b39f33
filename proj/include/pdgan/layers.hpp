#pragma once

#include <random>
#include <vector>

#include "pdgan/ops.hpp"
#include "pdgan/tensor.hpp"

namespace pdgan {

/// 2-D convolution layer: odd square kernel plus per-channel bias.
struct Conv2d {
  Tensor weight;  // [Cout, Cin, k, k]
  Tensor bias;    // [Cout]
  int stride = 1;
  int padding = 1;

  Tensor operator()(const Tensor& x) const {
    return add_channel_bias(conv2d(x, weight, stride, padding), bias);
  }

  /// Weights ~ N(0, 1/fan_in); bias constant (0 unless stated otherwise).
  static Conv2d make(Index cin, Index cout, int k, int stride, int padding, std::mt19937_64& rng,
                     double bias_init = 0.0);

  void collect(std::vector<Tensor>& out) const;
};

/// Dense layer over flattened [B, K, 1, 1] inputs.
struct DenseLayer {
  Tensor weight;  // [M, K]
  Tensor bias;    // [M]

  Tensor operator()(const Tensor& x) const { return add_channel_bias(linear(x, weight), bias); }

  static DenseLayer make(Index in, Index out, std::mt19937_64& rng);

  void collect(std::vector<Tensor>& out) const;
};

/// Flips requires_grad on a parameter list (training on/off).
void set_requires_grad(const std::vector<Tensor>& params, bool rg);
/// Clears accumulated gradients.
void zero_grads(const std::vector<Tensor>& params);

}  // namespace pdgan
