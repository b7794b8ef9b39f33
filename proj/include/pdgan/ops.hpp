#pragma once

#include "pdgan/tensor.hpp"

#include <utility>

namespace pdgan {

enum class Act { ReLU, LeakyReLU, Sigmoid, Tanh };

// Differentiable operations. Each records its backward step on the active
// Tape when some input requires gradients.

/// Cross-correlation of input [B,Cin,H,W] with kernel [Cout,Cin,kh,kw].
/// Output extents: H' = (H + 2*padding - kh)/stride + 1, likewise W'.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);

/// Two convolutions of the same input, sharing one im2col pass per direction.
std::pair<Tensor, Tensor> conv2d_dual(const Tensor& input, const Tensor& k1, const Tensor& k2,
                                      int stride, int padding);

/// x [B,C,H,W] + bias [1,C,1,1], bias broadcast over batch and space.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);

/// x [B,K,1,1] times weight [M,K] -> [B,M,1,1].
Tensor linear(const Tensor& x, const Tensor& weight);

/// Same element count, new extents. Copies.
Tensor reshape(const Tensor& x, const Shape& s);

/// Each source element replicated into a factor x factor block.
Tensor upsample_nearest(const Tensor& x, int factor);

/// Mean over factor x factor blocks; factor must divide both extents.
Tensor avgpool(const Tensor& x, int factor);

Tensor activation(const Tensor& x, Act kind);
inline Tensor relu(const Tensor& x) { return activation(x, Act::ReLU); }
inline Tensor leaky_relu(const Tensor& x) { return activation(x, Act::LeakyReLU); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Act::Sigmoid); }
inline Tensor tanh(const Tensor& x) { return activation(x, Act::Tanh); }

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& x, double s);
Tensor scale(const Tensor& x, double s);
Tensor reciprocal(const Tensor& x);
Tensor abs(const Tensor& x);

/// Sum of all elements, as a scalar tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// x [B,C,H,W] times map [Bm,1,H,W] with Bm in {1,B}; the map value at each
/// spatial position multiplies every channel.
Tensor mul_map(const Tensor& x, const Tensor& map);

/// (gamma * x + beta) * map in one pass; map broadcast as in mul_map.
Tensor modulate(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& map);

/// [B,Ca,H,W] ++ [B,Cb,H,W] -> [B,Ca+Cb,H,W].
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Per sample and channel: (x - mu) / sqrt(var + eps) with mean and population
/// variance taken over the spatial positions only.
Tensor instance_normalize(const Tensor& x, double eps);

/// Value copy that never joins the tape: gradients stop here.
Tensor detach(const Tensor& x);

/// Leaky-ReLU negative slope shared by every use in the project.
inline constexpr double kLeakySlope = 0.2;

}  // namespace pdgan
