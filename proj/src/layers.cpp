#include "pdgan/layers.hpp"

#include <cmath>

namespace pdgan {

Conv2d Conv2d::make(Index cin, Index cout, int k, int stride, int padding, std::mt19937_64& rng,
                    double bias_init) {
  if (cin < 1 || cout < 1 || k < 1) throw ArgumentError("conv layer extents must be positive");
  const double std = std::sqrt(1.0 / static_cast<double>(cin * k * k));
  Conv2d c;
  c.weight = Tensor::randn(Shape::nchw(cout, cin, k, k), rng, std);
  c.bias = Tensor::full(Shape::vec(cout), bias_init);
  c.stride = stride;
  c.padding = padding;
  return c;
}

void Conv2d::collect(std::vector<Tensor>& out) const {
  out.push_back(weight);
  out.push_back(bias);
}

DenseLayer DenseLayer::make(Index in, Index out, std::mt19937_64& rng) {
  if (in < 1 || out < 1) throw ArgumentError("dense layer extents must be positive");
  const double std = std::sqrt(1.0 / static_cast<double>(in));
  DenseLayer d;
  d.weight = Tensor::randn(Shape::mat(out, in), rng, std);
  d.bias = Tensor::full(Shape::vec(out), 0.0);
  return d;
}

void DenseLayer::collect(std::vector<Tensor>& out) const {
  out.push_back(weight);
  out.push_back(bias);
}

void set_requires_grad(const std::vector<Tensor>& params, bool rg) {
  for (Tensor p : params) p.set_requires_grad(rg);  // handles share their node
}

void zero_grads(const std::vector<Tensor>& params) {
  for (Tensor p : params) p.zero_grad();
}

}  // namespace pdgan
