#include "pdgan/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pdgan/ops.hpp"

namespace pdgan {
namespace {

// Compensated dot product: keeps summation error near one ulp so that the
// central difference of a weighted sum is not swamped by cancellation.
double weighted(const Tensor& out, const Array& w) {
  const double* a = out.value().data();
  const double* b = w.data();
  double s = 0.0, c = 0.0;
  const Index n = out.numel();
  for (Index i = 0; i < n; ++i) {
    const double y = a[i] * b[i] - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

}  // namespace

GradCheckReport check_gradients(const std::string& name, const GradProbe& fn,
                                std::vector<Tensor> inputs, double step, int points_per_input,
                                std::uint64_t seed) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Tensor probe = fn(inputs);  // untaped, just to learn the output shape
  Array w(probe.numel());
  for (Index i = 0; i < w.size(); ++i) w[i] = nd(rng);
  Tensor weights(probe.shape(), w);

  {
    Tape tape;
    Tensor loss = sum(mul(fn(inputs), weights));
    tape.backward(loss);
  }

  GradCheckReport rep{name, 0.0, 0};
  for (auto& t : inputs) {
    const Index n = t.numel();
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    if (n > points_per_input) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(points_per_input));
    }
    for (Index j : idx) {
      const double orig = t.value()[j];
      const double analytic = t.has_grad() ? t.grad()[j] : 0.0;
      // Probe at two step sizes and keep the better agreement: the fine step
      // is blind where the true gradient is exactly zero (rounding noise in
      // the loss dominates ulp/2h), the coarse step is blind where the
      // perturbation pushes a pre-activation across a kink. A wrong gradient
      // disagrees at both.
      double point_err = std::numeric_limits<double>::infinity();
      for (const double h : {step, 100.0 * step}) {
        const double hp = orig + h, hm = orig - h;
        t.value()[j] = hp;
        const double fp = weighted(fn(inputs), w);
        t.value()[j] = hm;
        const double fm = weighted(fn(inputs), w);
        t.value()[j] = orig;
        const double numeric = (fp - fm) / (hp - hm);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        point_err = std::min(point_err, std::abs(analytic - numeric) / denom);
      }
      rep.max_relative_error = std::max(rep.max_relative_error, point_err);
      ++rep.tested_point_count;
    }
  }
  return rep;
}

namespace {

Tensor rnd(const Shape& s, std::mt19937_64& rng) { return Tensor::randn(s, rng); }

// Random values with |x| >= margin, for ops with a kink or pole at zero.
Tensor rnd_away(const Shape& s, std::mt19937_64& rng, double margin) {
  Tensor t = Tensor::randn(s, rng);
  t.value() = t.value().sign() * (t.value().abs() + margin);
  return t;
}

}  // namespace

std::vector<GradCheckReport> engine_op_gradient_checks() {
  std::vector<GradCheckReport> reports;
  std::mt19937_64 rng(1234);
  auto run = [&](const std::string& name, const GradProbe& fn, std::vector<Tensor> ins) {
    reports.push_back(check_gradients(name, fn, std::move(ins)));
  };

  run("conv2d_s1", [](const std::vector<Tensor>& v) { return conv2d(v[0], v[1], 1, 1); },
      {rnd(Shape::nchw(2, 3, 5, 6), rng), rnd(Shape::nchw(4, 3, 3, 3), rng)});
  run("conv2d_s2", [](const std::vector<Tensor>& v) { return conv2d(v[0], v[1], 2, 1); },
      {rnd(Shape::nchw(2, 2, 6, 8), rng), rnd(Shape::nchw(3, 2, 3, 3), rng)});
  run("add_channel_bias",
      [](const std::vector<Tensor>& v) { return add_channel_bias(v[0], v[1]); },
      {rnd(Shape::nchw(2, 3, 4, 4), rng), rnd(Shape::vec(3), rng)});
  run("linear", [](const std::vector<Tensor>& v) { return linear(v[0], v[1]); },
      {rnd(Shape::nchw(3, 7, 1, 1), rng), rnd(Shape::mat(5, 7), rng)});
  run("reshape",
      [](const std::vector<Tensor>& v) { return reshape(v[0], Shape::nchw(1, 4, 2, 3)); },
      {rnd(Shape::nchw(2, 2, 2, 3), rng)});
  run("upsample_nearest", [](const std::vector<Tensor>& v) { return upsample_nearest(v[0], 2); },
      {rnd(Shape::nchw(2, 3, 3, 4), rng)});
  run("avgpool", [](const std::vector<Tensor>& v) { return avgpool(v[0], 2); },
      {rnd(Shape::nchw(2, 3, 4, 6), rng)});
  run("relu", [](const std::vector<Tensor>& v) { return relu(v[0]); },
      {rnd_away(Shape::nchw(2, 3, 4, 4), rng, 0.1)});
  run("leaky_relu", [](const std::vector<Tensor>& v) { return leaky_relu(v[0]); },
      {rnd_away(Shape::nchw(2, 3, 4, 4), rng, 0.1)});
  run("sigmoid", [](const std::vector<Tensor>& v) { return sigmoid(v[0]); },
      {rnd(Shape::nchw(2, 3, 4, 4), rng)});
  run("tanh", [](const std::vector<Tensor>& v) { return tanh(v[0]); },
      {rnd(Shape::nchw(2, 3, 4, 4), rng)});
  run("add", [](const std::vector<Tensor>& v) { return add(v[0], v[1]); },
      {rnd(Shape::nchw(2, 2, 3, 3), rng), rnd(Shape::nchw(2, 2, 3, 3), rng)});
  run("sub", [](const std::vector<Tensor>& v) { return sub(v[0], v[1]); },
      {rnd(Shape::nchw(2, 2, 3, 3), rng), rnd(Shape::nchw(2, 2, 3, 3), rng)});
  run("mul", [](const std::vector<Tensor>& v) { return mul(v[0], v[1]); },
      {rnd(Shape::nchw(2, 2, 3, 3), rng), rnd(Shape::nchw(2, 2, 3, 3), rng)});
  run("add_scalar", [](const std::vector<Tensor>& v) { return add_scalar(v[0], 0.7); },
      {rnd(Shape::nchw(1, 2, 3, 3), rng)});
  run("scale", [](const std::vector<Tensor>& v) { return scale(v[0], -1.3); },
      {rnd(Shape::nchw(1, 2, 3, 3), rng)});
  run("reciprocal", [](const std::vector<Tensor>& v) { return reciprocal(v[0]); },
      {rnd_away(Shape::nchw(1, 2, 3, 3), rng, 0.5)});
  run("abs", [](const std::vector<Tensor>& v) { return abs(v[0]); },
      {rnd_away(Shape::nchw(1, 2, 3, 3), rng, 0.1)});
  run("sum", [](const std::vector<Tensor>& v) { return sum(v[0]); },
      {rnd(Shape::nchw(2, 2, 3, 3), rng)});
  run("mean", [](const std::vector<Tensor>& v) { return mean(v[0]); },
      {rnd(Shape::nchw(2, 2, 3, 3), rng)});
  run("mul_map_shared", [](const std::vector<Tensor>& v) { return mul_map(v[0], v[1]); },
      {rnd(Shape::nchw(2, 3, 4, 4), rng), rnd(Shape::nchw(1, 1, 4, 4), rng)});
  run("mul_map_batched", [](const std::vector<Tensor>& v) { return mul_map(v[0], v[1]); },
      {rnd(Shape::nchw(2, 3, 4, 4), rng), rnd(Shape::nchw(2, 1, 4, 4), rng)});
  run("modulate",
      [](const std::vector<Tensor>& v) { return modulate(v[0], v[1], v[2], v[3]); },
      {rnd(Shape::nchw(2, 3, 4, 4), rng), rnd(Shape::nchw(2, 3, 4, 4), rng),
       rnd(Shape::nchw(2, 3, 4, 4), rng), rnd(Shape::nchw(1, 1, 4, 4), rng)});
  run("concat_channels", [](const std::vector<Tensor>& v) { return concat_channels(v[0], v[1]); },
      {rnd(Shape::nchw(2, 2, 3, 4), rng), rnd(Shape::nchw(2, 3, 3, 4), rng)});
  run("instance_normalize",
      [](const std::vector<Tensor>& v) { return instance_normalize(v[0], 1e-5); },
      {rnd(Shape::nchw(2, 3, 4, 5), rng)});
  return reports;
}

}  // namespace pdgan
