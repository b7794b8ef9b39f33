#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pdgan/grad_check.hpp"
#include "pdgan/ops.hpp"
#include "pdgan/tensor.hpp"

using namespace pdgan;

namespace {

// Direct-summation cross-correlation, quadruple loop over output and kernel.
Tensor conv_oracle(const Tensor& in, const Tensor& k, int stride, int pad) {
  const auto& d = in.shape().dim;
  const auto& kd = k.shape().dim;
  const Index b = d[0], cin = d[1], h = d[2], w = d[3];
  const Index cout = kd[0], kh = kd[2], kw = kd[3];
  const Index ho = (h + 2 * pad - kh) / stride + 1;
  const Index wo = (w + 2 * pad - kw) / stride + 1;
  Tensor out = Tensor::zeros(Shape::nchw(b, cout, ho, wo));
  for (Index bi = 0; bi < b; ++bi)
    for (Index co = 0; co < cout; ++co)
      for (Index yo = 0; yo < ho; ++yo)
        for (Index xo = 0; xo < wo; ++xo) {
          double acc = 0;
          for (Index ci = 0; ci < cin; ++ci)
            for (Index dy = 0; dy < kh; ++dy)
              for (Index dx = 0; dx < kw; ++dx) {
                const Index y = yo * stride - pad + dy;
                const Index x = xo * stride - pad + dx;
                if (y < 0 || y >= h || x < 0 || x >= w) continue;
                acc += in.at(bi, ci, y, x) * k.at(co, ci, dy, dx);
              }
          out.value()[out.offset(bi, co, yo, xo)] = acc;
        }
  return out;
}

}  // namespace

TEST_CASE("tensor shape and value length must agree") {
  CHECK_THROWS_AS(Tensor(Shape::nchw(1, 1, 2, 2), Array::Zero(3)), DimensionError);
  Tensor t = Tensor::zeros(Shape::nchw(2, 3, 4, 5));
  CHECK(t.numel() == 120);
  CHECK(t.shape().str() == "[2x3x4x5]");
}

TEST_CASE("conv2d zero input gives zero output at same extent") {
  std::mt19937_64 rng(1);
  Tensor in = Tensor::zeros(Shape::nchw(1, 1, 3, 3));
  Tensor k = Tensor::randn(Shape::nchw(2, 1, 3, 3), rng);
  Tensor out = conv2d(in, k, 1, 1);
  CHECK(out.shape() == Shape::nchw(1, 2, 3, 3));
  CHECK(out.value().abs().maxCoeff() == 0.0);
}

TEST_CASE("conv2d 1x1 kernel on a single element is a scalar product") {
  Tensor in = Tensor::from(Shape::nchw(1, 1, 1, 1), {2.0});
  Tensor k = Tensor::from(Shape::nchw(1, 1, 1, 1), {3.0});
  Tensor out = conv2d(in, k, 1, 0);
  CHECK(out.scalar() == 6.0);
}

TEST_CASE("conv2d matches direct summation on a random case") {
  std::mt19937_64 rng(7);
  Tensor in = Tensor::randn(Shape::nchw(1, 2, 5, 5), rng);
  Tensor k = Tensor::randn(Shape::nchw(3, 2, 3, 3), rng);
  for (int stride : {1, 2})
    for (int pad : {0, 1, 2}) {
      Tensor got = conv2d(in, k, stride, pad);
      Tensor want = conv_oracle(in, k, stride, pad);
      REQUIRE(got.shape() == want.shape());
      CHECK((got.value() - want.value()).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("conv2d matches direct summation across shapes up to 2x4x8x8") {
  std::mt19937_64 rng(11);
  for (Index b : {1, 2})
    for (Index cin : {1, 4})
      for (Index h : {1, 5, 8})
        for (Index w : {3, 8})
          for (Index kk : {1, 3})
            for (int stride : {1, 2})
              for (int pad : {0, 1}) {
                if (h + 2 * pad < kk || w + 2 * pad < kk) continue;
                Tensor in = Tensor::randn(Shape::nchw(b, cin, h, w), rng);
                Tensor k = Tensor::randn(Shape::nchw(2, cin, kk, kk), rng);
                Tensor got = conv2d(in, k, stride, pad);
                Tensor want = conv_oracle(in, k, stride, pad);
                REQUIRE(got.shape() == want.shape());
                CHECK((got.value() - want.value()).abs().maxCoeff() < 1e-12);
              }
}

TEST_CASE("conv2d rejects bad arguments") {
  std::mt19937_64 rng(2);
  Tensor in = Tensor::randn(Shape::nchw(1, 2, 4, 4), rng);
  Tensor k3 = Tensor::randn(Shape::nchw(1, 3, 3, 3), rng);
  CHECK_THROWS_AS(conv2d(in, k3, 1, 1), DimensionError);
  Tensor keven = Tensor::randn(Shape::nchw(1, 2, 2, 2), rng);
  CHECK_THROWS_AS(conv2d(in, keven, 1, 1), ArgumentError);
  Tensor k = Tensor::randn(Shape::nchw(1, 2, 3, 3), rng);
  CHECK_THROWS_AS(conv2d(in, k, 0, 1), ArgumentError);
  CHECK_THROWS_AS(conv2d(in, k, 1, -1), ArgumentError);
}

TEST_CASE("upsample_nearest replicates blocks") {
  Tensor in = Tensor::from(Shape::nchw(1, 1, 2, 2), {1, 2, 3, 4});
  Tensor out = upsample_nearest(in, 2);
  Tensor want = Tensor::from(Shape::nchw(1, 1, 4, 4),
                             {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4});
  CHECK((out.value() - want.value()).abs().maxCoeff() == 0.0);

  Tensor same = upsample_nearest(in, 1);
  CHECK((same.value() - in.value()).abs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(upsample_nearest(in, 0), ArgumentError);
}

TEST_CASE("upsample_nearest gradient is block-sum") {
  std::mt19937_64 rng(3);
  Tensor x = Tensor::randn(Shape::nchw(1, 2, 3, 3), rng);
  x.set_requires_grad(true);
  {
    Tape tape;
    Tensor loss = sum(upsample_nearest(x, 2));
    tape.backward(loss);
  }
  CHECK((x.grad() - 4.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("avgpool averages blocks and rejects non-divisible extents") {
  Tensor in = Tensor::from(Shape::nchw(1, 1, 2, 2), {1, 2, 3, 4});
  Tensor out = avgpool(in, 2);
  CHECK(out.scalar() == 2.5);
  Tensor odd = Tensor::zeros(Shape::nchw(1, 1, 3, 3));
  CHECK_THROWS_AS(avgpool(odd, 2), ArgumentError);
}

TEST_CASE("activation fixed points") {
  Tensor z = Tensor::zeros(Shape::vec(1));
  CHECK(sigmoid(z).scalar() == 0.5);
  CHECK(tanh(z).scalar() == 0.0);
  Tensor n = Tensor::from(Shape::vec(2), {-1.0, 2.0});
  Tensor r = relu(n);
  CHECK(r.value()[0] == 0.0);
  CHECK(r.value()[1] == 2.0);
  Tensor l = leaky_relu(n);
  CHECK(l.value()[0] == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(l.value()[1] == 2.0);
}

TEST_CASE("sigmoid gradient at zero is a quarter") {
  Tensor x = Tensor::zeros(Shape::vec(1));
  x.set_requires_grad(true);
  {
    Tape tape;
    tape.backward(sum(sigmoid(x)));
  }
  CHECK(std::abs(x.grad()[0] - 0.25) < 1e-15);

  const double h = 1e-6;
  const double fd = (1.0 / (1.0 + std::exp(-h)) - 1.0 / (1.0 + std::exp(h))) / (2 * h);
  CHECK(std::abs(x.grad()[0] - fd) < 1e-8);
}

TEST_CASE("backward of sum gives ones; of sum of squares gives 2x") {
  std::mt19937_64 rng(5);
  Tensor x = Tensor::randn(Shape::nchw(2, 1, 3, 3), rng);
  x.set_requires_grad(true);
  {
    Tape tape;
    tape.backward(sum(x));
  }
  CHECK((x.grad() - 1.0).abs().maxCoeff() == 0.0);

  Tensor y = Tensor::from(Shape::vec(1), {3.0});
  y.set_requires_grad(true);
  {
    Tape tape;
    tape.backward(sum(mul(y, y)));
  }
  CHECK(y.grad()[0] == 6.0);
}

TEST_CASE("backward requires a scalar loss") {
  Tensor x = Tensor::zeros(Shape::vec(3), true);
  Tape tape;
  Tensor y = add_scalar(x, 1.0);
  CHECK_THROWS_AS(tape.backward(y), ContractError);
}

TEST_CASE("backward accumulates without reset and is deterministic with reset") {
  std::mt19937_64 rng(6);
  Tensor x = Tensor::randn(Shape::nchw(1, 2, 4, 4), rng);
  Tensor k = Tensor::randn(Shape::nchw(2, 2, 3, 3), rng);
  x.set_requires_grad(true);
  k.set_requires_grad(true);

  auto pass = [&] {
    Tape tape;
    tape.backward(sum(sigmoid(instance_normalize(conv2d(x, k, 1, 1), 1e-5))));
  };
  pass();
  Array g1 = x.grad(), gk1 = k.grad();
  pass();  // no reset: doubles
  CHECK((x.grad() - 2.0 * g1).abs().maxCoeff() < 1e-12);
  x.zero_grad();
  k.zero_grad();
  pass();  // reset: identical replay
  CHECK((x.grad() - g1).abs().maxCoeff() == 0.0);
  CHECK((k.grad() - gk1).abs().maxCoeff() == 0.0);
}

TEST_CASE("composite graph gradients match central differences") {
  std::mt19937_64 rng(8);
  Tensor x = Tensor::randn(Shape::nchw(1, 2, 4, 4), rng);
  Tensor k = Tensor::randn(Shape::nchw(3, 2, 3, 3), rng);
  auto rep = check_gradients(
      "conv_norm_sigmoid",
      [](const std::vector<Tensor>& v) {
        return sigmoid(instance_normalize(conv2d(v[0], v[1], 1, 1), 1e-5));
      },
      {x, k});
  CHECK(rep.max_relative_error < 1e-4);
}

TEST_CASE("grad_check on the identity is exact to rounding") {
  std::mt19937_64 rng(9);
  // Linear probe: the central difference is exact for any step, so a wide one
  // keeps summation rounding (~ulp(loss)/step) below the 1e-10 bar.
  auto rep = check_gradients(
      "identity", [](const std::vector<Tensor>& v) { return reshape(v[0], v[0].shape()); },
      {Tensor::randn(Shape::nchw(1, 2, 3, 3), rng)}, /*step=*/1e-2);
  CHECK(rep.max_relative_error < 1e-10);
}

TEST_CASE("grad_check on conv2d") {
  std::mt19937_64 rng(10);
  auto rep = check_gradients(
      "conv2d", [](const std::vector<Tensor>& v) { return conv2d(v[0], v[1], 1, 1); },
      {Tensor::randn(Shape::nchw(2, 3, 5, 5), rng), Tensor::randn(Shape::nchw(4, 3, 3, 3), rng)});
  CHECK(rep.max_relative_error < 1e-4);
}

TEST_CASE("every registered primitive passes the gradient check") {
  for (const auto& rep : engine_op_gradient_checks()) {
    INFO(rep.op_name);
    CHECK(rep.tested_point_count > 0);
    CHECK(rep.max_relative_error < 1e-3);
  }
}

TEST_CASE("elementwise and reduction ops") {
  Tensor a = Tensor::from(Shape::vec(3), {1, -2, 3});
  Tensor b = Tensor::from(Shape::vec(3), {4, 5, -6});
  Tensor ab = Tensor::from(Shape::vec(3), {5, 3, -3});
  CHECK((add(a, b).value() - ab.value()).abs().maxCoeff() == 0.0);
  CHECK(sum(mul(a, b)).scalar() == -24.0);
  CHECK(mean(abs(a)).scalar() == 2.0);
  CHECK(sub(a, a).value().abs().maxCoeff() == 0.0);
  CHECK(reciprocal(b).value()[0] == 0.25);
  Tensor c = Tensor::zeros(Shape::vec(2));
  CHECK_THROWS_AS(add(a, c), DimensionError);
}

TEST_CASE("mul_map broadcasts one map across channels") {
  Tensor x = Tensor::from(Shape::nchw(1, 2, 2, 2), {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor m = Tensor::from(Shape::nchw(1, 1, 2, 2), {1, 0, 0, 1});
  Tensor out = mul_map(x, m);
  Tensor want = Tensor::from(Shape::nchw(1, 2, 2, 2), {1, 0, 0, 4, 5, 0, 0, 8});
  CHECK((out.value() - want.value()).abs().maxCoeff() == 0.0);
  Tensor bad = Tensor::zeros(Shape::nchw(3, 1, 2, 2));
  CHECK_THROWS_AS(mul_map(x, bad), DimensionError);
}

TEST_CASE("modulate equals the mul/add/mul_map composition") {
  std::mt19937_64 rng(21);
  Tensor x = Tensor::randn(Shape::nchw(2, 3, 4, 5), rng);
  Tensor g = Tensor::randn(Shape::nchw(2, 3, 4, 5), rng);
  Tensor b = Tensor::randn(Shape::nchw(2, 3, 4, 5), rng);
  Tensor m = Tensor::randn(Shape::nchw(1, 1, 4, 5), rng);
  Tensor fused = modulate(x, g, b, m);
  Tensor chained = mul_map(add(mul(g, x), b), m);
  CHECK((fused.value() - chained.value()).abs().maxCoeff() == 0.0);

  for (Tensor* t : {&x, &g, &b, &m}) t->set_requires_grad(true);
  Array gx, gg, gb, gm;
  {
    Tape tape;
    tape.backward(sum(modulate(x, g, b, m)));
    gx = x.grad();
    gg = g.grad();
    gb = b.grad();
    gm = m.grad();
  }
  for (Tensor* t : {&x, &g, &b, &m}) t->zero_grad();
  {
    Tape tape;
    tape.backward(sum(mul_map(add(mul(g, x), b), m)));
  }
  CHECK((gx - x.grad()).abs().maxCoeff() < 1e-12);
  CHECK((gg - g.grad()).abs().maxCoeff() < 1e-12);
  CHECK((gb - b.grad()).abs().maxCoeff() < 1e-12);
  CHECK((gm - m.grad()).abs().maxCoeff() < 1e-12);

  Tensor bad_map = Tensor::zeros(Shape::nchw(3, 1, 4, 5));
  CHECK_THROWS_AS(modulate(x, g, b, bad_map), DimensionError);
  Tensor bad_gamma = Tensor::zeros(Shape::nchw(2, 3, 5, 4));
  CHECK_THROWS_AS(modulate(x, bad_gamma, b, m), DimensionError);
}

TEST_CASE("concat_channels stacks along the channel axis") {
  Tensor a = Tensor::from(Shape::nchw(1, 1, 1, 2), {1, 2});
  Tensor b = Tensor::from(Shape::nchw(1, 2, 1, 2), {3, 4, 5, 6});
  Tensor out = concat_channels(a, b);
  CHECK(out.shape() == Shape::nchw(1, 3, 1, 2));
  Tensor want = Tensor::from(Shape::nchw(1, 3, 1, 2), {1, 2, 3, 4, 5, 6});
  CHECK((out.value() - want.value()).abs().maxCoeff() == 0.0);
}

TEST_CASE("instance_normalize gives zero mean and unit variance per channel") {
  std::mt19937_64 rng(12);
  Tensor x = Tensor::randn(Shape::nchw(2, 3, 6, 6), rng, 3.0);
  Tensor y = instance_normalize(x, 1e-5);
  const Index hw = 36;
  for (Index bc = 0; bc < 6; ++bc) {
    auto seg = y.value().segment(bc * hw, hw);
    CHECK(std::abs(seg.mean()) < 1e-12);
    CHECK(std::abs(seg.square().mean() - 1.0) < 1e-4);  // eps shrinks variance slightly
  }
}

TEST_CASE("tensor records round-trip bitwise") {
  std::mt19937_64 rng(13);
  Tensor t = Tensor::randn(Shape::nchw(2, 3, 4, 5), rng);
  std::stringstream ss;
  write_tensor(ss, t);
  Tensor back = read_tensor(ss);
  CHECK(back.shape() == t.shape());
  CHECK((back.value() - t.value()).abs().maxCoeff() == 0.0);

  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(read_tensor(bad), ArgumentError);
}

TEST_CASE("all_finite flags non-finite values") {
  Tensor t = Tensor::zeros(Shape::vec(3));
  CHECK(t.all_finite());
  t.value()[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK(!t.all_finite());
}
