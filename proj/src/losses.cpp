#include "pdgan/losses.hpp"

#include <random>

#include "pdgan/ops.hpp"

namespace pdgan {

void LossWeights::validate() const {
  if (w_adv < 0 || w_fm < 0 || w_rec < 0 || w_pdiv < 0)
    throw ArgumentError("loss weights must be nonnegative");
  if (epsilon_div <= 0) throw ArgumentError("epsilon-div must be positive");
}

namespace {

// Carries a purity grid through one conv: an output position stays pure only
// if every in-bounds tap of its window is pure. Padding taps are constant for
// any input, so they cannot carry pixel influence and never disqualify.
Mask erode_through_conv(const Mask& in, int k, int stride, int padding) {
  const Index ho = (in.height + 2 * padding - k) / stride + 1;
  const Index wo = (in.width + 2 * padding - k) / stride + 1;
  Mask out = Mask::filled(ho, wo, 1);
  for (Index y = 0; y < ho; ++y)
    for (Index x = 0; x < wo; ++x) {
      std::uint8_t pure = 1;
      for (int dy = 0; dy < k && pure; ++dy)
        for (int dx = 0; dx < k && pure; ++dx) {
          const Index yy = y * stride + dy - padding;
          const Index xx = x * stride + dx - padding;
          if (yy >= 0 && yy < in.height && xx >= 0 && xx < in.width && !in.at(yy, xx)) pure = 0;
        }
      out.values[static_cast<std::size_t>(y * wo + x)] = pure;
    }
  return out;
}

Index popcount(const Mask& m) {
  Index n = 0;
  for (auto v : m.values) n += v ? 1 : 0;
  return n;
}

Tensor gate_tensor(const Mask& g) {
  Tensor t = Tensor::zeros(Shape::nchw(1, 1, g.height, g.width));
  for (Index i = 0; i < t.numel(); ++i)
    t.value()[i] = g.values[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  return t;
}

Tensor mean_abs(const Tensor& a, const Tensor& b) { return mean(abs(sub(a, b))); }

}  // namespace

std::vector<Mask> diversity_gates(const Mask& m, const FeaturePyramid& pyramid,
                                  DiversityGate gate) {
  Mask carrier = m;
  if (gate == DiversityGate::Hole)
    for (auto& v : carrier.values) v = v ? 0 : 1;
  std::vector<Mask> gates;
  gates.reserve(pyramid.convs.size());
  for (const auto& conv : pyramid.convs) {
    const int k = static_cast<int>(conv.weight.shape().height());
    carrier = erode_through_conv(carrier, k, conv.stride, conv.padding);
    gates.push_back(carrier);
  }
  return gates;
}

Tensor perceptual_diversity_loss(const Tensor& img1, const Tensor& img2, const Mask& m,
                                 const FeaturePyramid& pyramid, double eps, DiversityGate gate) {
  if (eps <= 0) throw ArgumentError("diversity eps must be positive");
  if (img1.shape() != img2.shape())
    throw DimensionError("diversity images differ in shape: " + img1.shape().str() + " vs " +
                         img2.shape().str());
  if (img1.shape().height() != m.height || img1.shape().width() != m.width)
    throw DimensionError("mask extent does not match images");

  const std::vector<Mask> gates = diversity_gates(m, pyramid, gate);
  const std::vector<Tensor> f1 = pyramid.extract(img1);
  const std::vector<Tensor> f2 = pyramid.extract(img2);

  Tensor dist = Tensor::zeros(Shape::scalar());
  for (std::size_t l = 0; l < gates.size(); ++l) {
    const Index active = popcount(gates[l]);
    if (active == 0) continue;
    const Index count = active * f1[l].shape().channels() * f1[l].shape().b();
    Tensor gated = mul_map(abs(sub(f1[l], f2[l])), gate_tensor(gates[l]));
    dist = add(dist, scale(sum(gated), 1.0 / static_cast<double>(count)));
  }
  return reciprocal(add_scalar(dist, eps));
}

Tensor conventional_diversity_loss(const Tensor& z1, const Tensor& z2, const Tensor& img1,
                                   const Tensor& img2, double eps) {
  if (z1.shape() != z2.shape())
    throw DimensionError("latents differ in shape: " + z1.shape().str() + " vs " +
                         z2.shape().str());
  if (img1.shape() != img2.shape())
    throw DimensionError("images differ in shape: " + img1.shape().str() + " vs " +
                         img2.shape().str());
  return mul(mean_abs(z1, z2), reciprocal(add_scalar(mean_abs(img1, img2), eps)));
}

HingeLosses hinge_losses(const Tensor& real_scores, const Tensor& fake_scores) {
  Tensor d = add(mean(relu(add_scalar(scale(real_scores, -1.0), 1.0))),
                 mean(relu(add_scalar(fake_scores, 1.0))));
  Tensor g = scale(mean(fake_scores), -1.0);
  return {d, g};
}

Tensor feature_matching_loss(const std::vector<Tensor>& real_features,
                             const std::vector<Tensor>& fake_features) {
  if (real_features.size() != fake_features.size())
    throw ContractError("feature matching needs equally many layers: " +
                        std::to_string(real_features.size()) + " vs " +
                        std::to_string(fake_features.size()));
  if (real_features.empty()) throw ContractError("feature matching needs at least one layer");
  Tensor acc = Tensor::zeros(Shape::scalar());
  for (std::size_t l = 0; l < real_features.size(); ++l)
    acc = add(acc, mean_abs(detach(real_features[l]), fake_features[l]));
  return scale(acc, 1.0 / static_cast<double>(real_features.size()));
}

Tensor reconstruction_loss(const Tensor& output, const Tensor& ground_truth,
                           const FeaturePyramid& pyramid) {
  if (output.shape() != ground_truth.shape())
    throw DimensionError("reconstruction pair differs in shape: " + output.shape().str() +
                         " vs " + ground_truth.shape().str());
  Tensor acc = mean_abs(output, ground_truth);
  const std::vector<Tensor> fo = pyramid.extract(output);
  const std::vector<Tensor> fg = pyramid.extract(ground_truth);
  for (std::size_t l = 0; l < fo.size(); ++l) acc = add(acc, mean_abs(fo[l], fg[l]));
  return acc;
}

std::vector<GradCheckReport> losses_gradient_checks() {
  std::vector<GradCheckReport> reports;
  std::mt19937_64 rng(991);
  const FeaturePyramid pyramid = FeaturePyramid::make(17);

  Mask m = Mask::filled(16, 16, 1);
  for (Index y = 3; y < 13; ++y)
    for (Index x = 2; x < 12; ++x) m.values[static_cast<std::size_t>(y * 16 + x)] = 0;

  reports.push_back(check_gradients(
      "perceptual_diversity_loss",
      [&m, &pyramid](const std::vector<Tensor>& v) {
        return perceptual_diversity_loss(v[0], v[1], m, pyramid, 1e-5);
      },
      {Tensor::randn(Shape::nchw(1, 3, 16, 16), rng, 0.5),
       Tensor::randn(Shape::nchw(1, 3, 16, 16), rng, 0.5)},
      1e-5, 24));
  reports.push_back(check_gradients(
      "perceptual_diversity_loss_background",
      [&m, &pyramid](const std::vector<Tensor>& v) {
        return perceptual_diversity_loss(v[0], v[1], m, pyramid, 1e-5,
                                         DiversityGate::Background);
      },
      {Tensor::randn(Shape::nchw(1, 3, 16, 16), rng, 0.5),
       Tensor::randn(Shape::nchw(1, 3, 16, 16), rng, 0.5)},
      1e-5, 24));
  reports.push_back(check_gradients(
      "conventional_diversity_loss",
      [](const std::vector<Tensor>& v) {
        return conventional_diversity_loss(v[0], v[1], v[2], v[3], 1e-5);
      },
      {Tensor::randn(Shape::vec(8), rng), Tensor::randn(Shape::vec(8), rng),
       Tensor::randn(Shape::nchw(1, 3, 8, 8), rng, 0.5),
       Tensor::randn(Shape::nchw(1, 3, 8, 8), rng, 0.5)},
      1e-5, 24));
  reports.push_back(check_gradients(
      "hinge_d",
      [](const std::vector<Tensor>& v) { return hinge_losses(v[0], v[1]).d; },
      {Tensor::randn(Shape::nchw(2, 1, 4, 4), rng), Tensor::randn(Shape::nchw(2, 1, 4, 4), rng)},
      1e-5, 24));
  reports.push_back(check_gradients(
      "hinge_g",
      [](const std::vector<Tensor>& v) { return hinge_losses(v[0], v[1]).g; },
      {Tensor::randn(Shape::nchw(2, 1, 4, 4), rng), Tensor::randn(Shape::nchw(2, 1, 4, 4), rng)},
      1e-5, 24));
  // Real features are the captured constants; only the fake branch is probed.
  {
    std::vector<Tensor> real{Tensor::randn(Shape::nchw(1, 4, 6, 6), rng),
                             Tensor::randn(Shape::nchw(1, 8, 3, 3), rng)};
    reports.push_back(check_gradients(
        "feature_matching_loss",
        [real](const std::vector<Tensor>& v) {
          return feature_matching_loss(real, {v[0], v[1]});
        },
        {Tensor::randn(Shape::nchw(1, 4, 6, 6), rng), Tensor::randn(Shape::nchw(1, 8, 3, 3), rng)},
        1e-5, 24));
  }
  reports.push_back(check_gradients(
      "reconstruction_loss",
      [&pyramid](const std::vector<Tensor>& v) {
        return reconstruction_loss(v[0], v[1], pyramid);
      },
      {Tensor::randn(Shape::nchw(1, 3, 16, 16), rng, 0.5),
       Tensor::randn(Shape::nchw(1, 3, 16, 16), rng, 0.5)},
      1e-5, 12));
  return reports;
}

}  // namespace pdgan
