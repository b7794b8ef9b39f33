#include "pdgan/spdnorm.hpp"

#include <cmath>

namespace pdgan {
namespace {

void require_spatial_match(const Tensor& feature, const Tensor& other, const char* what) {
  const auto& fd = feature.shape().dim;
  const auto& od = other.shape().dim;
  if (other.shape().rank != 4 || od[2] != fd[2] || od[3] != fd[3])
    throw DimensionError(std::string(what) + " " + other.shape().str() +
                         " does not match feature resolution " + feature.shape().str());
}

void require_map_batch(const Tensor& feature, const Tensor& map, const char* what) {
  const auto& fd = feature.shape().dim;
  const auto& md = map.shape().dim;
  if (md[1] != 1 || (md[0] != 1 && md[0] != fd[0]))
    throw DimensionError(std::string(what) + " " + map.shape().str() +
                         " must be [1|B, 1, H, W] for feature " + feature.shape().str());
}

// Tiles a [1,1,H,W] constant map to [B,1,H,W] when the batch needs it.
Tensor tile_to_batch(const Tensor& map, Index b) {
  if (map.shape().dim[0] == b) return map;
  const Index hw = map.shape().dim[2] * map.shape().dim[3];
  Tensor out = Tensor::zeros(Shape::nchw(b, 1, map.shape().dim[2], map.shape().dim[3]));
  for (Index bi = 0; bi < b; ++bi) out.value().segment(bi * hw, hw) = map.value();
  return out;
}

}  // namespace

SpdNormParams SpdNormParams::make(Index feature_channels, Index hidden, std::mt19937_64& rng) {
  if (feature_channels < 1 || hidden < 1)
    throw ArgumentError("spdnorm channel extents must be positive");
  SpdNormParams p;
  p.shared = Conv2d::make(3, hidden, 3, 1, 1, rng);
  p.gamma_conv = Conv2d::make(hidden, feature_channels, 3, 1, 1, rng, 1.0);
  p.beta_conv = Conv2d::make(hidden, feature_channels, 3, 1, 1, rng);
  p.soft_embed = Conv2d::make(3, hidden, 3, 1, 1, rng);
  p.soft_gate = Conv2d::make(hidden + feature_channels, 1, 3, 1, 1, rng);
  return p;
}

void SpdNormParams::collect(std::vector<Tensor>& out) const {
  shared.collect(out);
  gamma_conv.collect(out);
  beta_conv.collect(out);
  soft_embed.collect(out);
  soft_gate.collect(out);
}

NormStats instance_stats(const Tensor& feature) {
  if (feature.shape().rank != 4)
    throw DimensionError("instance_stats expects rank-4 input, got " + feature.shape().str());
  const auto& d = feature.shape().dim;
  const Index bc = d[0] * d[1], hw = d[2] * d[3];
  if (hw < 1) throw DimensionError("instance_stats needs at least one spatial element");
  NormStats s{Array(bc), Array(bc)};
  const double inv = 1.0 / static_cast<double>(hw);
  for (Index i = 0; i < bc; ++i) {
    auto seg = feature.value().segment(i * hw, hw);
    s.mu[i] = seg.sum() * inv;
    s.sigma[i] = std::sqrt((seg - s.mu[i]).square().sum() * inv);
  }
  return s;
}

std::pair<Tensor, Tensor> prior_affine(const Tensor& prior, const SpdNormParams& p) {
  Tensor h = relu(p.shared(prior));
  auto [g, b] = conv2d_dual(h, p.gamma_conv.weight, p.beta_conv.weight, p.gamma_conv.stride,
                            p.gamma_conv.padding);
  return {add_channel_bias(g, p.gamma_conv.bias), add_channel_bias(b, p.beta_conv.bias)};
}

Tensor hard_spdnorm(const Tensor& feature, const Tensor& prior, const Tensor& dmap,
                    const SpdNormParams& p) {
  require_spatial_match(feature, prior, "prior");
  require_spatial_match(feature, dmap, "diversity map");
  require_map_batch(feature, dmap, "diversity map");
  auto [gamma, beta] = prior_affine(prior, p);
  Tensor norm = instance_normalize(feature, p.eps);
  return modulate(norm, gamma, beta, dmap);
}

Tensor soft_diversity_map(const Tensor& feature, const Tensor& prior, const Tensor& mask,
                          const SpdNormParams& p) {
  require_spatial_match(feature, prior, "prior");
  require_spatial_match(feature, mask, "mask");
  require_map_batch(feature, mask, "mask");
  Tensor fp = relu(p.soft_embed(prior));
  Tensor s = sigmoid(p.soft_gate(concat_channels(fp, feature)));
  const Index b = feature.shape().dim[0];
  Tensor hole(mask.shape(), 1.0 - mask.value());
  return add(mul_map(s, hole), tile_to_batch(mask, b));
}

Tensor soft_spdnorm(const Tensor& feature, const Tensor& prior, const Tensor& mask,
                    const SpdNormParams& p) {
  Tensor ds = soft_diversity_map(feature, prior, mask, p);
  auto [gamma, beta] = prior_affine(prior, p);
  Tensor norm = instance_normalize(feature, p.eps);
  return modulate(norm, gamma, beta, ds);
}

Tensor map_tensor(const DiversityMap& d) {
  Array v(d.height * d.width);
  for (Index i = 0; i < v.size(); ++i) v[i] = d.values[static_cast<std::size_t>(i)];
  return Tensor(Shape::nchw(1, 1, d.height, d.width), std::move(v));
}

Tensor mask_tensor(const Mask& m) {
  Array v(m.height * m.width);
  for (Index i = 0; i < v.size(); ++i) v[i] = static_cast<double>(m.values[static_cast<std::size_t>(i)]);
  return Tensor(Shape::nchw(1, 1, m.height, m.width), std::move(v));
}

Tensor map_tensor(const std::vector<DiversityMap>& ds) {
  if (ds.empty()) throw ArgumentError("empty diversity map stack");
  const Index b = static_cast<Index>(ds.size()), hw = ds[0].height * ds[0].width;
  Tensor out = Tensor::zeros(Shape::nchw(b, 1, ds[0].height, ds[0].width));
  for (Index bi = 0; bi < b; ++bi) {
    if (ds[static_cast<std::size_t>(bi)].height != ds[0].height ||
        ds[static_cast<std::size_t>(bi)].width != ds[0].width)
      throw DimensionError("diversity map stack extents disagree");
    for (Index i = 0; i < hw; ++i)
      out.value()[bi * hw + i] = ds[static_cast<std::size_t>(bi)].values[static_cast<std::size_t>(i)];
  }
  return out;
}

Tensor mask_tensor(const std::vector<Mask>& ms) {
  if (ms.empty()) throw ArgumentError("empty mask stack");
  const Index b = static_cast<Index>(ms.size()), hw = ms[0].height * ms[0].width;
  Tensor out = Tensor::zeros(Shape::nchw(b, 1, ms[0].height, ms[0].width));
  for (Index bi = 0; bi < b; ++bi) {
    if (ms[static_cast<std::size_t>(bi)].height != ms[0].height ||
        ms[static_cast<std::size_t>(bi)].width != ms[0].width)
      throw DimensionError("mask stack extents disagree");
    for (Index i = 0; i < hw; ++i)
      out.value()[bi * hw + i] =
          static_cast<double>(ms[static_cast<std::size_t>(bi)].values[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<GradCheckReport> spdnorm_gradient_checks() {
  std::vector<GradCheckReport> reports;
  std::mt19937_64 rng(555);
  const Index c = 4, hidden = 5, h = 6, w = 6;
  SpdNormParams p = SpdNormParams::make(c, hidden, rng);
  Tensor feature = Tensor::randn(Shape::nchw(2, c, h, w), rng);
  Tensor prior = Tensor::randn(Shape::nchw(2, 3, h, w), rng);

  std::mt19937_64 mask_rng(99);
  Mask m = Mask::filled(h, w, 1);
  std::bernoulli_distribution holes(0.4);
  for (auto& v : m.values) v = holes(mask_rng) ? 0 : 1;
  Tensor mask = mask_tensor(m);
  Tensor dmap = map_tensor(hard_diversity_map(m, 2, 4.0));

  std::vector<Tensor> inputs{feature, prior};
  p.collect(inputs);

  reports.push_back(check_gradients(
      "instance_normalize_stats",
      [](const std::vector<Tensor>& v) { return instance_normalize(v[0], 1e-5); }, {feature}));
  reports.push_back(check_gradients(
      "prior_affine",
      [&p](const std::vector<Tensor>& v) {
        auto [g, b] = prior_affine(v[1], p);
        return add(g, b);
      },
      inputs));
  reports.push_back(check_gradients(
      "hard_spdnorm",
      [&p, &dmap](const std::vector<Tensor>& v) { return hard_spdnorm(v[0], v[1], dmap, p); },
      inputs));
  reports.push_back(check_gradients(
      "soft_diversity_map",
      [&p, &mask](const std::vector<Tensor>& v) {
        return soft_diversity_map(v[0], v[1], mask, p);
      },
      inputs));
  reports.push_back(check_gradients(
      "soft_spdnorm",
      [&p, &mask](const std::vector<Tensor>& v) { return soft_spdnorm(v[0], v[1], mask, p); },
      inputs));
  return reports;
}

}  // namespace pdgan
