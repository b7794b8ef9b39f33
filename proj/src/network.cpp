#include "pdgan/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace pdgan {

void GeneratorConfig::validate() const {
  if (latent_dim < 1) throw ArgumentError("latent-dim must be positive");
  if (base_h < 1 || base_w < 1) throw ArgumentError("base resolution must be positive");
  if (stages() < 2) throw ArgumentError("generator needs at least two stages");
  for (Index c : stage_channels)
    if (c < 1) throw ArgumentError("stage channel widths must be positive");
  if (static_cast<Index>(n_schedule.size()) != stages())
    throw ArgumentError("n-schedule length " + std::to_string(n_schedule.size()) +
                        " must equal stage count " + std::to_string(stages()));
  for (int n : n_schedule)
    if (n < 1) throw ArgumentError("every dilation count must be >= 1");
  const Index scale = Index{1} << (stages() - 1);
  if (out_h != base_h * scale || out_w != base_w * scale)
    throw ArgumentError("output resolution must be base * 2^(stages-1); got " +
                        std::to_string(out_h) + "x" + std::to_string(out_w));
  if (norm_hidden < 1) throw ArgumentError("norm hidden width must be positive");
  if (!(k > 1.0)) throw ArgumentError("diversity decay base k must exceed 1");
  if (!(eps > 0.0)) throw ArgumentError("eps must be positive");
}

ResBlockParams ResBlockParams::make(Index cin, Index cout, Index hidden, std::mt19937_64& rng) {
  if (cin < 1 || cout < 1) throw ArgumentError("resblock channel extents must be positive");
  const Index cmid = std::min(cin, cout);
  ResBlockParams p;
  p.soft_main = SpdNormParams::make(cin, hidden, rng);
  p.hard_main = SpdNormParams::make(cmid, hidden, rng);
  p.soft_skip = SpdNormParams::make(cin, hidden, rng);
  p.conv1 = Conv2d::make(cin, cmid, 3, 1, 1, rng);
  p.conv2 = Conv2d::make(cmid, cout, 3, 1, 1, rng);
  p.skip = Conv2d::make(cin, cout, 1, 1, 0, rng);
  return p;
}

void ResBlockParams::collect(std::vector<Tensor>& out) const {
  soft_main.collect(out);
  hard_main.collect(out);
  soft_skip.collect(out);
  conv1.collect(out);
  conv2.collect(out);
  skip.collect(out);
}

Tensor spdnorm_resblock(const Tensor& feature, const Tensor& prior, const Tensor& mask,
                        const Tensor& dmap, const ResBlockParams& p) {
  Tensor a = p.conv1(leaky_relu(soft_spdnorm(feature, prior, mask, p.soft_main)));
  Tensor main = p.conv2(leaky_relu(hard_spdnorm(a, prior, dmap, p.hard_main)));
  Tensor skip = p.skip(soft_spdnorm(feature, prior, mask, p.soft_skip));
  return add(main, skip);
}

Tensor spdnorm_resblock(const Tensor& feature, const Tensor& prior, const Mask& mask, int n,
                        double k, const ResBlockParams& p) {
  return spdnorm_resblock(feature, prior, mask_tensor(mask),
                          map_tensor(hard_diversity_map(mask, n, k)), p);
}

StageContext make_stage_context(const Tensor& prior, const std::vector<Mask>& masks,
                                const GeneratorConfig& cfg) {
  cfg.validate();
  if (prior.shape().rank != 4 || prior.shape().dim[1] != 3 || prior.shape().dim[2] != cfg.out_h ||
      prior.shape().dim[3] != cfg.out_w)
    throw DimensionError("prior " + prior.shape().str() + " must be [B, 3, " +
                         std::to_string(cfg.out_h) + ", " + std::to_string(cfg.out_w) + "]");
  if (masks.empty() || static_cast<Index>(masks.size()) != prior.shape().dim[0])
    throw DimensionError("mask count " + std::to_string(masks.size()) +
                         " must match prior batch " + std::to_string(prior.shape().dim[0]));
  for (const Mask& m : masks)
    if (m.height != cfg.out_h || m.width != cfg.out_w)
      throw DimensionError("mask extents must equal the output resolution");

  StageContext ctx;
  for (Index s = 0; s < cfg.stages(); ++s) {
    const int factor = static_cast<int>(cfg.out_h / (cfg.base_h << s));
    ctx.priors.push_back(factor == 1 ? prior : avgpool(prior, factor));
    std::vector<Mask> down;
    std::vector<DiversityMap> maps;
    for (const Mask& m : masks) {
      down.push_back(factor == 1 ? m : downsample_mask(m, factor));
      maps.push_back(
          hard_diversity_map(down.back(), cfg.n_schedule[static_cast<std::size_t>(s)], cfg.k));
    }
    ctx.masks.push_back(mask_tensor(down));
    ctx.dmaps.push_back(map_tensor(maps));
  }
  return ctx;
}

Generator Generator::make(const GeneratorConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  Generator g;
  g.cfg = cfg;
  g.project = DenseLayer::make(cfg.latent_dim, cfg.stage_channels[0] * cfg.base_h * cfg.base_w, rng);
  for (Index s = 0; s < cfg.stages(); ++s) {
    const Index cin = cfg.stage_channels[static_cast<std::size_t>(s == 0 ? 0 : s - 1)];
    const Index cout = cfg.stage_channels[static_cast<std::size_t>(s)];
    g.blocks.push_back(ResBlockParams::make(cin, cout, cfg.norm_hidden, rng));
  }
  g.to_rgb = Conv2d::make(cfg.stage_channels.back(), 3, 3, 1, 1, rng);
  return g;
}

std::vector<Tensor> Generator::parameters() const {
  std::vector<Tensor> out;
  project.collect(out);
  for (const auto& b : blocks) b.collect(out);
  to_rgb.collect(out);
  return out;
}

Tensor generate_batch(const Generator& g, const Tensor& z, const StageContext& ctx) {
  return generate_batch(g, z, ctx, nullptr);
}

Tensor generate_batch(const Generator& g, const Tensor& z, const StageContext& ctx,
                      std::vector<Tensor>* stage_inputs) {
  const auto& cfg = g.cfg;
  if (z.shape().rank != 4 || z.shape().dim[1] != cfg.latent_dim || z.shape().dim[2] != 1 ||
      z.shape().dim[3] != 1)
    throw ArgumentError("latent batch must be [B, " + std::to_string(cfg.latent_dim) +
                        ", 1, 1], got " + z.shape().str());
  if (static_cast<Index>(ctx.priors.size()) != cfg.stages())
    throw DimensionError("stage context holds " + std::to_string(ctx.priors.size()) +
                         " stages, generator expects " + std::to_string(cfg.stages()));
  const Index b = z.shape().dim[0];
  Tensor x = reshape(g.project(z), Shape::nchw(b, cfg.stage_channels[0], cfg.base_h, cfg.base_w));
  for (Index s = 0; s < cfg.stages(); ++s) {
    if (s > 0) x = upsample_nearest(x, 2);
    const auto si = static_cast<std::size_t>(s);
    if (stage_inputs) stage_inputs->push_back(x);
    x = spdnorm_resblock(x, ctx.priors[si], ctx.masks[si], ctx.dmaps[si],
                         g.blocks[si]);
  }
  return tanh(g.to_rgb(leaky_relu(x)));
}

Tensor generate(const Generator& g, const Tensor& z, const Tensor& prior, const Mask& mask) {
  if (z.numel() != g.cfg.latent_dim)
    throw ArgumentError("latent vector length " + std::to_string(z.numel()) + " must be " +
                        std::to_string(g.cfg.latent_dim));
  Tensor zb = reshape(z, Shape::nchw(1, g.cfg.latent_dim, 1, 1));
  StageContext ctx = make_stage_context(prior, {mask}, g.cfg);
  return generate_batch(g, zb, ctx);
}

Tensor composite(const Tensor& generated, const Tensor& input, const Tensor& mask) {
  if (generated.shape() != input.shape())
    throw DimensionError("composite shapes disagree: " + generated.shape().str() + " vs " +
                         input.shape().str());
  Tensor hole(mask.shape(), 1.0 - mask.value());
  return add(mul_map(input, mask), mul_map(generated, hole));
}

Discriminator Discriminator::make(Index base_width, std::mt19937_64& rng) {
  if (base_width < 1) throw ArgumentError("discriminator base width must be positive");
  Discriminator d;
  Index cin = 3;
  for (int i = 0; i < 4; ++i) {
    const Index cout = base_width << i;
    d.convs.push_back(Conv2d::make(cin, cout, 3, 2, 1, rng));
    cin = cout;
  }
  d.convs.push_back(Conv2d::make(cin, 1, 3, 1, 1, rng));
  return d;
}

Discriminator::Result Discriminator::operator()(const Tensor& image) const {
  Result r;
  Tensor x = image;
  for (std::size_t i = 0; i + 1 < convs.size(); ++i) {
    x = leaky_relu(convs[i](x));
    r.features.push_back(x);
  }
  r.score = convs.back()(x);
  return r;
}

std::vector<Tensor> Discriminator::parameters() const {
  std::vector<Tensor> out;
  for (const auto& c : convs) c.collect(out);
  return out;
}

namespace {

// Row-orthogonal (or column-orthogonal when fan-in is smaller) kernel with
// QR sign fixing, scaled by the gain.
Tensor orthogonal_kernel(Index cout, Index cin, int k, std::mt19937_64& rng, double gain) {
  const Index rows = cout, cols = cin * k * k;
  const Index n = std::max(rows, cols), m = std::min(rows, cols);
  Eigen::MatrixXd a(n, m);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) a(i, j) = nd(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  for (Index j = 0; j < m; ++j)
    if (qr.matrixQR()(j, j) < 0) q.col(j) = -q.col(j);

  Tensor t = Tensor::zeros(Shape::nchw(cout, cin, k, k));
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      t.value()[r * cols + c] = gain * (rows >= cols ? q(r, c) : q(c, r));
  return t;
}

}  // namespace

FeaturePyramid FeaturePyramid::make(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index widths[5] = {16, 32, 64, 128, 128};
  const int strides[5] = {1, 2, 2, 2, 2};
  FeaturePyramid p;
  Index cin = 3;
  for (int i = 0; i < 5; ++i) {
    Conv2d c;
    // Gain sqrt(2) offsets the relu halving so deep levels keep signal.
    c.weight = orthogonal_kernel(widths[i], cin, 3, rng, std::sqrt(2.0));
    c.bias = Tensor::zeros(Shape::vec(widths[i]));
    c.stride = strides[i];
    c.padding = 1;
    p.convs.push_back(c);
    cin = widths[i];
  }
  return p;
}

std::vector<Tensor> FeaturePyramid::extract(const Tensor& image) const {
  std::vector<Tensor> out;
  Tensor x = image;
  for (const auto& c : convs) {
    x = relu(c(x));
    out.push_back(x);
  }
  return out;
}

std::vector<GradCheckReport> network_gradient_checks() {
  std::vector<GradCheckReport> reports;

  {
    std::mt19937_64 rng(777);
    ResBlockParams p = ResBlockParams::make(4, 3, 4, rng);
    Tensor f = Tensor::randn(Shape::nchw(2, 4, 6, 6), rng);
    Tensor prior = Tensor::randn(Shape::nchw(2, 3, 6, 6), rng);
    std::mt19937_64 mrng(5);
    Mask m = Mask::filled(6, 6, 1);
    std::bernoulli_distribution holes(0.4);
    for (auto& v : m.values) v = holes(mrng) ? 0 : 1;
    Tensor mt = mask_tensor(m);
    Tensor dm = map_tensor(hard_diversity_map(m, 2, 4.0));
    std::vector<Tensor> inputs{f, prior};
    p.collect(inputs);
    reports.push_back(check_gradients(
        "spdnorm_resblock",
        [&p, &mt, &dm](const std::vector<Tensor>& v) {
          return spdnorm_resblock(v[0], v[1], mt, dm, p);
        },
        inputs, 1e-5, 12));
  }

  {
    GeneratorConfig cfg;
    cfg.latent_dim = 8;
    cfg.base_h = cfg.base_w = 4;
    cfg.stage_channels = {12, 10, 8};
    cfg.n_schedule = {2, 2, 4};
    cfg.out_h = cfg.out_w = 16;
    cfg.norm_hidden = 6;
    std::mt19937_64 rng(778);
    Generator g = Generator::make(cfg, rng);
    Tensor z = Tensor::randn(Shape::nchw(2, 8, 1, 1), rng);
    Tensor prior = Tensor::randn(Shape::nchw(2, 3, 16, 16), rng, 0.5);
    std::vector<Mask> masks{generate_irregular_mask(16, 16, RatioBucket::R30_40, 3),
                            generate_irregular_mask(16, 16, RatioBucket::R20_30, 4)};
    std::vector<Tensor> inputs{z, prior};
    for (const Tensor& t : g.parameters()) inputs.push_back(t);
    reports.push_back(check_gradients(
        "generator",
        [&g, &masks](const std::vector<Tensor>& v) {
          return generate_batch(g, v[0], make_stage_context(v[1], masks, g.cfg));
        },
        inputs, 1e-5, 6));
  }

  {
    std::mt19937_64 rng(779);
    Discriminator d = Discriminator::make(4, rng);
    Tensor img = Tensor::randn(Shape::nchw(2, 3, 16, 16), rng, 0.5);
    std::vector<Tensor> inputs{img};
    for (const Tensor& t : d.parameters()) inputs.push_back(t);
    reports.push_back(check_gradients(
        "discriminator",
        [&d](const std::vector<Tensor>& v) { return d(v[0]).score; }, inputs, 1e-5, 12));
  }

  return reports;
}

}  // namespace pdgan
