#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pdgan/grad_check.hpp"
#include "pdgan/spdnorm.hpp"

namespace pdgan {

/// Static structure of the generator: resolutions double stage by stage from
/// the base feature map up to the output image.
struct GeneratorConfig {
  Index latent_dim = 128;
  Index base_h = 4;
  Index base_w = 4;
  std::vector<Index> stage_channels{96, 64, 48, 32, 16};  // deepest stage first
  std::vector<int> n_schedule{2, 2, 4, 4, 4};             // dilation counts, deepest first
  Index out_h = 64;
  Index out_w = 64;
  Index norm_hidden = 32;  // prior embedding width inside every SPDNorm layer
  double k = 4.0;
  double eps = 1e-5;

  Index stages() const { return static_cast<Index>(stage_channels.size()); }
  void validate() const;
};

/// One residual block: the main path runs soft SPDNorm, activation, conv,
/// hard SPDNorm, activation, conv; the skip path runs its own soft SPDNorm
/// into a 1x1 conv; the block returns main + skip.
struct ResBlockParams {
  SpdNormParams soft_main;  // over cin
  SpdNormParams hard_main;  // over the middle width
  SpdNormParams soft_skip;  // over cin
  Conv2d conv1;             // cin -> cmid, 3x3
  Conv2d conv2;             // cmid -> cout, 3x3
  Conv2d skip;              // cin -> cout, 1x1

  static ResBlockParams make(Index cin, Index cout, Index hidden, std::mt19937_64& rng);
  void collect(std::vector<Tensor>& out) const;
};

Tensor spdnorm_resblock(const Tensor& feature, const Tensor& prior, const Tensor& mask,
                        const Tensor& dmap, const ResBlockParams& p);
/// Derives the hard map from (mask, n, k) before running the block.
Tensor spdnorm_resblock(const Tensor& feature, const Tensor& prior, const Mask& mask, int n,
                        double k, const ResBlockParams& p);

/// Per-stage constants for one (prior, masks) pair: the prior average-pooled
/// to each stage resolution, per-sample mask tensors, and hard maps.
struct StageContext {
  std::vector<Tensor> priors;  // [B, 3, h_i, w_i]
  std::vector<Tensor> masks;   // [B, 1, h_i, w_i]
  std::vector<Tensor> dmaps;   // [B, 1, h_i, w_i]
};

StageContext make_stage_context(const Tensor& prior, const std::vector<Mask>& masks,
                                const GeneratorConfig& cfg);

struct Generator {
  GeneratorConfig cfg;
  DenseLayer project;  // latent -> deepest channels x base area
  std::vector<ResBlockParams> blocks;
  Conv2d to_rgb;  // shallowest channels -> 3

  static Generator make(const GeneratorConfig& cfg, std::mt19937_64& rng);
  std::vector<Tensor> parameters() const;
};

/// Batched core: z is [B, latent, 1, 1]; ctx must have been built for the
/// same batch of masks and a [B, 3, H, W] prior.
Tensor generate_batch(const Generator& g, const Tensor& z, const StageContext& ctx);
/// Same forward, additionally appending each block's input feature (what the
/// stage's first soft SPDNorm sees) to stage_inputs.
Tensor generate_batch(const Generator& g, const Tensor& z, const StageContext& ctx,
                      std::vector<Tensor>* stage_inputs);
/// Single-sample wrapper over a flat latent vector.
Tensor generate(const Generator& g, const Tensor& z, const Tensor& prior, const Mask& mask);

/// M ⊙ input + (1−M) ⊙ generated; background pixels stay bit-identical to
/// the input.
Tensor composite(const Tensor& generated, const Tensor& input, const Tensor& mask);

/// Patch discriminator: four stride-2 convs then a 1-channel score head; the
/// score map extent is the input extent / 16.
struct Discriminator {
  std::vector<Conv2d> convs;

  struct Result {
    Tensor score;                  // [B, 1, H/16, W/16]
    std::vector<Tensor> features;  // post-activation maps of the hidden layers
  };

  static Discriminator make(Index base_width, std::mt19937_64& rng);
  Result operator()(const Tensor& image) const;
  std::vector<Tensor> parameters() const;
};

/// Frozen random-feature stack standing in for a pretrained perceptual
/// network: five conv+relu stages (widths 16,32,64,128,128, the first at
/// stride 1, the rest at stride 2), orthogonally initialized from the seed,
/// all biases zero. Gradients flow to the probed image only.
struct FeaturePyramid {
  std::vector<Conv2d> convs;

  static FeaturePyramid make(std::uint64_t seed);
  std::vector<Tensor> extract(const Tensor& image) const;
};

std::vector<GradCheckReport> network_gradient_checks();

}  // namespace pdgan
