#pragma once

#include <random>
#include <utility>
#include <vector>

#include "pdgan/grad_check.hpp"
#include "pdgan/layers.hpp"
#include "pdgan/mask.hpp"
#include "pdgan/ops.hpp"

namespace pdgan {

/// Parameters of one spatially probabilistic diversity normalization layer.
/// The prior runs through a shared embedding conv whose output feeds the two
/// convs producing the per-element scale and shift; the soft variant also owns
/// an embedding for the gate input and the gate conv itself.
struct SpdNormParams {
  Conv2d shared;      // prior -> hidden, followed by relu
  Conv2d gamma_conv;  // hidden -> C, bias starts at 1 so modulation opens near identity
  Conv2d beta_conv;   // hidden -> C
  Conv2d soft_embed;  // prior -> hidden, followed by relu
  Conv2d soft_gate;   // [hidden + C] -> 1 pre-sigmoid gate
  double eps = 1e-5;

  static SpdNormParams make(Index feature_channels, Index hidden, std::mt19937_64& rng);
  void collect(std::vector<Tensor>& out) const;
};

/// Per-(sample, channel) spatial mean and population standard deviation,
/// flattened sample-major (index = b * C + c).
struct NormStats {
  Array mu;
  Array sigma;
};

NormStats instance_stats(const Tensor& feature);

/// Scale and shift produced from the prior: shared conv + relu, then two
/// parallel convs. Both outputs match the feature layout [B, C, H, W].
std::pair<Tensor, Tensor> prior_affine(const Tensor& prior, const SpdNormParams& p);

/// dmap ⊙ (γ(P) · (F − μ)/√(σ² + ε) + β(P)) with the map broadcast across
/// channels; dmap batch extent may be 1 (shared) or B.
Tensor hard_spdnorm(const Tensor& feature, const Tensor& prior, const Tensor& dmap,
                    const SpdNormParams& p);

/// sigmoid(conv([F^p, F^in])) · (1 − M) + M; background pixels are exactly 1.
Tensor soft_diversity_map(const Tensor& feature, const Tensor& prior, const Tensor& mask,
                          const SpdNormParams& p);

/// Same modulation as hard_spdnorm gated by the learned soft map.
Tensor soft_spdnorm(const Tensor& feature, const Tensor& prior, const Tensor& mask,
                    const SpdNormParams& p);

/// [1, 1, H, W] tensor views of mask-module grids.
Tensor map_tensor(const DiversityMap& d);
Tensor mask_tensor(const Mask& m);
/// [B, 1, H, W] per-sample stacks.
Tensor map_tensor(const std::vector<DiversityMap>& ds);
Tensor mask_tensor(const std::vector<Mask>& ms);

std::vector<GradCheckReport> spdnorm_gradient_checks();

}  // namespace pdgan
