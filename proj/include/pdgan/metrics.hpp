#pragma once

#include <cstddef>
#include <vector>

#include "pdgan/losses.hpp"
#include "pdgan/mask.hpp"
#include "pdgan/network.hpp"

namespace pdgan {

struct QualityReport {
  double psnr = 0.0;
  double ssim = 0.0;
};

struct DiversityReport {
  double full_image = 0.0;
  double masked_region = 0.0;
  int pair_count = 0;
};

/// 10*log10(1/mse) over unit-range images, capped at 100 dB.
double psnr(const Tensor& a, const Tensor& b);

/// Mean local structural similarity over 8x8 sliding windows of the
/// channel-mean grayscale; C1=(0.01)^2, C2=(0.03)^2 on unit range.
double ssim(const Tensor& a, const Tensor& b);

/// Mean over unordered sample pairs of a perceptual distance: per pyramid
/// level, channel-unit-normalized activations (norm + 1e-10), squared
/// differences averaged over positions, levels summed. masked restricts the
/// averaging to positions whose receptive field lies inside the hole.
double diversity_score(const std::vector<Tensor>& samples, const Mask& m,
                       const FeaturePyramid& pyramid, bool masked);

/// Indices of the k highest scores, descending, ties broken by lower index;
/// k beyond the count returns every index.
std::vector<std::size_t> rank_samples(const std::vector<double>& scores, std::size_t k);

}  // namespace pdgan
