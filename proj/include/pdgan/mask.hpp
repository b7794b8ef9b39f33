#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdgan/tensor.hpp"

namespace pdgan {

/// Retry budget exhausted while searching for a valid random artifact.
struct GenerationError : Error {
  using Error::Error;
};

/// Binary grid over image pixels: 0 = hole, 1 = background.
struct Mask {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> values;  // row-major

  static Mask filled(Index h, Index w, std::uint8_t v);

  std::uint8_t at(Index y, Index x) const { return values[static_cast<std::size_t>(y * width + x)]; }
  std::uint8_t& at(Index y, Index x) { return values[static_cast<std::size_t>(y * width + x)]; }
  Index hole_count() const;
  double hole_fraction() const;
  bool operator==(const Mask& o) const = default;
};

/// Target hole-area fraction ranges, in percent of image area.
enum class RatioBucket { R10_20, R20_30, R30_40, R40_50 };

double bucket_lo(RatioBucket b);
double bucket_hi(RatioBucket b);
std::string bucket_name(RatioBucket b);
/// Accepts the canonical names "10-20", "20-30", "30-40", "40-50".
RatioBucket bucket_from_name(const std::string& s);

/// Brush-stroke random walk: strokes of random count, thickness and turns are
/// stamped until the hole fraction lands inside the bucket. Deterministic per
/// (height, width, bucket, seed); throws GenerationError when 64 attempts all
/// overshoot or undershoot the bucket.
Mask generate_irregular_mask(Index height, Index width, RatioBucket bucket, std::uint64_t seed);

/// One dilation of the background: output pixel is 1 iff any pixel of its 3x3
/// neighborhood is 1; neighbors outside the image contribute 0.
Mask mask_update(const Mask& m);

/// Decay base and per-stage dilation counts (deepest stage first) for the hard
/// diversity maps.
struct HardMapConfig {
  double k = 4.0;
  std::vector<int> n_schedule{2, 2, 4, 4, 4};
  void validate() const;
};

/// Spatial weights in [0,1]; background pixels hold exactly 1.
struct DiversityMap {
  Index height = 0;
  Index width = 0;
  std::vector<double> values;  // row-major

  double at(Index y, Index x) const { return values[static_cast<std::size_t>(y * width + x)]; }
};

/// Ring i of the dilation (pixels first reached by the i-th update) receives
/// k^-i; background receives 1; hole pixels not reached after n updates
/// receive the deepest ring value k^-n.
DiversityMap hard_diversity_map(const Mask& m, int n, double k);

/// Block reduction: an output pixel is background only when every covered
/// input pixel is background.
Mask downsample_mask(const Mask& m, int factor);

}  // namespace pdgan
