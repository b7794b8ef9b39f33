#include "pdgan/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace pdgan {

Mask Mask::filled(Index h, Index w, std::uint8_t v) {
  if (h < 1 || w < 1) throw ArgumentError("mask extents must be positive");
  return Mask{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h * w), v)};
}

Index Mask::hole_count() const {
  return static_cast<Index>(std::count(values.begin(), values.end(), std::uint8_t{0}));
}

double Mask::hole_fraction() const {
  return static_cast<double>(hole_count()) / static_cast<double>(height * width);
}

double bucket_lo(RatioBucket b) {
  switch (b) {
    case RatioBucket::R10_20: return 0.10;
    case RatioBucket::R20_30: return 0.20;
    case RatioBucket::R30_40: return 0.30;
    case RatioBucket::R40_50: return 0.40;
  }
  throw ArgumentError("unknown ratio bucket");
}

double bucket_hi(RatioBucket b) { return bucket_lo(b) + 0.10; }

std::string bucket_name(RatioBucket b) {
  switch (b) {
    case RatioBucket::R10_20: return "10-20";
    case RatioBucket::R20_30: return "20-30";
    case RatioBucket::R30_40: return "30-40";
    case RatioBucket::R40_50: return "40-50";
  }
  throw ArgumentError("unknown ratio bucket");
}

RatioBucket bucket_from_name(const std::string& s) {
  if (s == "10-20") return RatioBucket::R10_20;
  if (s == "20-30") return RatioBucket::R20_30;
  if (s == "30-40") return RatioBucket::R30_40;
  if (s == "40-50") return RatioBucket::R40_50;
  throw ArgumentError("unknown ratio bucket '" + s + "' (want 10-20, 20-30, 30-40 or 40-50)");
}

namespace {

// Stamps a disc of holes; returns the updated hole count.
Index stamp_disc(Mask& m, double cx, double cy, double radius, Index holes) {
  const double r2 = radius * radius;
  const Index y0 = std::max<Index>(0, static_cast<Index>(std::floor(cy - radius)));
  const Index y1 = std::min<Index>(m.height - 1, static_cast<Index>(std::ceil(cy + radius)));
  const Index x0 = std::max<Index>(0, static_cast<Index>(std::floor(cx - radius)));
  const Index x1 = std::min<Index>(m.width - 1, static_cast<Index>(std::ceil(cx + radius)));
  for (Index y = y0; y <= y1; ++y)
    for (Index x = x0; x <= x1; ++x) {
      const double dy = static_cast<double>(y) - cy;
      const double dx = static_cast<double>(x) - cx;
      if (dy * dy + dx * dx > r2) continue;
      auto& p = m.at(y, x);
      if (p) {
        p = 0;
        ++holes;
      }
    }
  return holes;
}

}  // namespace

Mask generate_irregular_mask(Index height, Index width, RatioBucket bucket, std::uint64_t seed) {
  if (height < 16 || width < 16)
    throw ArgumentError("irregular masks need extents >= 16, got " + std::to_string(height) + "x" +
                        std::to_string(width));
  const Index total = height * width;
  // Smallest/largest hole counts whose fraction lies inside the bucket.
  const Index lo = static_cast<Index>(std::ceil(bucket_lo(bucket) * static_cast<double>(total)));
  const Index hi = static_cast<Index>(std::floor(bucket_hi(bucket) * static_cast<double>(total)));
  const double sc = static_cast<double>(std::min(height, width)) / 256.0;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> stroke_count_d(1, 8);
  std::uniform_int_distribution<int> thickness_d(4, 24);
  std::uniform_int_distribution<int> segment_d(1, 10);
  std::uniform_real_distribution<double> ud(0.0, 1.0);

  constexpr int kAttempts = 64;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Mask m = Mask::filled(height, width, 1);
    Index holes = 0;
    const int planned = stroke_count_d(rng);
    bool overshoot = false;
    // Strokes beyond the planned count keep coming while the hole area is
    // still short of the bucket; a stamp past its top fails the attempt, a
    // stamp into it returns immediately.
    for (int stroke = 0; stroke < planned + kAttempts && !overshoot; ++stroke) {
      double y = ud(rng) * static_cast<double>(height - 1);
      double x = ud(rng) * static_cast<double>(width - 1);
      double angle = ud(rng) * 2.0 * std::numbers::pi;
      const double radius =
          std::max(0.6, 0.5 * static_cast<double>(thickness_d(rng)) * sc);
      const int segments = segment_d(rng);
      for (int seg = 0; seg < segments && !overshoot; ++seg) {
        const double len =
            (0.125 + 0.2 * ud(rng)) * static_cast<double>(std::min(height, width));
        const double step = std::max(1.0, radius * 0.5);
        const int steps = std::max(1, static_cast<int>(std::ceil(len / step)));
        for (int i = 0; i < steps; ++i) {
          y = std::clamp(y + std::sin(angle) * step, 0.0, static_cast<double>(height - 1));
          x = std::clamp(x + std::cos(angle) * step, 0.0, static_cast<double>(width - 1));
          holes = stamp_disc(m, x, y, radius, holes);
          if (holes > hi) {
            overshoot = true;
            break;
          }
          if (holes >= lo) return m;
        }
        angle += (ud(rng) - 0.5) * std::numbers::pi;
      }
    }
  }
  throw GenerationError("no mask with hole fraction in bucket " + bucket_name(bucket) + " for " +
                        std::to_string(height) + "x" + std::to_string(width) + " after " +
                        std::to_string(kAttempts) + " attempts");
}

Mask mask_update(const Mask& m) {
  Mask out = Mask::filled(m.height, m.width, 0);
  for (Index y = 0; y < m.height; ++y)
    for (Index x = 0; x < m.width; ++x) {
      std::uint8_t any = 0;
      for (Index dy = -1; dy <= 1 && !any; ++dy)
        for (Index dx = -1; dx <= 1; ++dx) {
          const Index yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= m.height || xx < 0 || xx >= m.width) continue;
          if (m.at(yy, xx)) {
            any = 1;
            break;
          }
        }
      out.at(y, x) = any;
    }
  return out;
}

void HardMapConfig::validate() const {
  if (!(k > 1.0)) throw ArgumentError("diversity decay base k must exceed 1");
  if (n_schedule.empty()) throw ArgumentError("n-schedule must not be empty");
  for (int n : n_schedule)
    if (n < 1) throw ArgumentError("every dilation count must be >= 1");
}

DiversityMap hard_diversity_map(const Mask& m, int n, double k) {
  if (n < 1) throw ArgumentError("dilation count must be >= 1");
  if (!(k > 1.0)) throw ArgumentError("diversity decay base k must exceed 1");
  DiversityMap d{m.height, m.width,
                 std::vector<double>(static_cast<std::size_t>(m.height * m.width), 0.0)};
  for (std::size_t i = 0; i < d.values.size(); ++i)
    if (m.values[i]) d.values[i] = 1.0;
  Mask prev = m;
  double ring_value = 1.0;
  for (int i = 1; i <= n; ++i) {
    ring_value /= k;  // exactly k^-i for integer powers of two bases
    Mask cur = mask_update(prev);
    for (std::size_t j = 0; j < d.values.size(); ++j)
      if (cur.values[j] && !prev.values[j]) d.values[j] = ring_value;
    prev = std::move(cur);
  }
  // Hole pixels deeper than the n-th ring keep the deepest ring value.
  for (std::size_t j = 0; j < d.values.size(); ++j)
    if (!prev.values[j]) d.values[j] = ring_value;
  return d;
}

Mask downsample_mask(const Mask& m, int factor) {
  if (factor < 1) throw ArgumentError("downsample factor must be >= 1");
  if (m.height % factor != 0 || m.width % factor != 0)
    throw ArgumentError("downsample factor " + std::to_string(factor) +
                        " must divide mask extents " + std::to_string(m.height) + "x" +
                        std::to_string(m.width));
  const Index f = factor, ho = m.height / f, wo = m.width / f;
  Mask out = Mask::filled(ho, wo, 1);
  for (Index y = 0; y < ho; ++y)
    for (Index x = 0; x < wo; ++x) {
      std::uint8_t all = 1;
      for (Index i = 0; i < f && all; ++i)
        for (Index j = 0; j < f; ++j)
          if (!m.at(y * f + i, x * f + j)) {
            all = 0;
            break;
          }
      out.at(y, x) = all;
    }
  return out;
}

}  // namespace pdgan
