#include "pdgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdgan {

double psnr(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("psnr pair differs in shape: " + a.shape().str() + " vs " +
                         b.shape().str());
  const double mse = (a.value() - b.value()).square().mean();
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("ssim pair differs in shape: " + a.shape().str() + " vs " +
                         b.shape().str());
  const Index bsz = a.shape().b(), c = a.shape().channels();
  const Index h = a.shape().height(), w = a.shape().width();
  constexpr Index kWin = 8;
  if (h < kWin || w < kWin)
    throw ArgumentError("ssim needs at least " + std::to_string(kWin) + "x" +
                        std::to_string(kWin) + " images");
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;

  double total = 0.0;
  Index windows = 0;
  std::vector<double> ga(static_cast<std::size_t>(h * w)), gb(ga.size());
  for (Index s = 0; s < bsz; ++s) {
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        double sa = 0, sb = 0;
        for (Index ch = 0; ch < c; ++ch) {
          sa += a.value()[a.offset(s, ch, y, x)];
          sb += b.value()[b.offset(s, ch, y, x)];
        }
        ga[static_cast<std::size_t>(y * w + x)] = sa / static_cast<double>(c);
        gb[static_cast<std::size_t>(y * w + x)] = sb / static_cast<double>(c);
      }
    const double inv = 1.0 / static_cast<double>(kWin * kWin);
    for (Index y0 = 0; y0 + kWin <= h; ++y0)
      for (Index x0 = 0; x0 + kWin <= w; ++x0) {
        double ma = 0, mb = 0;
        for (Index dy = 0; dy < kWin; ++dy)
          for (Index dx = 0; dx < kWin; ++dx) {
            ma += ga[static_cast<std::size_t>((y0 + dy) * w + x0 + dx)];
            mb += gb[static_cast<std::size_t>((y0 + dy) * w + x0 + dx)];
          }
        ma *= inv;
        mb *= inv;
        double va = 0, vb = 0, cov = 0;
        for (Index dy = 0; dy < kWin; ++dy)
          for (Index dx = 0; dx < kWin; ++dx) {
            const double da = ga[static_cast<std::size_t>((y0 + dy) * w + x0 + dx)] - ma;
            const double db = gb[static_cast<std::size_t>((y0 + dy) * w + x0 + dx)] - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
          }
        va *= inv;
        vb *= inv;
        cov *= inv;
        total += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                 ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
        ++windows;
      }
  }
  return total / static_cast<double>(windows);
}

namespace {

// Channel-unit-normalized activations per spatial position, flattened like
// the source tensor.
std::vector<Array> unit_features(const std::vector<Tensor>& feats) {
  std::vector<Array> out;
  out.reserve(feats.size());
  for (const Tensor& f : feats) {
    const Index c = f.shape().channels(), h = f.shape().height(), w = f.shape().width();
    Array u(f.numel());
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        double sq = 0;
        for (Index ch = 0; ch < c; ++ch) {
          const double v = f.value()[f.offset(0, ch, y, x)];
          sq += v * v;
        }
        const double inv = 1.0 / (std::sqrt(sq) + 1e-10);
        for (Index ch = 0; ch < c; ++ch) {
          const Index i = f.offset(0, ch, y, x);
          u[i] = f.value()[i] * inv;
        }
      }
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace

double diversity_score(const std::vector<Tensor>& samples, const Mask& m,
                       const FeaturePyramid& pyramid, bool masked) {
  if (samples.size() < 2) throw ArgumentError("diversity needs at least two samples");
  const Shape s0 = samples[0].shape();
  if (s0.b() != 1) throw ArgumentError("diversity samples carry one image each");
  for (const Tensor& s : samples)
    if (s.shape() != s0)
      throw DimensionError("diversity samples differ in shape: " + s.shape().str() + " vs " +
                           s0.str());
  if (s0.height() != m.height || s0.width() != m.width)
    throw DimensionError("mask extent does not match samples");

  std::vector<Mask> gates;
  if (masked) gates = diversity_gates(m, pyramid, DiversityGate::Hole);

  std::vector<std::vector<Tensor>> feats;
  std::vector<std::vector<Array>> unit;
  feats.reserve(samples.size());
  unit.reserve(samples.size());
  for (const Tensor& s : samples) {
    feats.push_back(pyramid.extract(s));
    unit.push_back(unit_features(feats.back()));
  }

  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      double d = 0.0;
      for (std::size_t l = 0; l < feats[i].size(); ++l) {
        const Shape& fs = feats[i][l].shape();
        const Index c = fs.channels(), h = fs.height(), w = fs.width();
        Index active = 0;
        double level = 0.0;
        for (Index y = 0; y < h; ++y)
          for (Index x = 0; x < w; ++x) {
            if (masked && !gates[l].at(y, x)) continue;
            ++active;
            for (Index ch = 0; ch < c; ++ch) {
              const Index idx = feats[i][l].offset(0, ch, y, x);
              const double diff = unit[i][l][idx] - unit[j][l][idx];
              level += diff * diff;
            }
          }
        if (active > 0) d += level / static_cast<double>(active);
      }
      total += d;
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

std::vector<std::size_t> rank_samples(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&scores](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

}  // namespace pdgan
