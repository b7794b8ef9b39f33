#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pdgan/metrics.hpp"

using namespace pdgan;

namespace {

Tensor unit_image(Index h, Index w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Tensor t = Tensor::zeros(Shape::nchw(1, 3, h, w));
  for (Index i = 0; i < t.numel(); ++i) t.value()[i] = ud(rng);
  return t;
}

Mask block_hole_mask(Index h, Index w, Index y0, Index y1, Index x0, Index x1) {
  Mask m = Mask::filled(h, w, 1);
  for (Index y = y0; y < y1; ++y)
    for (Index x = x0; x < x1; ++x) m.values[static_cast<std::size_t>(y * w + x)] = 0;
  return m;
}

double ssim_oracle(const Tensor& a, const Tensor& b) {
  const Index h = a.shape().height(), w = a.shape().width(), c = a.shape().channels();
  std::vector<double> ga(static_cast<std::size_t>(h * w)), gb(ga.size());
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double sa = 0, sb = 0;
      for (Index ch = 0; ch < c; ++ch) {
        sa += a.at(0, ch, y, x);
        sb += b.at(0, ch, y, x);
      }
      ga[static_cast<std::size_t>(y * w + x)] = sa / static_cast<double>(c);
      gb[static_cast<std::size_t>(y * w + x)] = sb / static_cast<double>(c);
    }
  double total = 0;
  Index n = 0;
  for (Index y0 = 0; y0 + 8 <= h; ++y0)
    for (Index x0 = 0; x0 + 8 <= w; ++x0) {
      double ma = 0, mb = 0, va = 0, vb = 0, cov = 0;
      for (Index dy = 0; dy < 8; ++dy)
        for (Index dx = 0; dx < 8; ++dx) {
          ma += ga[static_cast<std::size_t>((y0 + dy) * w + x0 + dx)];
          mb += gb[static_cast<std::size_t>((y0 + dy) * w + x0 + dx)];
        }
      ma /= 64.0;
      mb /= 64.0;
      for (Index dy = 0; dy < 8; ++dy)
        for (Index dx = 0; dx < 8; ++dx) {
          const double da = ga[static_cast<std::size_t>((y0 + dy) * w + x0 + dx)] - ma;
          const double db = gb[static_cast<std::size_t>((y0 + dy) * w + x0 + dx)] - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va /= 64.0;
      vb /= 64.0;
      cov /= 64.0;
      total += ((2 * ma * mb + 1e-4) * (2 * cov + 9e-4)) /
               ((ma * ma + mb * mb + 1e-4) * (va + vb + 9e-4));
      ++n;
    }
  return total / static_cast<double>(n);
}

double diversity_oracle(const std::vector<Tensor>& samples, const Mask& m,
                        const FeaturePyramid& p, bool masked) {
  auto gates = diversity_gates(m, p, DiversityGate::Hole);
  double total = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      auto fi = p.extract(samples[i]);
      auto fj = p.extract(samples[j]);
      double d = 0;
      for (std::size_t l = 0; l < fi.size(); ++l) {
        const Shape& s = fi[l].shape();
        Index active = 0;
        double level = 0;
        for (Index y = 0; y < s.height(); ++y)
          for (Index x = 0; x < s.width(); ++x) {
            if (masked && !gates[l].at(y, x)) continue;
            ++active;
            double ni = 0, nj = 0;
            for (Index c = 0; c < s.channels(); ++c) {
              ni += fi[l].at(0, c, y, x) * fi[l].at(0, c, y, x);
              nj += fj[l].at(0, c, y, x) * fj[l].at(0, c, y, x);
            }
            ni = std::sqrt(ni) + 1e-10;
            nj = std::sqrt(nj) + 1e-10;
            for (Index c = 0; c < s.channels(); ++c) {
              const double diff = fi[l].at(0, c, y, x) / ni - fj[l].at(0, c, y, x) / nj;
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

}  // namespace

TEST_CASE("psnr cap, floor and oracle") {
  std::mt19937_64 rng(51);
  Tensor a = unit_image(16, 16, rng);
  CHECK(psnr(a, Tensor(a.shape(), a.value())) == 100.0);

  Tensor zeros = Tensor::zeros(Shape::nchw(1, 3, 16, 16));
  Tensor ones = Tensor::full(Shape::nchw(1, 3, 16, 16), 1.0);
  CHECK(psnr(zeros, ones) == 0.0);

  Tensor b = unit_image(16, 16, rng);
  double mse = 0;
  for (Index i = 0; i < a.numel(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));
  CHECK(psnr(a, b) == psnr(b, a));

  Tensor small = unit_image(8, 8, rng);
  CHECK_THROWS_AS(psnr(a, small), DimensionError);
}

TEST_CASE("ssim identity, ordering and oracle") {
  std::mt19937_64 rng(52);
  Tensor a = unit_image(16, 16, rng);
  CHECK(ssim(a, Tensor(a.shape(), a.value())) == 1.0);

  Tensor neg(a.shape(), 1.0 - a.value());
  CHECK(ssim(a, neg) < 1.0);

  Tensor b = unit_image(16, 16, rng);
  CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-9));
  CHECK(ssim(a, b) == ssim(b, a));

  Tensor tiny = unit_image(7, 9, rng);
  CHECK_THROWS_AS(ssim(tiny, Tensor(tiny.shape(), tiny.value())), ArgumentError);
  CHECK_THROWS_AS(ssim(a, tiny), DimensionError);
}

TEST_CASE("diversity of identical samples is zero") {
  FeaturePyramid p = FeaturePyramid::make(17);
  std::mt19937_64 rng(53);
  Tensor a = unit_image(16, 16, rng);
  Mask m = block_hole_mask(16, 16, 4, 12, 4, 12);
  std::vector<Tensor> same{a, Tensor(a.shape(), a.value()), Tensor(a.shape(), a.value())};
  CHECK(diversity_score(same, m, p, false) == 0.0);
  CHECK(diversity_score(same, m, p, true) == 0.0);
}

TEST_CASE("diversity argument errors") {
  FeaturePyramid p = FeaturePyramid::make(17);
  std::mt19937_64 rng(54);
  Tensor a = unit_image(16, 16, rng);
  Mask m = block_hole_mask(16, 16, 4, 12, 4, 12);
  CHECK_THROWS_AS(diversity_score({a}, m, p, false), ArgumentError);
  CHECK_THROWS_AS(diversity_score({a, unit_image(8, 8, rng)}, m, p, false), DimensionError);
  Tensor batch = Tensor::zeros(Shape::nchw(2, 3, 16, 16));
  CHECK_THROWS_AS(diversity_score({batch, batch}, m, p, false), ArgumentError);
  Mask wrong = block_hole_mask(8, 8, 2, 6, 2, 6);
  CHECK_THROWS_AS(diversity_score({a, a}, wrong, p, true), DimensionError);
}

TEST_CASE("masked diversity ignores background-only differences") {
  FeaturePyramid p = FeaturePyramid::make(17);
  std::mt19937_64 rng(55);
  Tensor a = unit_image(32, 32, rng);
  Mask m = block_hole_mask(32, 32, 8, 24, 8, 24);
  Tensor b(a.shape(), a.value());
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < 32; ++y)
      for (Index x = 0; x < 32; ++x)
        if (m.at(y, x)) b.value()[b.offset(0, c, y, x)] += 0.2 + 0.002 * static_cast<double>(y);
  CHECK(diversity_score({a, b}, m, p, true) == 0.0);
  CHECK(diversity_score({a, b}, m, p, false) > 0.0);
}

TEST_CASE("diversity matches the pairwise oracle") {
  FeaturePyramid p = FeaturePyramid::make(17);
  std::mt19937_64 rng(56);
  Mask m = generate_irregular_mask(16, 16, RatioBucket::R30_40, 57);
  std::vector<Tensor> samples{unit_image(16, 16, rng), unit_image(16, 16, rng),
                              unit_image(16, 16, rng)};
  for (bool masked : {false, true}) {
    const double got = diversity_score(samples, m, p, masked);
    const double want = diversity_oracle(samples, m, p, masked);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("diversity is order invariant") {
  FeaturePyramid p = FeaturePyramid::make(17);
  std::mt19937_64 rng(58);
  Mask m = block_hole_mask(16, 16, 4, 12, 4, 12);
  std::vector<Tensor> samples{unit_image(16, 16, rng), unit_image(16, 16, rng),
                              unit_image(16, 16, rng)};
  std::vector<Tensor> shuffled{samples[2], samples[0], samples[1]};
  const double a = diversity_score(samples, m, p, true);
  const double b = diversity_score(shuffled, m, p, true);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("masked diversity equals the score of aligned hole crops") {
  FeaturePyramid p = FeaturePyramid::make(17);
  std::mt19937_64 rng(59);
  // Hole rows/cols 24..39 inside 64x64. The crop at offset (16,16) keeps
  // every pyramid stride aligned, and its 8-pixel background margin makes
  // border receptive fields impure on both sides alike.
  Mask full_mask = block_hole_mask(64, 64, 24, 40, 24, 40);
  Tensor base = unit_image(64, 64, rng);
  std::vector<Tensor> samples, crops;
  Mask crop_mask = block_hole_mask(32, 32, 8, 24, 8, 24);
  for (int s = 0; s < 3; ++s) {
    Tensor img(base.shape(), base.value());
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (Index c = 0; c < 3; ++c)
      for (Index y = 24; y < 40; ++y)
        for (Index x = 24; x < 40; ++x) img.value()[img.offset(0, c, y, x)] = ud(rng);
    Tensor crop = Tensor::zeros(Shape::nchw(1, 3, 32, 32));
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < 32; ++y)
        for (Index x = 0; x < 32; ++x)
          crop.value()[crop.offset(0, c, y, x)] = img.at(0, c, y + 16, x + 16);
    samples.push_back(img);
    crops.push_back(crop);
  }
  const double full = diversity_score(samples, full_mask, p, true);
  const double cropped = diversity_score(crops, crop_mask, p, true);
  CHECK(full == doctest::Approx(cropped).epsilon(1e-6));
  CHECK(full > 0.0);
}

TEST_CASE("rank samples") {
  CHECK(rank_samples({0.1, 0.9, 0.5}, 2) == std::vector<std::size_t>{1, 2});
  CHECK(rank_samples({0.1, 0.9, 0.5}, 3) == std::vector<std::size_t>{1, 2, 0});
  CHECK(rank_samples({0.1, 0.9, 0.5}, 9) == std::vector<std::size_t>{1, 2, 0});
  CHECK(rank_samples({0.5, 0.5, 0.7, 0.5}, 3) == std::vector<std::size_t>{2, 0, 1});
  CHECK(rank_samples({}, 4).empty());

  std::mt19937_64 rng(60);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<double> scores(50);
  for (auto& s : scores) s = ud(rng);
  std::vector<std::size_t> oracle(scores.size());
  std::iota(oracle.begin(), oracle.end(), std::size_t{0});
  std::stable_sort(oracle.begin(), oracle.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  oracle.resize(10);
  CHECK(rank_samples(scores, 10) == oracle);
}
