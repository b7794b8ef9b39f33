#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <random>

#include "pdgan/mask.hpp"

using namespace pdgan;

namespace {

Mask random_mask(Index h, Index w, double hole_prob, std::mt19937_64& rng) {
  Mask m = Mask::filled(h, w, 1);
  std::bernoulli_distribution d(hole_prob);
  for (auto& v : m.values) v = d(rng) ? 0 : 1;
  return m;
}

// Independent dilation: double loop scanning each 3x3 neighborhood.
Mask dilate_oracle(const Mask& m) {
  Mask out = Mask::filled(m.height, m.width, 0);
  for (Index y = 0; y < m.height; ++y)
    for (Index x = 0; x < m.width; ++x)
      for (Index yy = y - 1; yy <= y + 1; ++yy)
        for (Index xx = x - 1; xx <= x + 1; ++xx)
          if (yy >= 0 && yy < m.height && xx >= 0 && xx < m.width && m.at(yy, xx))
            out.at(y, x) = 1;
  return out;
}

// Multi-source BFS over the 8-connected grid from all background pixels;
// value is k^-min(distance, n), or k^-n where nothing is reachable.
DiversityMap bfs_oracle(const Mask& m, int n, double k) {
  const Index h = m.height, w = m.width;
  std::vector<int> dist(static_cast<std::size_t>(h * w), -1);
  std::deque<Index> queue;
  for (Index i = 0; i < h * w; ++i)
    if (m.values[static_cast<std::size_t>(i)]) {
      dist[static_cast<std::size_t>(i)] = 0;
      queue.push_back(i);
    }
  while (!queue.empty()) {
    const Index i = queue.front();
    queue.pop_front();
    const Index y = i / w, x = i % w;
    for (Index dy = -1; dy <= 1; ++dy)
      for (Index dx = -1; dx <= 1; ++dx) {
        const Index yy = y + dy, xx = x + dx;
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
        auto& d = dist[static_cast<std::size_t>(yy * w + xx)];
        if (d < 0) {
          d = dist[static_cast<std::size_t>(i)] + 1;
          queue.push_back(yy * w + xx);
        }
      }
  }
  DiversityMap out{h, w, std::vector<double>(static_cast<std::size_t>(h * w), 0.0)};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const int d = dist[i] < 0 ? n : std::min(dist[i], n);
    out.values[i] = std::pow(k, -d);
  }
  return out;
}

}  // namespace

TEST_CASE("irregular masks land in their bucket and are deterministic") {
  for (auto bucket : {RatioBucket::R10_20, RatioBucket::R40_50}) {
    Mask m = generate_irregular_mask(256, 256, bucket, 9);
    CHECK(m.hole_fraction() >= bucket_lo(bucket));
    CHECK(m.hole_fraction() <= bucket_hi(bucket));
    Mask again = generate_irregular_mask(256, 256, bucket, 9);
    CHECK(m == again);
  }
}

TEST_CASE("irregular mask hole fraction verified by zero count at 64x64") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    Mask m = generate_irregular_mask(64, 64, RatioBucket::R10_20, seed);
    Index zeros = 0;
    for (auto v : m.values) {
      CHECK((v == 0 || v == 1));
      if (v == 0) ++zeros;
    }
    const double frac = static_cast<double>(zeros) / (64.0 * 64.0);
    CHECK(frac >= 0.10);
    CHECK(frac <= 0.20);
  }
}

TEST_CASE("irregular masks work across sizes and buckets") {
  for (Index size : {16, 64, 128})
    for (auto bucket : {RatioBucket::R20_30, RatioBucket::R30_40}) {
      Mask m = generate_irregular_mask(size, size, bucket, 77);
      CHECK(m.hole_fraction() >= bucket_lo(bucket));
      CHECK(m.hole_fraction() <= bucket_hi(bucket));
    }
  CHECK_THROWS_AS(generate_irregular_mask(8, 64, RatioBucket::R10_20, 1), ArgumentError);
}

TEST_CASE("mask_update fixed point and single-pixel dilation") {
  Mask ones = Mask::filled(4, 4, 1);
  CHECK(mask_update(ones) == ones);

  Mask m = Mask::filled(5, 5, 0);
  m.at(2, 2) = 1;
  Mask up = mask_update(m);
  for (Index y = 0; y < 5; ++y)
    for (Index x = 0; x < 5; ++x) {
      const bool in_block = y >= 1 && y <= 3 && x >= 1 && x <= 3;
      CHECK(up.at(y, x) == (in_block ? 1 : 0));
    }
}

TEST_CASE("mask_update matches the neighborhood-scan oracle on random masks") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 100; ++i) {
    Mask m = random_mask(16, 16, 0.5, rng);
    CHECK(mask_update(m) == dilate_oracle(m));
  }
}

TEST_CASE("mask_update is monotone and terminates within max extent updates") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 20; ++i) {
    Mask m = random_mask(12, 9, 0.97, rng);
    if (m.hole_count() == m.height * m.width) m.at(0, 0) = 1;  // keep one background pixel
    Mask cur = m;
    for (int step = 0; step < 12; ++step) {
      Mask next = mask_update(cur);
      for (std::size_t j = 0; j < next.values.size(); ++j) CHECK(next.values[j] >= cur.values[j]);
      cur = next;
    }
    CHECK(cur.hole_count() == 0);
  }
}

TEST_CASE("hard map ring values follow inverse powers of k") {
  // 9x9 all hole except the outermost border: rings march inward.
  Mask m = Mask::filled(9, 9, 0);
  for (Index i = 0; i < 9; ++i) m.at(0, i) = m.at(8, i) = m.at(i, 0) = m.at(i, 8) = 1;
  DiversityMap d = hard_diversity_map(m, 4, 4.0);
  CHECK(d.at(0, 0) == 1.0);
  CHECK(d.at(1, 4) == 0.25);
  CHECK(d.at(2, 4) == 0.0625);
  CHECK(d.at(3, 4) == 0.015625);
  CHECK(d.at(4, 4) == 0.00390625);
}

TEST_CASE("hard map of an all-background mask is all ones") {
  DiversityMap d = hard_diversity_map(Mask::filled(6, 7, 1), 4, 4.0);
  for (double v : d.values) CHECK(v == 1.0);
}

TEST_CASE("hard map equals the breadth-first-search oracle bitwise") {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 100; ++i) {
    Mask m = random_mask(16, 16, 0.6, rng);
    DiversityMap got = hard_diversity_map(m, 4, 4.0);
    DiversityMap want = bfs_oracle(m, 4, 4.0);
    for (std::size_t j = 0; j < got.values.size(); ++j) CHECK(got.values[j] == want.values[j]);
  }
}

TEST_CASE("hard map values come from the discrete ring set") {
  std::mt19937_64 rng(45);
  for (int n : {1, 2, 4}) {
    Mask m = random_mask(20, 20, 0.5, rng);
    DiversityMap d = hard_diversity_map(m, n, 4.0);
    for (std::size_t j = 0; j < d.values.size(); ++j) {
      bool in_set = d.values[j] == 1.0;
      double v = 1.0;
      for (int i = 1; i <= n && !in_set; ++i) {
        v /= 4.0;
        in_set = d.values[j] == v;
      }
      CHECK(in_set);
      if (m.values[j]) CHECK(d.values[j] == 1.0);
    }
  }
}

TEST_CASE("hard map commutes with horizontal and vertical flips") {
  std::mt19937_64 rng(46);
  Mask m = random_mask(14, 11, 0.5, rng);
  Mask fh = m, fv = m;
  for (Index y = 0; y < m.height; ++y)
    for (Index x = 0; x < m.width; ++x) {
      fh.at(y, x) = m.at(y, m.width - 1 - x);
      fv.at(y, x) = m.at(m.height - 1 - y, x);
    }
  DiversityMap d = hard_diversity_map(m, 3, 4.0);
  DiversityMap dh = hard_diversity_map(fh, 3, 4.0);
  DiversityMap dv = hard_diversity_map(fv, 3, 4.0);
  for (Index y = 0; y < m.height; ++y)
    for (Index x = 0; x < m.width; ++x) {
      CHECK(dh.at(y, x) == d.at(y, m.width - 1 - x));
      CHECK(dv.at(y, x) == d.at(m.height - 1 - y, x));
    }
}

TEST_CASE("downsample_mask applies the all-of-block rule") {
  Mask ones = Mask::filled(8, 8, 1);
  Mask half = downsample_mask(ones, 2);
  CHECK(half.height == 4);
  CHECK(half.hole_count() == 0);

  Mask one_hole = Mask::filled(4, 4, 1);
  one_hole.at(1, 1) = 0;
  Mask down = downsample_mask(one_hole, 2);
  CHECK(down.at(0, 0) == 0);
  CHECK(down.at(0, 1) == 1);
  CHECK(down.at(1, 0) == 1);
  CHECK(down.at(1, 1) == 1);

  CHECK_THROWS_AS(downsample_mask(one_hole, 3), ArgumentError);
}

TEST_CASE("downsample_mask matches the block-scan oracle") {
  std::mt19937_64 rng(47);
  for (int rep = 0; rep < 20; ++rep) {
    Mask m = random_mask(32, 32, 0.3, rng);
    Mask got = downsample_mask(m, 4);
    for (Index y = 0; y < 8; ++y)
      for (Index x = 0; x < 8; ++x) {
        std::uint8_t all = 1;
        for (Index i = 0; i < 4; ++i)
          for (Index j = 0; j < 4; ++j) all &= m.at(y * 4 + i, x * 4 + j);
        CHECK(got.at(y, x) == all);
      }
  }
}

TEST_CASE("hard map config validation") {
  HardMapConfig good;
  good.validate();
  HardMapConfig bad_k;
  bad_k.k = 1.0;
  CHECK_THROWS_AS(bad_k.validate(), ArgumentError);
  HardMapConfig bad_n;
  bad_n.n_schedule = {2, 0, 4};
  CHECK_THROWS_AS(bad_n.validate(), ArgumentError);
}
