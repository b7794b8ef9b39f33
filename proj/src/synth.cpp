#include "pdgan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace pdgan {
namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

struct Rgb {
  double c[3];
};

Rgb random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  const double r = ud(rng), g = ud(rng), b = ud(rng);
  return {{r, g, b}};
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

void render_gradient_sky(Tensor& img, Index h, Index w, std::mt19937_64& prng,
                         std::mt19937_64& grng) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Rgb top = random_color(prng), bot = random_color(prng);
  // A clear top-to-bottom sweep in channel 0 keeps every column monotone.
  if (std::abs(top.c[0] - bot.c[0]) < 0.6) bot.c[0] = top.c[0] >= 0.0 ? top.c[0] - 0.8 : top.c[0] + 0.8;
  const double drift_phase = ud(grng), drift_amp = 0.05 + 0.05 * ud(grng);
  const double band_center = 0.3 + 0.4 * ud(grng), band_width = 0.05 + 0.1 * ud(grng);
  const double band_amp = 0.2 + 0.3 * ud(grng);
  const double ripple_fx = 1.0 + 3.0 * ud(grng), ripple_phase = ud(grng);
  for (Index x = 0; x < w; ++x) {
    const double u = static_cast<double>(x) / static_cast<double>(w);
    const double col_off = drift_amp * std::sin(kTau * (u + drift_phase));
    for (Index y = 0; y < h; ++y) {
      const double t = static_cast<double>(y) / static_cast<double>(h - 1);
      const double band = band_amp * std::exp(-(t - band_center) * (t - band_center) /
                                              (band_width * band_width));
      const double ripple = 0.05 * std::sin(kTau * (ripple_fx * u + ripple_phase) + 3.0 * t);
      img.value()[img.offset(0, 0, y, x)] = clamp_unit(lerp(top.c[0], bot.c[0], t) + col_off);
      img.value()[img.offset(0, 1, y, x)] = clamp_unit(lerp(top.c[1], bot.c[1], t) + band + ripple);
      img.value()[img.offset(0, 2, y, x)] =
          clamp_unit(lerp(top.c[2], bot.c[2], t) + band * 0.5 - ripple);
    }
  }
}

void render_stripes(Tensor& img, Index h, Index w, std::mt19937_64& prng, std::mt19937_64& grng) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const Rgb a = random_color(prng), b = random_color(prng);
  const double theta = std::numbers::pi * ud(grng);
  const double freq = 2.0 + 4.0 * ud(grng);
  const double phase = kTau * ud(grng);
  const double wobble_amp = 0.2 + 0.4 * ud(grng), wobble_freq = 1.0 + 2.0 * ud(grng);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double inv = 1.0 / static_cast<double>(std::min(h, w));
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      const double xx = static_cast<double>(x), yy = static_cast<double>(y);
      const double axis = (xx * ct + yy * st) * inv;
      const double wobble = wobble_amp * std::sin(kTau * wobble_freq * (yy * ct - xx * st) * inv);
      const double s = std::sin(kTau * freq * axis + phase + wobble);
      const double t = 0.5 * (1.0 + s);
      for (Index c = 0; c < 3; ++c)
        img.value()[img.offset(0, c, y, x)] = clamp_unit(lerp(a.c[c], b.c[c], t));
    }
}

void render_blobs(Tensor& img, Index h, Index w, std::mt19937_64& prng, std::mt19937_64& grng) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const Rgb bg = random_color(prng);
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) img.value()[img.offset(0, c, y, x)] = bg.c[c];
  std::uniform_int_distribution<int> nd(3, 8);
  const int blobs = nd(grng);
  const double extent = static_cast<double>(std::min(h, w));
  for (int i = 0; i < blobs; ++i) {
    const double cy = ud(grng) * static_cast<double>(h - 1);
    const double cx = ud(grng) * static_cast<double>(w - 1);
    const double r = (0.08 + 0.17 * ud(grng)) * extent;
    const Rgb col = random_color(prng);
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        const double wgt = std::exp(-(dy * dy + dx * dx) / (2.0 * r * r));
        for (Index c = 0; c < 3; ++c) {
          const Index idx = img.offset(0, c, y, x);
          img.value()[idx] = clamp_unit(lerp(img.value()[idx], col.c[c], wgt));
        }
      }
  }
}

void render_checker_warp(Tensor& img, Index h, Index w, std::mt19937_64& prng,
                         std::mt19937_64& grng) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const Rgb a = random_color(prng), b = random_color(prng);
  std::uniform_int_distribution<int> cell_d(4, 8);
  const double cell = static_cast<double>(cell_d(grng));
  const double amp = 1.0 + 3.0 * ud(grng);
  const double lam1 = 8.0 + 16.0 * ud(grng), lam2 = 8.0 + 16.0 * ud(grng);
  const double p1 = kTau * ud(grng), p2 = kTau * ud(grng);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      const double xx = static_cast<double>(x), yy = static_cast<double>(y);
      const double u = xx + amp * std::sin(kTau * yy / lam1 + p1);
      const double v = yy + amp * std::sin(kTau * xx / lam2 + p2);
      const long long pu = static_cast<long long>(std::floor(u / cell));
      const long long pv = static_cast<long long>(std::floor(v / cell));
      const bool odd = ((pu + pv) % 2 + 2) % 2 == 1;
      const Rgb& col = odd ? a : b;
      const double tint = 0.1 * (yy / static_cast<double>(h) - 0.5);
      for (Index c = 0; c < 3; ++c)
        img.value()[img.offset(0, c, y, x)] = clamp_unit(col.c[c] + tint);
    }
}

}  // namespace

const char* scene_kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::GradientSky: return "gradient-sky";
    case SceneKind::Stripes: return "stripes";
    case SceneKind::Blobs: return "blobs";
    case SceneKind::CheckerWarp: return "checker-warp";
  }
  throw ArgumentError("unknown scene kind");
}

SceneKind scene_kind_from_name(const std::string& name) {
  for (SceneKind k : {SceneKind::GradientSky, SceneKind::Stripes, SceneKind::Blobs,
                      SceneKind::CheckerWarp})
    if (name == scene_kind_name(k)) return k;
  throw ArgumentError("unknown scene kind '" + name + "'");
}

std::string spec_line(const SceneSpec& spec) {
  std::ostringstream os;
  os << scene_kind_name(spec.kind) << ' ' << spec.palette_seed << ' ' << spec.geometry_seed;
  return os.str();
}

SceneSpec parse_spec_line(const std::string& line) {
  std::istringstream is(line);
  std::string kind;
  SceneSpec spec;
  if (!(is >> kind >> spec.palette_seed >> spec.geometry_seed))
    throw ArgumentError("malformed scene spec line '" + line + "'");
  std::string extra;
  if (is >> extra) throw ArgumentError("trailing content in scene spec line '" + line + "'");
  spec.kind = scene_kind_from_name(kind);
  return spec;
}

std::vector<SceneSpec> corpus_specs(int count, std::uint64_t seed) {
  if (count < 0) throw ArgumentError("corpus count must be nonnegative");
  std::mt19937_64 rng(seed);
  std::vector<SceneSpec> specs;
  specs.reserve(static_cast<std::size_t>(count));
  constexpr SceneKind kinds[] = {SceneKind::GradientSky, SceneKind::Stripes, SceneKind::Blobs,
                                 SceneKind::CheckerWarp};
  for (int i = 0; i < count; ++i) {
    SceneSpec s;
    s.kind = kinds[i % 4];
    s.palette_seed = rng();
    s.geometry_seed = rng();
    specs.push_back(s);
  }
  return specs;
}

void write_manifest(std::ostream& os, const std::vector<SceneSpec>& specs) {
  for (const auto& s : specs) os << spec_line(s) << '\n';
}

std::vector<SceneSpec> read_manifest(std::istream& is) {
  std::vector<SceneSpec> specs;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    specs.push_back(parse_spec_line(line));
  }
  return specs;
}

void write_manifest_file(const std::string& path, const std::vector<SceneSpec>& specs) {
  std::ofstream os(path);
  if (!os) throw ArgumentError("cannot open manifest for writing: " + path);
  write_manifest(os, specs);
  if (!os) throw ArgumentError("failed writing manifest: " + path);
}

std::vector<SceneSpec> read_manifest_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open manifest: " + path);
  return read_manifest(is);
}

Tensor synth_image(const SceneSpec& spec, Index h, Index w) {
  if (h < 16 || w < 16) throw ArgumentError("synthetic images need extents >= 16");
  Tensor img = Tensor::zeros(Shape::nchw(1, 3, h, w));
  std::mt19937_64 prng(spec.palette_seed), grng(spec.geometry_seed);
  switch (spec.kind) {
    case SceneKind::GradientSky: render_gradient_sky(img, h, w, prng, grng); break;
    case SceneKind::Stripes: render_stripes(img, h, w, prng, grng); break;
    case SceneKind::Blobs: render_blobs(img, h, w, prng, grng); break;
    case SceneKind::CheckerWarp: render_checker_warp(img, h, w, prng, grng); break;
  }
  return img;
}

Tensor coarse_prior(const Tensor& image, const Mask& m, int iterations) {
  if (iterations < 1) throw ArgumentError("coarse prior needs at least one iteration");
  const Index b = image.shape().b(), c = image.shape().channels();
  const Index h = image.shape().height(), w = image.shape().width();
  if (h != m.height || w != m.width)
    throw DimensionError("mask extent does not match image: " + image.shape().str());
  Index background = 0;
  for (auto v : m.values) background += v ? 1 : 0;
  if (background == 0) throw GenerationError("coarse prior needs at least one background pixel");

  Tensor out(image.shape(), image.value());
  const Index hw = h * w;
  std::vector<double> cur(static_cast<std::size_t>(hw)), next(static_cast<std::size_t>(hw));
  for (Index s = 0; s < b; ++s)
    for (Index ch = 0; ch < c; ++ch) {
      const Index base = (s * c + ch) * hw;
      double bg_sum = 0;
      for (Index i = 0; i < hw; ++i)
        if (m.values[static_cast<std::size_t>(i)]) bg_sum += out.value()[base + i];
      const double fill = bg_sum / static_cast<double>(background);
      for (Index i = 0; i < hw; ++i)
        cur[static_cast<std::size_t>(i)] =
            m.values[static_cast<std::size_t>(i)] ? out.value()[base + i] : fill;
      for (int it = 0; it < iterations; ++it) {
        double max_update = 0;
        for (Index y = 0; y < h; ++y)
          for (Index x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y * w + x);
            if (m.values[i]) {
              next[i] = cur[i];
              continue;
            }
            double sum = 0;
            int n = 0;
            for (Index dy = -1; dy <= 1; ++dy)
              for (Index dx = -1; dx <= 1; ++dx) {
                if (dy == 0 && dx == 0) continue;
                const Index yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                sum += cur[static_cast<std::size_t>(yy * w + xx)];
                ++n;
              }
            next[i] = sum / static_cast<double>(n);
            max_update = std::max(max_update, std::abs(next[i] - cur[i]));
          }
        cur.swap(next);
        if (max_update < 1e-4) break;
      }
      for (Index i = 0; i < hw; ++i)
        if (!m.values[static_cast<std::size_t>(i)])
          out.value()[base + i] = cur[static_cast<std::size_t>(i)];
    }
  return out;
}

}  // namespace pdgan
