#include "pdgan/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace pdgan {
namespace {

std::uint8_t to_byte(double v, double lo, double hi) {
  const double unit = (std::clamp(v, lo, hi) - lo) / (hi - lo);
  return static_cast<std::uint8_t>(std::lround(unit * 255.0));
}

void write_pnm(std::ostream& os, const char* magic, Index h, Index w,
               const std::vector<std::uint8_t>& bytes) {
  os << magic << "\n" << w << " " << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw ArgumentError("pnm write failed");
}

int next_header_token(std::istream& is) {
  int c = is.get();
  while (c != std::istream::traits_type::eof()) {
    if (c == '#') {
      while (c != '\n' && c != std::istream::traits_type::eof()) c = is.get();
    } else if (!std::isspace(c)) {
      return c;
    }
    c = is.get();
  }
  throw ArgumentError("truncated pnm header");
}

Index read_header_number(std::istream& is) {
  int c = next_header_token(is);
  if (!std::isdigit(c)) throw ArgumentError("malformed pnm header");
  Index value = 0;
  while (std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = is.get();
  }
  if (c != std::istream::traits_type::eof() && !std::isspace(c))
    throw ArgumentError("malformed pnm header");
  return value;
}

std::vector<std::uint8_t> read_pnm(std::istream& is, const char* magic, Index& h, Index& w) {
  char m0, m1;
  if (!is.get(m0) || !is.get(m1) || m0 != magic[0] || m1 != magic[1])
    throw ArgumentError("not a " + std::string(magic) + " file");
  w = read_header_number(is);
  h = read_header_number(is);
  if (read_header_number(is) != 255) throw ArgumentError("unsupported pnm maxval");
  if (h <= 0 || w <= 0) throw ArgumentError("bad pnm extent");
  const std::size_t channels = magic[1] == '6' ? 3 : 1;
  std::vector<std::uint8_t> bytes(channels * static_cast<std::size_t>(h * w));
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (is.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw ArgumentError("truncated pnm data");
  return bytes;
}

template <typename Fn>
void with_output_file(const std::string& path, Fn fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ArgumentError("cannot open " + path + " for writing");
  fn(os);
}

template <typename Fn>
auto with_input_file(const std::string& path, Fn fn) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open " + path);
  return fn(is);
}

}  // namespace

void write_image_ppm(std::ostream& os, const Tensor& image) {
  const Shape& s = image.shape();
  if (s.b() != 1 || s.channels() != 3) throw ArgumentError("ppm output expects one [1,3,H,W] image");
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(3 * s.height() * s.width()));
  std::size_t k = 0;
  for (Index y = 0; y < s.height(); ++y)
    for (Index x = 0; x < s.width(); ++x)
      for (Index c = 0; c < 3; ++c)
        bytes[k++] = to_byte(image.at(0, c, y, x), -1.0, 1.0);
  write_pnm(os, "P6", s.height(), s.width(), bytes);
}

Tensor read_image_ppm(std::istream& is) {
  Index h = 0, w = 0;
  const auto bytes = read_pnm(is, "P6", h, w);
  Tensor image = Tensor::zeros(Shape::nchw(1, 3, h, w));
  std::size_t k = 0;
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (Index c = 0; c < 3; ++c)
        image.value()[(c * h + y) * w + x] = bytes[k++] / 127.5 - 1.0;
  return image;
}

void write_mask_pgm(std::ostream& os, const Mask& m) {
  std::vector<std::uint8_t> bytes(m.values.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = m.values[i] ? 255 : 0;
  write_pnm(os, "P5", m.height, m.width, bytes);
}

Mask read_mask_pgm(std::istream& is) {
  Index h = 0, w = 0;
  const auto bytes = read_pnm(is, "P5", h, w);
  Mask m = Mask::filled(h, w, 0);
  for (std::size_t i = 0; i < bytes.size(); ++i) m.values[i] = bytes[i] >= 128 ? 1 : 0;
  return m;
}

void write_map_pgm(std::ostream& os, const Tensor& map) {
  const Shape& s = map.shape();
  if (s.b() != 1 || s.channels() != 1) throw ArgumentError("pgm output expects one [1,1,H,W] map");
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(s.height() * s.width()));
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = to_byte(map.value()[static_cast<Index>(i)], 0.0, 1.0);
  write_pnm(os, "P5", s.height(), s.width(), bytes);
}

void write_map_pgm(std::ostream& os, const DiversityMap& map) {
  std::vector<std::uint8_t> bytes(map.values.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(map.values[i], 0.0, 1.0);
  write_pnm(os, "P5", map.height, map.width, bytes);
}

Tensor read_map_pgm(std::istream& is) {
  Index h = 0, w = 0;
  const auto bytes = read_pnm(is, "P5", h, w);
  Tensor map = Tensor::zeros(Shape::nchw(1, 1, h, w));
  for (std::size_t i = 0; i < bytes.size(); ++i)
    map.value()[static_cast<Index>(i)] = bytes[i] / 255.0;
  return map;
}

void write_image_ppm_file(const std::string& path, const Tensor& image) {
  with_output_file(path, [&](std::ostream& os) { write_image_ppm(os, image); });
}

Tensor read_image_ppm_file(const std::string& path) {
  return with_input_file(path, [](std::istream& is) { return read_image_ppm(is); });
}

void write_mask_pgm_file(const std::string& path, const Mask& m) {
  with_output_file(path, [&](std::ostream& os) { write_mask_pgm(os, m); });
}

Mask read_mask_pgm_file(const std::string& path) {
  return with_input_file(path, [](std::istream& is) { return read_mask_pgm(is); });
}

void write_map_pgm_file(const std::string& path, const Tensor& map) {
  with_output_file(path, [&](std::ostream& os) { write_map_pgm(os, map); });
}

Tensor read_map_pgm_file(const std::string& path) {
  return with_input_file(path, [](std::istream& is) { return read_map_pgm(is); });
}

}  // namespace pdgan
