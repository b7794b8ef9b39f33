#pragma once

#include <iosfwd>
#include <string>

#include "pdgan/mask.hpp"
#include "pdgan/tensor.hpp"

namespace pdgan {

// Binary PPM (P6) for color images. Tensor side is [1,3,H,W] with values in
// [-1,1]; bytes map linearly so an 8-bit file reloads to the exact same bytes.
void write_image_ppm(std::ostream& os, const Tensor& image);
Tensor read_image_ppm(std::istream& is);
void write_image_ppm_file(const std::string& path, const Tensor& image);
Tensor read_image_ppm_file(const std::string& path);

// Binary PGM (P5) for masks: hole pixels are 0, background 255. Reading
// thresholds at 128 so externally edited masks load sensibly.
void write_mask_pgm(std::ostream& os, const Mask& m);
Mask read_mask_pgm(std::istream& is);
void write_mask_pgm_file(const std::string& path, const Mask& m);
Mask read_mask_pgm_file(const std::string& path);

// Binary PGM (P5) for diversity maps: [1,1,H,W] values in [0,1] scale to
// 0..255.
void write_map_pgm(std::ostream& os, const Tensor& map);
void write_map_pgm(std::ostream& os, const DiversityMap& map);
Tensor read_map_pgm(std::istream& is);
void write_map_pgm_file(const std::string& path, const Tensor& map);
Tensor read_map_pgm_file(const std::string& path);

}  // namespace pdgan
