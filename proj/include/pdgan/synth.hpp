#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdgan/mask.hpp"
#include "pdgan/tensor.hpp"

namespace pdgan {

enum class SceneKind { GradientSky, Stripes, Blobs, CheckerWarp };

const char* scene_kind_name(SceneKind kind);
SceneKind scene_kind_from_name(const std::string& name);  // ArgumentError on unknown

struct SceneSpec {
  SceneKind kind = SceneKind::GradientSky;
  std::uint64_t palette_seed = 0;
  std::uint64_t geometry_seed = 0;

  bool operator==(const SceneSpec&) const = default;
};

/// One manifest line: "<kind> <palette-seed> <geometry-seed>".
std::string spec_line(const SceneSpec& spec);
SceneSpec parse_spec_line(const std::string& line);  // ArgumentError on malformed input

/// Deterministic corpus: kinds cycle, seeds drawn from one generator.
std::vector<SceneSpec> corpus_specs(int count, std::uint64_t seed);

void write_manifest(std::ostream& os, const std::vector<SceneSpec>& specs);
std::vector<SceneSpec> read_manifest(std::istream& is);
void write_manifest_file(const std::string& path, const std::vector<SceneSpec>& specs);
std::vector<SceneSpec> read_manifest_file(const std::string& path);

/// Procedural [1,3,H,W] image in [-1,1], deterministic per spec. The
/// gradient-sky kind keeps channel 0 monotone down every column.
Tensor synth_image(const SceneSpec& spec, Index h, Index w);

/// Fills hole pixels by iterated 8-neighbour averaging (Jacobi) with
/// background pixels held fixed; holes start from the per-channel background
/// mean, and iteration stops early once the largest update drops below 1e-4.
/// Output depends only on background pixels and the mask.
Tensor coarse_prior(const Tensor& image, const Mask& m, int iterations);

}  // namespace pdgan
