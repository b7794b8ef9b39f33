#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdgan/losses.hpp"
#include "pdgan/mask.hpp"
#include "pdgan/network.hpp"

namespace pdgan {

/// Which diversity objective the generator trains against.
enum class PdivMode { On, Off, Cdl };

const char* pdiv_mode_name(PdivMode m);
PdivMode pdiv_mode_from_name(const std::string& s);
const char* diversity_gate_name(DiversityGate g);
DiversityGate diversity_gate_from_name(const std::string& s);

/// Everything a run needs, mirrored 1:1 by the flat key=value config format.
struct RunConfig {
  std::uint64_t seed = 1;
  Index image_size = 64;
  Index latent_dim = 128;
  Index base_size = 4;
  std::vector<Index> stage_channels{96, 64, 48, 32, 16};
  std::vector<int> n_schedule{2, 2, 4, 4, 4};
  double k = 4.0;
  Index norm_hidden = 32;
  Index disc_base = 16;
  double eps_norm = 1e-5;
  double eps_div = 1e-5;
  double w_adv = 1.0;
  double w_fm = 10.0;
  double w_rec = 10.0;
  double w_pdiv = 1.0;
  PdivMode pdiv = PdivMode::On;
  DiversityGate pdiv_gate = DiversityGate::Hole;
  double lr = 1e-4;
  double ttur = 4.0;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  Index batch = 4;
  Index iters = 2000;
  Index corpus = 64;
  Index samples = 20;
  Index topk = 5;
  int prior_iters = 200;
  Index log_every = 50;
  Index ckpt_every = 500;
  std::vector<RatioBucket> buckets{RatioBucket::R10_20, RatioBucket::R20_30, RatioBucket::R30_40,
                                   RatioBucket::R40_50};
  std::string out = "./run";

  void validate() const;
  GeneratorConfig generator_config() const;
  LossWeights loss_weights() const;

  bool operator==(const RunConfig& o) const = default;
};

/// Shortest decimal form that reparses to the same double.
std::string canonical_number(double v);

/// Canonical text: one key=value line per field, declaration order.
std::string serialize_config(const RunConfig& c);
/// Applies key=value lines on top of the defaults. Blank lines and lines
/// starting with # are skipped; unknown or repeated keys throw.
RunConfig parse_config(std::istream& is);
RunConfig parse_config_text(const std::string& text);
void write_config_file(const std::string& path, const RunConfig& c);
RunConfig read_config_file(const std::string& path);

/// key=value override from the command line ("iters=50").
void apply_config_override(RunConfig& c, const std::string& assignment);

}  // namespace pdgan
