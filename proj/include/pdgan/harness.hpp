#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdgan/config.hpp"
#include "pdgan/metrics.hpp"
#include "pdgan/network.hpp"
#include "pdgan/synth.hpp"

namespace pdgan {

/// Adam with one moment pair per parameter tensor.
struct Adam {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
  Index t = 0;
  std::vector<Array> m, v;

  void attach(const std::vector<Tensor>& params);
  /// One update from the accumulated gradients; missing gradients count as 0.
  void step(const std::vector<Tensor>& params);
};

/// Everything a run carries between iterations.
struct TrainState {
  RunConfig cfg;
  Generator gen;
  Discriminator disc;
  FeaturePyramid pyramid;
  Adam opt_g, opt_d;
  Index iteration = 0;

  std::vector<Tensor> gen_params() const { return gen.parameters(); }
  std::vector<Tensor> disc_params() const { return disc.parameters(); }
};

/// Fresh networks and optimizers from the config seed.
TrainState make_train_state(const RunConfig& cfg);

// Checkpoint layout, little-endian: magic "PDGK" | u16 version | u64 config
// text length + bytes | u64 iteration | u64 generator steps | u64
// discriminator steps | u64 record count | records of (u64 name length, name,
// tensor record). Records cover parameters and optimizer moments.
void save_checkpoint(std::ostream& os, const TrainState& s);
TrainState load_checkpoint(std::istream& is);
void save_checkpoint_file(const std::string& path, const TrainState& s);
TrainState load_checkpoint_file(const std::string& path);

struct LogRow {
  Index iteration = 0;
  double d_loss = 0;
  double g_adv = 0;
  double g_fm = 0;
  double g_rec = 0;
  double g_div = 0;
  double hole_luminance = 0;
};

struct TrainResult {
  Index completed = 0;
  bool aborted = false;  // the non-finite guard fired
  std::string abort_reason;
  double hole_luminance = 0;  // last generator batch, mean over hole pixels
  std::vector<LogRow> log;
  std::string checkpoint_path;  // empty when aborted
};

/// Alternating discriminator/generator updates over a synthetic corpus; logs
/// every log-every iterations, checkpoints every ckpt-every and at the end.
/// A non-finite loss or parameter aborts with a diagnostic dump of the batch
/// instead of a checkpoint.
TrainResult cmd_train(const RunConfig& cfg);

struct SampleResult {
  std::vector<Tensor> samples;       // composited candidates, draw order
  std::vector<double> scores;        // discriminator score per candidate
  std::vector<std::size_t> ranking;  // top-k candidate indices, best first
  std::string grid_path;
  std::string table_path;
};

/// Draws cfg.samples latents for one (image, mask) pair, composites, ranks by
/// discriminator score; writes the top-k frames, the full grid and the score
/// table under cfg.out.
SampleResult cmd_sample(const RunConfig& cfg, const std::string& ckpt_path,
                        const std::string& image_path, const std::string& mask_path);

struct BucketQuality {
  RatioBucket bucket = RatioBucket::R10_20;
  double psnr = 0;
  double ssim = 0;
};

struct EvalReport {
  double sanity_psnr = 0;  // ground truth scored against itself
  double sanity_ssim = 0;
  std::vector<BucketQuality> quality;  // best-of-top-k, averaged over the corpus
  double diversity_full = 0;
  double diversity_masked = 0;
  std::size_t pair_count = 0;

  std::string to_text() const;
};

/// Scores a checkpoint over a manifest of scenes: per-bucket best-of-top-k
/// PSNR/SSIM plus full and masked diversity over each candidate set.
EvalReport cmd_eval(const RunConfig& cfg, const std::string& ckpt_path,
                    const std::string& manifest_path);

/// Writes the per-stage hard maps for a mask, and the learned per-stage soft
/// maps when a checkpoint is supplied. Returns the files written.
std::vector<std::string> cmd_dump_maps(const RunConfig& cfg, const std::string& mask_path,
                                       const std::string& ckpt_path = std::string());

/// Runs every registered gradient check, one line per op; returns the number
/// of ops whose max relative error reaches 1e-3.
int cmd_grad_check(std::ostream& os);

}  // namespace pdgan
