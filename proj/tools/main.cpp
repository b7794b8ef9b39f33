#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "pdgan/harness.hpp"

using namespace pdgan;

namespace {

struct Flags {
  std::string config, out, ckpt, mask, image, bucket, pdiv, manifest;
  std::uint64_t seed = 0;
  Index count = 0, topk = 0;
  bool has_seed = false, has_out = false, has_count = false, has_topk = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "key=value config file");
  sub->add_option("--seed", f.seed)->each([&f](const std::string&) { f.has_seed = true; });
  sub->add_option("--out", f.out)->each([&f](const std::string&) { f.has_out = true; });
}

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : read_config_file(f.config);
  if (f.has_seed) cfg.seed = f.seed;
  if (f.has_out) cfg.out = f.out;
  if (f.has_count) cfg.samples = f.count;
  if (f.has_topk) cfg.topk = f.topk;
  if (!f.pdiv.empty()) cfg.pdiv = pdiv_mode_from_name(f.pdiv);
  if (!f.bucket.empty()) cfg.buckets = {bucket_from_name(f.bucket)};
  return cfg;
}

int run_train(const Flags& f) {
  const RunConfig cfg = resolve_config(f);
  const TrainResult res = cmd_train(cfg);
  for (const LogRow& row : res.log)
    std::cout << "iter=" << row.iteration << " d=" << canonical_number(row.d_loss)
              << " adv=" << canonical_number(row.g_adv) << " fm=" << canonical_number(row.g_fm)
              << " rec=" << canonical_number(row.g_rec) << " div=" << canonical_number(row.g_div)
              << " lum=" << canonical_number(row.hole_luminance) << "\n";
  if (res.aborted) {
    std::cerr << "aborted at iteration " << (res.completed + 1) << ": " << res.abort_reason
              << " (see " << cfg.out << "/diagnostic.txt)\n";
    return 3;
  }
  std::cout << "checkpoint=" << res.checkpoint_path << "\n";
  return 0;
}

int run_sample(const Flags& f) {
  const RunConfig cfg = resolve_config(f);
  const SampleResult res = cmd_sample(cfg, f.ckpt, f.image, f.mask);
  for (std::size_t r = 0; r < res.ranking.size(); ++r)
    std::cout << "rank=" << r << " candidate=" << res.ranking[r]
              << " score=" << canonical_number(res.scores[res.ranking[r]]) << "\n";
  std::cout << "grid=" << res.grid_path << "\n";
  return 0;
}

int run_eval(const Flags& f) {
  const RunConfig cfg = resolve_config(f);
  const EvalReport rep = cmd_eval(cfg, f.ckpt, f.manifest);
  std::cout << rep.to_text();
  return 0;
}

int run_dump_maps(const Flags& f) {
  const RunConfig cfg = resolve_config(f);
  for (const std::string& path : cmd_dump_maps(cfg, f.mask, f.ckpt))
    std::cout << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diverse image inpainting: training, sampling and evaluation"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* train = app.add_subcommand("train", "train a model from scratch");
  add_common(train, f);
  train->add_option("--pdiv", f.pdiv, "diversity objective: on, off or cdl")
      ->check(CLI::IsMember({"on", "off", "cdl"}));
  train->add_option("--bucket", f.bucket, "restrict training masks to one ratio bucket");

  CLI::App* sample = app.add_subcommand("sample", "draw ranked completions for one image");
  add_common(sample, f);
  sample->add_option("--ckpt", f.ckpt, "checkpoint file")->required();
  sample->add_option("--image", f.image, "input PPM image")->required();
  sample->add_option("--mask", f.mask, "hole mask PGM")->required();
  sample->add_option("--count", f.count)->each([&f](const std::string&) { f.has_count = true; });
  sample->add_option("--topk", f.topk)->each([&f](const std::string&) { f.has_topk = true; });

  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint over a scene manifest");
  add_common(eval, f);
  eval->add_option("--ckpt", f.ckpt, "checkpoint file")->required();
  eval->add_option("manifest", f.manifest, "scene manifest file")->required();
  eval->add_option("--count", f.count)->each([&f](const std::string&) { f.has_count = true; });
  eval->add_option("--topk", f.topk)->each([&f](const std::string&) { f.has_topk = true; });
  eval->add_option("--bucket", f.bucket, "evaluate one ratio bucket only");

  CLI::App* dump = app.add_subcommand("dump-maps", "write per-stage diversity maps for a mask");
  add_common(dump, f);
  dump->add_option("--mask", f.mask, "hole mask PGM")->required();
  dump->add_option("--ckpt", f.ckpt, "also dump the learned soft maps of this checkpoint");

  CLI::App* grad = app.add_subcommand("grad-check", "run every analytic-gradient check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return run_train(f);
    if (sample->parsed()) return run_sample(f);
    if (eval->parsed()) return run_eval(f);
    if (dump->parsed()) return run_dump_maps(f);
    if (grad->parsed()) return cmd_grad_check(std::cout) == 0 ? 0 : 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
