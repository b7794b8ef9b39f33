#include "pdgan/harness.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pdgan/grad_check.hpp"
#include "pdgan/image_io.hpp"
#include "pdgan/losses.hpp"
#include "pdgan/spdnorm.hpp"

namespace pdgan {
namespace {

namespace fs = std::filesystem;

constexpr std::uint16_t kCheckpointVersion = 1;

std::string num(double v) { return canonical_number(v); }

void write_raw(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw ArgumentError("checkpoint write failed");
}

void read_raw(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n)) throw ArgumentError("truncated checkpoint");
}

void write_u64(std::ostream& os, std::uint64_t v) { write_raw(os, &v, sizeof v); }

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  read_raw(is, &v, sizeof v);
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  write_raw(os, s.data(), s.size());
}

std::string read_string(std::istream& is) {
  std::string s(read_u64(is), '\0');
  read_raw(is, s.data(), s.size());
  return s;
}

/// Parameters and optimizer moments in their serialized order.
struct Records {
  std::vector<std::pair<std::string, Tensor>> params;
  std::vector<std::pair<std::string, Array*>> moments;
};

Records checkpoint_records(TrainState& s, const std::vector<Tensor>& gp,
                           const std::vector<Tensor>& dp) {
  Records r;
  auto add_params = [&r](const char* prefix, const std::vector<Tensor>& ts) {
    for (std::size_t i = 0; i < ts.size(); ++i)
      r.params.emplace_back(prefix + std::to_string(i), ts[i]);
  };
  auto add_moments = [&r](const char* prefix, std::vector<Array>& as) {
    for (std::size_t i = 0; i < as.size(); ++i)
      r.moments.emplace_back(prefix + std::to_string(i), &as[i]);
  };
  add_params("g.", gp);
  add_params("d.", dp);
  add_moments("gm.", s.opt_g.m);
  add_moments("gv.", s.opt_g.v);
  add_moments("dm.", s.opt_d.m);
  add_moments("dv.", s.opt_d.v);
  return r;
}

/// [1,C,H,W] items stacked along the batch axis.
Tensor stack_batch(const std::vector<Tensor>& items) {
  const Shape& s0 = items.front().shape();
  Tensor out = Tensor::zeros(
      Shape::nchw(static_cast<Index>(items.size()), s0.channels(), s0.height(), s0.width()));
  const Index per = s0.numel();
  for (std::size_t i = 0; i < items.size(); ++i)
    out.value().segment(static_cast<Index>(i) * per, per) = items[i].value();
  return out;
}

double hole_luminance(const Tensor& batch, const Mask& m) {
  const Shape& s = batch.shape();
  double sum = 0;
  Index count = 0;
  for (Index b = 0; b < s.b(); ++b)
    for (Index c = 0; c < s.channels(); ++c)
      for (Index y = 0; y < s.height(); ++y)
        for (Index x = 0; x < s.width(); ++x)
          if (!m.at(y, x)) {
            sum += batch.at(b, c, y, x);
            ++count;
          }
  return count ? sum / static_cast<double>(count) : 0.0;
}

double mean_value(const Tensor& t) { return t.value().mean(); }

Tensor image_grid(const std::vector<Tensor>& images) {
  const Shape& s0 = images.front().shape();
  const auto n = static_cast<Index>(images.size());
  const Index cols = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n))));
  const Index rows = (n + cols - 1) / cols;
  Tensor canvas = Tensor::full(Shape::nchw(1, 3, rows * s0.height(), cols * s0.width()), -1.0);
  for (Index i = 0; i < n; ++i) {
    const Index oy = (i / cols) * s0.height(), ox = (i % cols) * s0.width();
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < s0.height(); ++y)
        for (Index x = 0; x < s0.width(); ++x)
          canvas.value()[canvas.offset(0, c, oy + y, ox + x)] = images[i].at(0, c, y, x);
  }
  return canvas;
}

/// Candidate set for one (image, mask) pair: composited samples plus their
/// mean discriminator scores.
struct Candidates {
  std::vector<Tensor> samples;
  std::vector<double> scores;
};

Candidates draw_candidates(const TrainState& st, const Tensor& image, const Mask& mask,
                           Index count, std::mt19937_64& rng) {
  const Tensor prior = coarse_prior(image, mask, st.cfg.prior_iters);
  const StageContext ctx = make_stage_context(prior, {mask}, st.gen.cfg);
  const Tensor mask_t = mask_tensor(mask);
  Candidates out;
  for (Index i = 0; i < count; ++i) {
    const Tensor z =
        Tensor::randn(Shape::nchw(1, st.cfg.latent_dim, 1, 1), rng);
    const Tensor comp = composite(generate_batch(st.gen, z, ctx), image, mask_t);
    out.samples.push_back(comp);
    out.scores.push_back(mean_value(st.disc(comp).score));
  }
  return out;
}

}  // namespace

void Adam::attach(const std::vector<Tensor>& params) {
  m.clear();
  v.clear();
  for (const Tensor& p : params) {
    m.push_back(Array::Zero(p.numel()));
    v.push_back(Array::Zero(p.numel()));
  }
  t = 0;
}

void Adam::step(const std::vector<Tensor>& params) {
  if (params.size() != m.size())
    throw ContractError("optimizer tracks " + std::to_string(m.size()) + " tensors, got " +
                        std::to_string(params.size()));
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = params[i];
    const Array g = p.has_grad() ? p.grad() : Array::Zero(p.numel());
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g.square();
    const_cast<Tensor&>(p).value() -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
  }
}

TrainState make_train_state(const RunConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.cfg = cfg;
  std::mt19937_64 rng(cfg.seed);
  s.gen = Generator::make(cfg.generator_config(), rng);
  s.disc = Discriminator::make(cfg.disc_base, rng);
  s.pyramid = FeaturePyramid::make(cfg.seed);  // stays frozen: no requires_grad
  set_requires_grad(s.gen.parameters(), true);
  set_requires_grad(s.disc.parameters(), true);
  s.opt_g = Adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps};
  s.opt_d = Adam{cfg.lr * cfg.ttur, cfg.beta1, cfg.beta2, cfg.adam_eps};
  s.opt_g.attach(s.gen.parameters());
  s.opt_d.attach(s.disc.parameters());
  return s;
}

void save_checkpoint(std::ostream& os, const TrainState& s) {
  auto& ms = const_cast<TrainState&>(s);
  const auto gp = s.gen.parameters();
  const auto dp = s.disc.parameters();
  for (const Tensor& p : gp)
    if (!p.all_finite()) throw NumericError("refusing to write non-finite generator parameter");
  for (const Tensor& p : dp)
    if (!p.all_finite())
      throw NumericError("refusing to write non-finite discriminator parameter");
  const Records rec = checkpoint_records(ms, gp, dp);
  write_raw(os, "PDGK", 4);
  write_raw(os, &kCheckpointVersion, sizeof kCheckpointVersion);
  write_string(os, serialize_config(s.cfg));
  write_u64(os, static_cast<std::uint64_t>(s.iteration));
  write_u64(os, static_cast<std::uint64_t>(s.opt_g.t));
  write_u64(os, static_cast<std::uint64_t>(s.opt_d.t));
  write_u64(os, rec.params.size() + rec.moments.size());
  for (const auto& [name, tensor] : rec.params) {
    write_string(os, name);
    write_tensor(os, tensor);
  }
  for (const auto& [name, arr] : rec.moments) {
    write_string(os, name);
    write_tensor(os, Tensor(Shape::vec(arr->size()), *arr));
  }
}

TrainState load_checkpoint(std::istream& is) {
  char magic[4];
  read_raw(is, magic, 4);
  if (std::string(magic, 4) != "PDGK") throw ArgumentError("not a PDGK checkpoint");
  std::uint16_t version = 0;
  read_raw(is, &version, sizeof version);
  if (version != kCheckpointVersion)
    throw ArgumentError("unsupported checkpoint version " + std::to_string(version) +
                        ", expected " + std::to_string(kCheckpointVersion));
  TrainState s = make_train_state(parse_config_text(read_string(is)));
  s.iteration = static_cast<Index>(read_u64(is));
  s.opt_g.t = static_cast<Index>(read_u64(is));
  s.opt_d.t = static_cast<Index>(read_u64(is));
  const auto gp = s.gen.parameters();
  const auto dp = s.disc.parameters();
  const Records rec = checkpoint_records(s, gp, dp);
  const std::uint64_t count = read_u64(is);
  if (count != rec.params.size() + rec.moments.size())
    throw ArgumentError("checkpoint holds " + std::to_string(count) + " records, config needs " +
                        std::to_string(rec.params.size() + rec.moments.size()));
  for (const auto& [name, tensor] : rec.params) {
    if (read_string(is) != name) throw ArgumentError("checkpoint record order mismatch");
    Tensor loaded = read_tensor(is);
    if (loaded.shape() != tensor.shape())
      throw DimensionError("checkpoint tensor " + name + " has shape " + loaded.shape().str() +
                           ", config needs " + tensor.shape().str());
    const_cast<Tensor&>(tensor).value() = loaded.value();
  }
  for (const auto& [name, arr] : rec.moments) {
    if (read_string(is) != name) throw ArgumentError("checkpoint record order mismatch");
    Tensor loaded = read_tensor(is);
    if (loaded.numel() != arr->size())
      throw DimensionError("checkpoint moment " + name + " has " +
                           std::to_string(loaded.numel()) + " entries, config needs " +
                           std::to_string(arr->size()));
    *arr = loaded.value();
  }
  return s;
}

void save_checkpoint_file(const std::string& path, const TrainState& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ArgumentError("cannot open " + path + " for writing");
  save_checkpoint(os, s);
}

TrainState load_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open " + path);
  return load_checkpoint(is);
}

TrainResult cmd_train(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out);
  TrainState s = make_train_state(cfg);
  const auto gp = s.gen.parameters();
  const auto dp = s.disc.parameters();
  const Index S = cfg.image_size;

  const auto specs = corpus_specs(static_cast<std::size_t>(cfg.corpus), cfg.seed);
  std::vector<Tensor> corpus;
  for (const SceneSpec& sp : specs) corpus.push_back(synth_image(sp, S, S));

  std::mt19937_64 data_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
  std::uniform_int_distribution<std::size_t> pick_image(0, corpus.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_bucket(0, cfg.buckets.size() - 1);

  std::ofstream log_file(cfg.out + "/train_log.txt");
  if (!log_file) throw ArgumentError("cannot open " + cfg.out + "/train_log.txt for writing");

  TrainResult res;
  LogRow row;

  // Batch context the abort dump reports.
  std::vector<std::size_t> batch_ids;
  RatioBucket bucket = cfg.buckets.front();
  std::uint64_t mask_seed = 0;
  Mask mask = Mask::filled(S, S, 1);
  std::vector<Tensor> gt_items, prior_items;

  auto abort_run = [&](Index it, const std::string& reason) {
    res.aborted = true;
    res.abort_reason = reason;
    res.completed = it - 1;
    const std::string diag_dir = cfg.out + "/diag";
    fs::create_directories(diag_dir);
    std::ofstream diag(cfg.out + "/diagnostic.txt");
    diag << "iteration=" << it << "\n"
         << "reason=" << reason << "\n"
         << "bucket=" << bucket_name(bucket) << "\n"
         << "mask-seed=" << mask_seed << "\n";
    diag << "specs=";
    for (std::size_t i = 0; i < batch_ids.size(); ++i)
      diag << (i ? "," : "") << batch_ids[i];
    diag << "\n"
         << "d=" << num(row.d_loss) << " adv=" << num(row.g_adv) << " fm=" << num(row.g_fm)
         << " rec=" << num(row.g_rec) << " div=" << num(row.g_div) << "\n";
    write_mask_pgm_file(diag_dir + "/mask.pgm", mask);
    for (std::size_t b = 0; b < gt_items.size(); ++b) {
      write_image_ppm_file(diag_dir + "/gt_" + std::to_string(b) + ".ppm", gt_items[b]);
      write_image_ppm_file(diag_dir + "/prior_" + std::to_string(b) + ".ppm", prior_items[b]);
    }
    return res;
  };

  for (Index it = 1; it <= cfg.iters; ++it) {
    row = LogRow{};
    row.iteration = it;

    batch_ids.clear();
    gt_items.clear();
    prior_items.clear();
    for (Index b = 0; b < cfg.batch; ++b) batch_ids.push_back(pick_image(data_rng));
    bucket = cfg.buckets[pick_bucket(data_rng)];
    mask_seed = data_rng();
    mask = generate_irregular_mask(S, S, bucket, mask_seed);
    for (const std::size_t id : batch_ids) {
      gt_items.push_back(corpus[id]);
      prior_items.push_back(coarse_prior(corpus[id], mask, cfg.prior_iters));
    }
    const Tensor gt = stack_batch(gt_items);
    const Tensor prior = stack_batch(prior_items);
    const std::vector<Mask> masks(static_cast<std::size_t>(cfg.batch), mask);
    const StageContext ctx = make_stage_context(prior, masks, s.gen.cfg);
    const Tensor mask_t = mask_tensor(mask);

    // One latent for the discriminator pass, two for the generator pair; all
    // modes draw the same stream so ablation arms see identical data.
    const Shape zshape = Shape::nchw(cfg.batch, cfg.latent_dim, 1, 1);
    const Tensor zd = Tensor::randn(zshape, data_rng);
    const Tensor z1 = Tensor::randn(zshape, data_rng);
    const Tensor z2 = Tensor::randn(zshape, data_rng);

    zero_grads(dp);
    zero_grads(gp);
    const Tensor fake_d = generate_batch(s.gen, zd, ctx);
    {
      Tape tape;
      const auto real_r = s.disc(gt);
      const auto fake_r = s.disc(detach(fake_d));
      const HingeLosses h = hinge_losses(real_r.score, fake_r.score);
      row.d_loss = h.d.scalar();
      if (!std::isfinite(row.d_loss)) return abort_run(it, "non-finite discriminator loss");
      tape.backward(h.d);
    }
    s.opt_d.step(dp);

    zero_grads(gp);
    zero_grads(dp);
    Tensor f1;
    {
      Tape tape;
      f1 = generate_batch(s.gen, z1, ctx);
      const auto fake_r = s.disc(f1);
      const auto real_r = s.disc(gt);
      const Tensor adv = hinge_losses(real_r.score, fake_r.score).g;
      const Tensor fm = feature_matching_loss(real_r.features, fake_r.features);
      const Tensor rec = reconstruction_loss(f1, gt, s.pyramid);
      Tensor total =
          add(add(scale(adv, cfg.w_adv), scale(fm, cfg.w_fm)), scale(rec, cfg.w_rec));
      row.g_adv = adv.scalar();
      row.g_fm = fm.scalar();
      row.g_rec = rec.scalar();
      if (cfg.pdiv != PdivMode::Off) {
        const Tensor f2 = generate_batch(s.gen, z2, ctx);
        Tensor div;
        if (cfg.pdiv == PdivMode::On) {
          const Tensor c1 = composite(f1, gt, mask_t);
          const Tensor c2 = composite(f2, gt, mask_t);
          div = perceptual_diversity_loss(c1, c2, mask, s.pyramid, cfg.eps_div, cfg.pdiv_gate);
        } else {
          div = conventional_diversity_loss(z1, z2, f1, f2, cfg.eps_div);
        }
        row.g_div = div.scalar();
        total = add(total, scale(div, cfg.w_pdiv));
      }
      for (const double v : {row.g_adv, row.g_fm, row.g_rec, row.g_div})
        if (!std::isfinite(v)) return abort_run(it, "non-finite generator loss");
      tape.backward(total);
    }
    s.opt_g.step(gp);
    row.hole_luminance = hole_luminance(f1, mask);
    res.hole_luminance = row.hole_luminance;

    for (const Tensor& p : gp)
      if (!p.all_finite()) return abort_run(it, "non-finite generator parameter");
    for (const Tensor& p : dp)
      if (!p.all_finite()) return abort_run(it, "non-finite discriminator parameter");

    s.iteration = it;
    if (it % cfg.log_every == 0 || it == cfg.iters) {
      res.log.push_back(row);
      log_file << "iter=" << row.iteration << " d=" << num(row.d_loss) << " adv="
               << num(row.g_adv) << " fm=" << num(row.g_fm) << " rec=" << num(row.g_rec)
               << " div=" << num(row.g_div) << " lum=" << num(row.hole_luminance) << "\n";
      log_file.flush();
    }
    if (it % cfg.ckpt_every == 0)
      save_checkpoint_file(cfg.out + "/ckpt_" + std::to_string(it) + ".pdgk", s);
  }

  res.completed = cfg.iters;
  res.checkpoint_path = cfg.out + "/checkpoint.pdgk";
  save_checkpoint_file(res.checkpoint_path, s);
  return res;
}

SampleResult cmd_sample(const RunConfig& cfg, const std::string& ckpt_path,
                        const std::string& image_path, const std::string& mask_path) {
  cfg.validate();
  const TrainState st = load_checkpoint_file(ckpt_path);
  const Tensor image = read_image_ppm_file(image_path);
  const Mask mask = read_mask_pgm_file(mask_path);
  const Index S = st.cfg.image_size;
  if (image.shape() != Shape::nchw(1, 3, S, S))
    throw ArgumentError("input image is " + image.shape().str() + ", checkpoint expects 1x3x" +
                        std::to_string(S) + "x" + std::to_string(S));
  if (mask.height != S || mask.width != S)
    throw ArgumentError("mask extent does not match the checkpoint image size");
  fs::create_directories(cfg.out);

  std::mt19937_64 rng(cfg.seed);
  Candidates cands = draw_candidates(st, image, mask, cfg.samples, rng);

  SampleResult res;
  res.samples = std::move(cands.samples);
  res.scores = std::move(cands.scores);
  res.ranking = rank_samples(res.scores, static_cast<std::size_t>(cfg.topk));

  for (std::size_t r = 0; r < res.ranking.size(); ++r)
    write_image_ppm_file(cfg.out + "/sample_" + std::to_string(r) + ".ppm",
                         res.samples[res.ranking[r]]);
  res.grid_path = cfg.out + "/grid.ppm";
  write_image_ppm_file(res.grid_path, image_grid(res.samples));

  res.table_path = cfg.out + "/scores.txt";
  std::ofstream table(res.table_path);
  if (!table) throw ArgumentError("cannot open " + res.table_path + " for writing");
  for (std::size_t i = 0; i < res.scores.size(); ++i)
    table << "candidate=" << i << " score=" << num(res.scores[i]) << "\n";
  table << "ranking=";
  for (std::size_t r = 0; r < res.ranking.size(); ++r)
    table << (r ? "," : "") << res.ranking[r];
  table << "\n";
  return res;
}

std::string EvalReport::to_text() const {
  std::string s;
  s += "sanity-psnr=" + num(sanity_psnr) + " sanity-ssim=" + num(sanity_ssim) + "\n";
  for (const BucketQuality& q : quality)
    s += "bucket=" + bucket_name(q.bucket) + " psnr=" + num(q.psnr) + " ssim=" + num(q.ssim) +
         "\n";
  s += "diversity-full=" + num(diversity_full) + " diversity-masked=" + num(diversity_masked) +
       " pairs=" + std::to_string(pair_count) + "\n";
  return s;
}

EvalReport cmd_eval(const RunConfig& cfg, const std::string& ckpt_path,
                    const std::string& manifest_path) {
  cfg.validate();
  const TrainState st = load_checkpoint_file(ckpt_path);
  const auto specs = read_manifest_file(manifest_path);
  if (specs.empty()) throw ArgumentError("evaluation corpus is empty: " + manifest_path);
  const Index S = st.cfg.image_size;
  fs::create_directories(cfg.out);

  std::mt19937_64 rng(cfg.seed);
  EvalReport rep;
  double div_full = 0, div_masked = 0;
  std::size_t div_sets = 0;

  for (const RatioBucket bucket : cfg.buckets) {
    double psnr_sum = 0, ssim_sum = 0;
    for (const SceneSpec& spec : specs) {
      const Tensor gt = synth_image(spec, S, S);
      if (rep.sanity_psnr == 0) {
        rep.sanity_psnr = psnr(gt, gt);
        rep.sanity_ssim = ssim(gt, gt);
      }
      const Mask mask = generate_irregular_mask(S, S, bucket, rng());
      const Candidates cands = draw_candidates(st, gt, mask, cfg.samples, rng);
      const auto ranking = rank_samples(cands.scores, static_cast<std::size_t>(cfg.topk));
      double best_psnr = -1e300, best_ssim = -1e300;
      for (const std::size_t idx : ranking) {
        best_psnr = std::max(best_psnr, psnr(cands.samples[idx], gt));
        best_ssim = std::max(best_ssim, ssim(cands.samples[idx], gt));
      }
      psnr_sum += best_psnr;
      ssim_sum += best_ssim;
      if (cands.samples.size() >= 2) {
        div_full += diversity_score(cands.samples, mask, st.pyramid, false);
        div_masked += diversity_score(cands.samples, mask, st.pyramid, true);
        ++div_sets;
        rep.pair_count += cands.samples.size() * (cands.samples.size() - 1) / 2;
      }
    }
    const double n = static_cast<double>(specs.size());
    rep.quality.push_back(BucketQuality{bucket, psnr_sum / n, ssim_sum / n});
  }
  if (div_sets) {
    rep.diversity_full = div_full / static_cast<double>(div_sets);
    rep.diversity_masked = div_masked / static_cast<double>(div_sets);
  }

  std::ofstream out(cfg.out + "/eval.txt");
  if (!out) throw ArgumentError("cannot open " + cfg.out + "/eval.txt for writing");
  out << rep.to_text();
  return rep;
}

std::vector<std::string> cmd_dump_maps(const RunConfig& cfg, const std::string& mask_path,
                                       const std::string& ckpt_path) {
  const Mask mask = read_mask_pgm_file(mask_path);
  const bool with_soft = !ckpt_path.empty();
  TrainState st;
  if (with_soft) st = load_checkpoint_file(ckpt_path);
  const GeneratorConfig gc = (with_soft ? st.cfg : cfg).generator_config();
  gc.validate();
  fs::create_directories(cfg.out);

  const Tensor prior = Tensor::zeros(Shape::nchw(1, 3, gc.out_h, gc.out_w));
  const StageContext ctx = make_stage_context(prior, {mask}, gc);

  std::vector<std::string> files;
  for (Index s = 0; s < gc.stages(); ++s) {
    const std::string path = cfg.out + "/dh_stage" + std::to_string(s) + ".pgm";
    write_map_pgm_file(path, ctx.dmaps[static_cast<std::size_t>(s)]);
    files.push_back(path);
  }
  if (with_soft) {
    std::mt19937_64 rng(cfg.seed);
    const Tensor z = Tensor::randn(Shape::nchw(1, st.cfg.latent_dim, 1, 1), rng);
    std::vector<Tensor> stage_inputs;
    generate_batch(st.gen, z, ctx, &stage_inputs);
    for (Index s = 0; s < gc.stages(); ++s) {
      const auto si = static_cast<std::size_t>(s);
      const Tensor soft =
          soft_diversity_map(stage_inputs[si], ctx.priors[si], ctx.masks[si],
                             st.gen.blocks[si].soft_main);
      const std::string path = cfg.out + "/ds_stage" + std::to_string(s) + ".pgm";
      write_map_pgm_file(path, soft);
      files.push_back(path);
    }
  }
  return files;
}

int cmd_grad_check(std::ostream& os) {
  int failures = 0;
  auto run = [&](const std::vector<GradCheckReport>& reports) {
    for (const GradCheckReport& r : reports) {
      const bool ok = r.max_relative_error < 1e-3;
      os << (ok ? "ok   " : "FAIL ") << r.op_name << " max_rel=" << num(r.max_relative_error)
         << " points=" << r.tested_point_count << "\n";
      failures += ok ? 0 : 1;
    }
  };
  run(engine_op_gradient_checks());
  run(spdnorm_gradient_checks());
  run(network_gradient_checks());
  run(losses_gradient_checks());
  os << (failures ? "gradient checks FAILED\n" : "gradient checks passed\n");
  return failures;
}

}  // namespace pdgan
