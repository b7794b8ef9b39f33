#pragma once

#include <vector>

#include "pdgan/grad_check.hpp"
#include "pdgan/mask.hpp"
#include "pdgan/network.hpp"

namespace pdgan {

struct LossWeights {
  double w_adv = 1.0;
  double w_fm = 10.0;
  double w_rec = 10.0;
  double w_pdiv = 1.0;
  double epsilon_div = 1e-5;

  void validate() const;  // ArgumentError on a negative weight or epsilon <= 0
};

// Which side of the mask the diversity loss acts on. Hole pushes generated
// content apart inside the missing region; Background exists for ablation.
enum class DiversityGate { Hole, Background };

/// Per-level feature gates for the pyramid: a feature position is gated in
/// only when every input pixel inside its receptive field lies on the chosen
/// side of the mask (out-of-bounds padding taps never disqualify). Returned
/// grids use 1 = gated in.
std::vector<Mask> diversity_gates(const Mask& m, const FeaturePyramid& pyramid,
                                  DiversityGate gate);

/// 1 / (S + eps) where S sums, over pyramid levels, the gated mean absolute
/// feature difference (mean over gated positions, channels and batch; a level
/// with no gated positions contributes nothing). Gradients reach both images;
/// pixels outside the gated side get exactly zero gradient.
Tensor perceptual_diversity_loss(const Tensor& img1, const Tensor& img2, const Mask& m,
                                 const FeaturePyramid& pyramid, double eps,
                                 DiversityGate gate = DiversityGate::Hole);

/// mean|z1 - z2| / (mean|img1 - img2| + eps): rewards distant outputs for
/// distant latents, with the unstable reciprocal-in-pixel-space form.
Tensor conventional_diversity_loss(const Tensor& z1, const Tensor& z2, const Tensor& img1,
                                   const Tensor& img2, double eps);

struct HingeLosses {
  Tensor d;  // mean(relu(1 - real)) + mean(relu(1 + fake))
  Tensor g;  // -mean(fake)
};
HingeLosses hinge_losses(const Tensor& real_scores, const Tensor& fake_scores);

/// Mean over layers of the mean absolute activation difference. Real
/// activations are detached, so only the fake branch receives gradients.
Tensor feature_matching_loss(const std::vector<Tensor>& real_features,
                             const std::vector<Tensor>& fake_features);

/// Pixel mean absolute error plus per-level pyramid feature mean absolute
/// errors.
Tensor reconstruction_loss(const Tensor& output, const Tensor& ground_truth,
                           const FeaturePyramid& pyramid);

std::vector<GradCheckReport> losses_gradient_checks();

}  // namespace pdgan
