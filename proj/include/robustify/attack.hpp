#ifndef ROBUSTIFY_ATTACK_HPP
#define ROBUSTIFY_ATTACK_HPP

#include <cstdint>
#include <vector>

#include "robustify/image.hpp"
#include "robustify/model.hpp"
#include "robustify/rng.hpp"
#include "robustify/tensor.hpp"

namespace robustify {

enum class NormKind { kLinf, kL2 };

const char* to_string(NormKind norm);
NormKind norm_from_string(const std::string& s);

// Norm type, radius, per-iteration step and iteration count, all in [0,1]
// pixel units.
struct PerturbationBudget {
    NormKind norm = NormKind::kLinf;
    double epsilon = 8.0 / 255.0;
    double step_alpha = 2.0 / 255.0;
    int iterations = 20;

    void validate() const;
};

// Transfer-enhancement knobs: momentum decay, smoothing kernel, input
// diversification, and the loss driving the gradient.
struct AttackConfig {
    double momentum_mu = 1.0;
    int kernel_size = 5;
    double kernel_sigma = 3.0;
    double diversify_prob = 0.7;
    double resize_low_fraction = 0.9;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::kLogit;

    void validate() const;
};

// --- projections -----------------------------------------------------------

// Coordinate clamp to [-eps, eps]; idempotent.
void project_linf(Tensor& delta, double epsilon);

// Per-sample rescale onto the l2 ball of radius eps when outside;
// idempotent (re-projection of a projected tensor is the identity).
void project_l2(Tensor& delta, double epsilon);

void project(Tensor& delta, NormKind norm, double epsilon);

// Largest per-sample norm in the batch.
double max_sample_norm(const Tensor& delta, NormKind norm);

// --- step pieces -----------------------------------------------------------

// l-inf: elementwise sign. l2: per-sample gradient / ||gradient||_2.
// An all-zero gradient maps to an all-zero direction in both norms.
Tensor step_direction(const Tensor& gradient, NormKind norm);

// size x size kernel, values proportional to exp(-(i^2+j^2)/(2 sigma^2)),
// normalized to sum 1. Size must be odd.
Kernel2D gaussian_kernel(int size, double sigma);

// Per-channel 2-D convolution with replicate padding; kernel must be
// normalized and no larger than the image.
Tensor smooth_gradient(const Tensor& gradient, const Kernel2D& kernel);

// Random resize-and-pad per image, applied with probability prob. The rng
// is consumed in sample order: one selection draw per image, then (side,
// offset-y, offset-x) when selected. Output shape equals input shape.
Tensor diversify_pixels(const Tensor& pixels, double prob, double resize_low_fraction, Rng& rng);
ImageBatch diversify_input(const ImageBatch& batch, double prob, double resize_low_fraction,
                           Rng& rng);

// J = -z[label] per sample.
std::vector<double> logit_loss(const Tensor& logits, const std::vector<int>& labels);

// g_next = mu * g_prev + gradient / ||gradient||_1, per sample; an
// all-zero gradient contributes a zero second term.
Tensor momentum_update(const Tensor& g_prev, const Tensor& gradient, double mu);

// --- composed iteration ----------------------------------------------------

// One step of the composed transferable attack, in place:
//   delta   <- T(x + delta, p) - x                  (diversification)
//   grad    =  d(-Z^t or CE)/d delta                (at x + delta)
//   g       <- mu * g + grad / ||grad||_1           (momentum)
//   delta   <- Proj_eps(delta + alpha * dir(W * g)) (smooth, step, project)
// dir is sign() for l-inf and norm() for l2.
void attack_iteration(const Tensor& x, Tensor& delta, Tensor& g, const std::vector<int>& labels,
                      const GradientClassifier& model, const PerturbationBudget& budget,
                      const AttackConfig& config, Rng& rng, Exec exec = Exec::kParallel);

// Full attack: seeded uniform init inside the eps ball, then
// budget.iterations composed steps per sample. Samples run independently
// on their own derived rng streams (per_sample_seed(config.seed, i)), so
// the result does not depend on the worker count. x + delta is NOT
// clipped here; clipping happens in combine_dual_norm.
Tensor run_attack(const ImageBatch& batch, const GradientClassifier& model,
                  const PerturbationBudget& budget, const AttackConfig& config,
                  Exec exec = Exec::kParallel);

// Same, with explicit per-sample seeds (used by the enhancement pipeline
// to key streams off each sample's source index).
Tensor run_attack_seeded(const ImageBatch& batch, const GradientClassifier& model,
                         const PerturbationBudget& budget, const AttackConfig& config,
                         const std::vector<std::uint64_t>& sample_seeds,
                         Exec exec = Exec::kParallel);

// x_adv = clip(x + delta_l2 + delta_linf, 0, 1); labels carried over.
ImageBatch combine_dual_norm(const ImageBatch& batch, const Tensor& delta_l2,
                             const Tensor& delta_linf);

} // namespace robustify

#endif
