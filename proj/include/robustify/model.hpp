#ifndef ROBUSTIFY_MODEL_HPP
#define ROBUSTIFY_MODEL_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "robustify/parallel.hpp"
#include "robustify/tensor.hpp"

namespace robustify {

// N labeled images; pixels in [0,1], labels are class indices in [0,k).
struct ImageBatch {
    Tensor pixels;
    std::vector<int> labels;

    int size() const { return pixels.n; }
    // Throws ModelError when an invariant is violated. k < 0 skips the
    // label-range check.
    void validate(int k = -1) const;
};

enum class LossKind { kLogit, kCrossEntropy };

// Per-sample scalar losses from logits. Logit loss is J = -z[label];
// cross-entropy is logsumexp(z) - z[label].
std::vector<double> per_sample_loss(const Tensor& logits, const std::vector<int>& labels,
                                    LossKind loss);

// dJ/dz for the selected loss, one row per sample.
Tensor loss_logit_gradient(const Tensor& logits, const std::vector<int>& labels, LossKind loss);

// Abstract differentiable classifier. Implementations are immutable after
// construction (training happens through the TrainableClassifier surface
// before the model is shared), so all const methods are safe to call
// concurrently. Logits are a pure function of (parameters, input).
class GradientClassifier {
public:
    virtual ~GradientClassifier() = default;

    virtual int num_classes() const = 0;
    virtual const std::string& name() const = 0;

    // Pre-softmax scores, shape N x k. The input is a raw pixel tensor and
    // may leave [0,1]; attacks and finite-difference probes rely on that.
    virtual Tensor forward_logits_raw(const Tensor& pixels,
                                      Exec exec = Exec::kParallel) const = 0;

    // Backpropagates dL/dlogits to dL/dpixels. Non-differentiable models
    // keep the default, which throws UnsupportedOperationError.
    virtual Tensor backward_input(const Tensor& pixels, const Tensor& logit_grad,
                                  Exec exec = Exec::kParallel) const;

    // dJ/dpixels for the selected loss. The default composes
    // forward_logits_raw and backward_input; models may fuse the passes.
    virtual Tensor input_gradient_raw(const Tensor& pixels, const std::vector<int>& labels,
                                      LossKind loss, Exec exec = Exec::kParallel) const;

    // Double-precision evaluator J(x) for one image, used by the
    // finite-difference oracle. The default upcasts the float path, which
    // is exact for models whose forward is itself exact in float; models
    // with deep float arithmetic override it with a native double path.
    virtual std::function<double(const double* pixels)> make_double_loss_eval(
        int h, int w, int c, LossKind loss, int label) const;

    // Rejects inputs whose H/W/C do not match the model; default accepts
    // anything (shape-agnostic stubs).
    virtual void validate_input(const Tensor& pixels) const;

    // Checkpoint hooks: architecture id, arch-specific hyperparameters as
    // a JSON string, and the flat parameter array.
    virtual std::string arch_id() const = 0;
    virtual std::string hyper_json() const = 0;
    virtual std::vector<float> flat_params() const = 0;
};

// Classifier whose parameters can be optimized by the trainer.
class TrainableClassifier : public GradientClassifier {
public:
    virtual std::size_t param_count() const = 0;
    virtual void export_params(std::vector<float>& out) const = 0;
    virtual void import_params(const std::vector<float>& in) = 0;

    // Accumulates dJ/dparams for one sample into grad (+=) and returns the
    // sample's loss. grad has param_count() entries.
    virtual double accumulate_param_gradient(const Tensor& image, int label, LossKind loss,
                                             float* grad) const = 0;
};

// Fuses the logits of multiple models: Z = (1/|F|) * sum of member logits.
class EnsembleClassifier final : public GradientClassifier {
public:
    explicit EnsembleClassifier(std::vector<std::shared_ptr<const GradientClassifier>> members);

    int num_classes() const override { return k_; }
    const std::string& name() const override { return name_; }
    std::size_t member_count() const { return members_.size(); }
    const GradientClassifier& member(std::size_t i) const { return *members_[i]; }

    Tensor forward_logits_raw(const Tensor& pixels, Exec exec) const override;
    Tensor backward_input(const Tensor& pixels, const Tensor& logit_grad,
                          Exec exec) const override;
    Tensor input_gradient_raw(const Tensor& pixels, const std::vector<int>& labels, LossKind loss,
                              Exec exec) const override;
    std::function<double(const double*)> make_double_loss_eval(int h, int w, int c, LossKind loss,
                                                               int label) const override;
    void validate_input(const Tensor& pixels) const override;

    std::string arch_id() const override { return "ensemble"; }
    std::string hyper_json() const override;
    std::vector<float> flat_params() const override { return {}; }

private:
    std::vector<std::shared_ptr<const GradientClassifier>> members_;
    int k_;
    std::string name_;
};

// Spec-level operations on validated batches.
Tensor forward_logits(const GradientClassifier& model, const ImageBatch& batch,
                      Exec exec = Exec::kParallel);
Tensor ensemble_logits(const EnsembleClassifier& ensemble, const ImageBatch& batch,
                       Exec exec = Exec::kParallel);
Tensor input_gradient(const GradientClassifier& model, const ImageBatch& batch, LossKind loss,
                      Exec exec = Exec::kParallel);

// Central-difference estimate (J(x+s*e) - J(x-s*e)) / (2s) at the given
// flat pixel indices, evaluated in double precision. Probes may leave
// [0,1]; the oracle operates on raw arrays.
std::vector<double> finite_difference_gradient(const GradientClassifier& model,
                                               const Tensor& image, LossKind loss, int label,
                                               const std::vector<std::size_t>& pixel_indices,
                                               double step);

} // namespace robustify

#endif
